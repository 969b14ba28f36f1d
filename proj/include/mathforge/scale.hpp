#pragma once

#include "mathforge/constraints.hpp"
#include "mathforge/corpus.hpp"
#include "mathforge/rng.hpp"
#include "mathforge/template.hpp"
#include "mathforge/verify.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mathforge {

/// Default sampling grid for a constraint: its step, else 1 for INT and
/// 10^-d for FLOAT where d is the largest number of decimals among the
/// bounds and the original value.
Number default_step(const VariableConstraint& c);

/// Aligns constraint types with the question surface: a variable whose
/// numeral is written as an integer is sampled as INT.
std::vector<VariableConstraint> coerce_to_bindings(std::vector<VariableConstraint> constraints,
                                                   const MaskedQuestion& masked);

/// Rejection sampling on each variable's grid until every predicate holds.
/// Throws Error(SamplingExhausted) after max_attempts draws.
std::map<std::string, Number> sample_assignment(const std::vector<VariableConstraint>& constraints, Rng& rng,
                                                std::size_t max_attempts = 1000);

/// Everything augmentation needs from one verified synthesis record.
struct TemplateJob {
    std::string problem_id;
    Source source = Source::Gsm8k;
    GroundTruthAnswer truth;
    MaskedQuestion masked;
    UnifiedProgram program;
    std::vector<VariableConstraint> constraints;
};

struct AugmentationPlan {
    /// Assignment draws per template.
    std::size_t budget = 1;
    /// Emit partially instantiated (symbolic) variants too: the 2^k-1 scheme.
    bool include_symbolic = false;
    /// Above this k the selectors are sampled instead of enumerated.
    std::size_t selector_cap = 16;
    /// Selectors drawn per assignment when k exceeds the cap.
    std::size_t sampled_selectors = 32;
    std::uint64_t seed = 0;
    bool dedup = true;
    std::size_t max_attempts = 1000;
};

struct AugmentedSample {
    InstantiatedSample sample;
    Source source = Source::Gsm8k;
    std::uint64_t seed = 0;
    std::size_t draw = 0;

    friend bool operator==(const AugmentedSample&, const AugmentedSample&) = default;
};

/// Named counters; merging reports adds them.
struct AugmentationReport {
    std::map<std::string, std::size_t> counts;

    void add(const std::string& key, std::size_t n = 1) { counts[key] += n; }
    std::size_t get(const std::string& key) const;
    void merge(const AugmentationReport& other);
    Json to_json() const;
};

/// Digest of the whitespace-normalized question and the program text.
std::string dedup_key(const InstantiatedSample& sample);

/// Turns a program's printed value into the new ground truth, applying the
/// validity filters. Returns the filter name on rejection.
struct ValueCheck {
    std::optional<GroundTruthAnswer> answer;
    std::string rejection;
};
ValueCheck check_augmented_value(const std::string& value_line, const UnifiedProgram& program,
                                 const GroundTruthAnswer& seed_truth);

/// Draws plan.budget assignments from a stream seeded by (plan.seed,
/// template digest), instantiates every selector in the plan, executes full
/// variants and syntax-checks symbolic ones.
std::vector<AugmentedSample> augment(const TemplateJob& job, const AugmentationPlan& plan, Executor& executor,
                                     AugmentationReport& report, const ExecutionLimits& limits = {});

/// Runs augment over many jobs on a worker pool; output order follows the
/// job order.
std::vector<AugmentedSample> augment_all(const std::vector<TemplateJob>& jobs, const AugmentationPlan& plan,
                                         Executor& executor, AugmentationReport& report, std::size_t workers,
                                         const ExecutionLimits& limits = {});

Json augmented_to_json(const AugmentedSample& sample);
AugmentedSample augmented_from_json(const Json& record);

Json sample_to_json(const InstantiatedSample& sample);
InstantiatedSample sample_from_json(const Json& record);

} // namespace mathforge
