#pragma once

#include "mathforge/scale.hpp"
#include "mathforge/synthesis.hpp"
#include "mathforge/verify.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mathforge {

struct SweepItem {
    std::string id;
    InstantiatedSample sample;
};

/// Reads augmented samples, SFT records or synthesis records (VERIFIED ones
/// are rebuilt from their original numbers), detected per line.
std::vector<SweepItem> load_sweep_items(const std::filesystem::path& path);

struct SweepFailure {
    std::string id;
    std::string reason;
    std::string detail;
};

struct SweepReport {
    std::size_t total = 0;
    /// Fully instantiated samples that were re-executed.
    std::size_t checked = 0;
    std::size_t passed = 0;
    std::size_t constraint_checked = 0;
    std::vector<SweepFailure> failures;

    bool clean() const { return failures.empty(); }
    Json to_json() const;
};

/// Re-executes every fully instantiated sample and compares it with its
/// recorded answer; a full sample without one fails with NO_EXPECTED_ANSWER.
SweepReport verify_sweep(const std::vector<SweepItem>& items, Executor& executor, const ComparisonPolicy& policy = {},
                         const ExecutionLimits& limits = {}, std::size_t workers = 1);

/// Checks each sample's recorded assignment against the constraints of the
/// record it came from, adding CONSTRAINT_VIOLATION or UNKNOWN_TEMPLATE
/// failures to the report.
void check_constraint_compliance(const std::vector<SweepItem>& items, const std::vector<SynthesisRecord>& records,
                                 SweepReport& report);

} // namespace mathforge
