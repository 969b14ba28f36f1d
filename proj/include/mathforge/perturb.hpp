#pragma once

#include "mathforge/synthesis.hpp"
#include "mathforge/verify.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mathforge {

enum class ReviewStatus { Auto, HumanApproved, HumanRejected };

std::string_view review_status_name(ReviewStatus status);
/// Also accepts "approve"/"approved"/"reject"/"rejected", any case.
std::optional<ReviewStatus> parse_review_status(std::string_view text);

struct PerturbedVariant {
    std::string question;
    GroundTruthAnswer expected;
    /// Only the original variant keeps its answer options.
    std::optional<std::vector<std::string>> choices;
    /// Canonical value text per parameter; empty for the original.
    std::map<std::string, std::string> assignment;
};

/// variants[0] is the source problem verbatim.
struct PerturbedGroup {
    std::string group_id;
    Source source = Source::Gsm8k;
    std::string template_digest;
    std::vector<PerturbedVariant> variants;
    ReviewStatus review = ReviewStatus::Auto;
    std::string review_note;
};

struct PerturbPlan {
    std::size_t n_new = 2;
    std::uint64_t seed = 0;
    /// Assignment draws per problem before it is excluded.
    std::size_t max_draws = 200;
    std::size_t max_attempts = 1000;
};

struct PerturbExclusion {
    std::string problem_id;
    std::string reason;
};

struct ReviewItem {
    std::string group_id;
    std::string decision;
    std::string note;
};

struct PlusSet {
    std::vector<PerturbedGroup> groups;
    std::vector<PerturbExclusion> exclusions;
    std::vector<ReviewItem> worklist;

    std::size_t item_count() const;
};

/// One group per VERIFIED record; other records are excluded with their
/// status as the reason.
PlusSet build_plus_set(const std::vector<SynthesisRecord>& records, const PerturbPlan& plan, Executor& executor,
                       std::size_t workers = 1, const ExecutionLimits& limits = {});

struct GroupScore {
    std::string group_id;
    std::size_t variants = 0;
    std::size_t correct = 0;
};

struct ConsistencyReport {
    std::size_t total_groups = 0;
    std::size_t x = 0;
    std::size_t y = 0;
    /// 100 * y / x at full precision; absent when x == 0.
    std::optional<double> ratio;
    std::vector<GroupScore> rows;

    Json to_json() const;
};

/// Keyed by (group id, variant index). Missing answers count as incorrect.
using AnswerMap = std::map<std::pair<std::string, std::size_t>, std::string>;

ConsistencyReport score_consistency(const std::vector<PerturbedGroup>& groups, const AnswerMap& answers,
                                    const ComparisonPolicy& policy = {});

/// 100 * y / x rounded half-up to one decimal, e.g. "56.0". Requires x > 0.
std::string format_ratio(std::uint64_t x, std::uint64_t y);

/// Sets review statuses and drops HUMAN_REJECTED groups.
/// Throws Error(UnknownGroupId).
std::vector<PerturbedGroup> apply_review(std::vector<PerturbedGroup> groups, const std::vector<ReviewItem>& decisions);

void write_plus_set(const std::filesystem::path& path, const std::vector<PerturbedGroup>& groups);
std::vector<PerturbedGroup> read_plus_set(const std::filesystem::path& path);
AnswerMap read_answers(const std::filesystem::path& path);
void write_review(const std::filesystem::path& path, const std::vector<ReviewItem>& items);
std::vector<ReviewItem> read_review(const std::filesystem::path& path);

} // namespace mathforge
