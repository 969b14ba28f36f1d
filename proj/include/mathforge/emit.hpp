#pragma once

#include "mathforge/scale.hpp"
#include "mathforge/synthesis.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mathforge {

/// One sample eligible for instruction tuning, before emission options apply.
struct SftInput {
    Source source = Source::Gsm8k;
    /// "orig" for the verified source problem, the augmented id otherwise.
    std::string variant;
    InstantiatedSample sample;
};

/// The original problem of every VERIFIED record, fully instantiated.
std::vector<SftInput> sft_inputs_from_records(const std::vector<SynthesisRecord>& records);
std::vector<SftInput> sft_inputs_from_augmented(const std::vector<AugmentedSample>& samples);

std::string default_instruction_preamble();

struct SftOptions {
    bool strip_docstrings = false;
    bool include_symbolic = false;
    /// "{{question}}" marks where the question goes; without it the question
    /// follows the preamble after a blank line.
    std::string preamble = default_instruction_preamble();
};

struct SftRecord {
    std::string instruction;
    std::string output;
    Json provenance;
};

std::string assignment_digest(const std::map<std::string, std::string>& assignment);

/// Sorted by (source, problem id, variant). Throws Error(EmptyInput) when
/// nothing survives the filters.
std::vector<SftRecord> emit_sft(std::vector<SftInput> inputs, const SftOptions& options = {});

void write_sft(const std::filesystem::path& path, const std::vector<SftRecord>& records);
std::vector<SftRecord> read_sft(const std::filesystem::path& path);

/// 100 * samples / questions rounded half-up to two decimals, e.g. "97.07".
/// Throws Error(ZeroQuestions).
std::string success_rate(std::uint64_t samples, std::uint64_t questions);

struct StatsRow {
    Source source = Source::Gsm8k;
    std::uint64_t samples = 0;
    std::uint64_t questions = 0;
    std::string rate;
};

struct StatsTable {
    /// Canonical source order; sources absent from both inputs are omitted.
    std::vector<StatsRow> rows;
    std::uint64_t total_samples = 0;
    std::uint64_t total_questions = 0;

    std::string render_text() const;
    Json to_json() const;
};

/// Samples are VERIFIED records per source. Throws Error(ZeroQuestions) for a
/// source that has records but no corpus questions, and Error(SchemaMismatch)
/// for a record whose problem is not in the corpus.
StatsTable compute_stats(const std::vector<SynthesisRecord>& records, const std::vector<SourceProblem>& corpus);

/// Named counters; reports from separate shards add up.
struct RunReport {
    std::map<std::string, std::uint64_t> counts;

    void add(const std::string& key, std::uint64_t n = 1);
    void merge(const RunReport& other);
    std::string render_text() const;
    Json to_json() const;
};

RunReport emit_report(const std::vector<SynthesisRecord>& records, const AugmentationReport* augmentation = nullptr);

} // namespace mathforge
