#pragma once

#include "mathforge/jsonl.hpp"
#include "mathforge/number.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mathforge {

/// The seven source corpora, in the column order used by every stats table.
enum class Source { AquaRat, Gsm8k, Math, NumGlue, MathQa, TheoremQa, DeepMindMath };

inline constexpr std::array<Source, 7> kAllSources = {
    Source::AquaRat, Source::Gsm8k,     Source::Math,         Source::NumGlue,
    Source::MathQa,  Source::TheoremQa, Source::DeepMindMath,
};

/// Enum tag as written on disk, e.g. "GSM8K".
std::string_view source_name(Source source);
/// Short lowercase prefix used in problem ids, e.g. "gsm8k".
std::string_view source_tag(Source source);
/// Accepts the enum tag or the id prefix, case-insensitively.
std::optional<Source> parse_source(std::string_view text);
bool is_multiple_choice(Source source);

enum class AnswerKind { Numeric, Choice, Text };

std::string_view answer_kind_name(AnswerKind kind);
std::optional<AnswerKind> parse_answer_kind(std::string_view text);

struct GroundTruthAnswer {
    AnswerKind kind = AnswerKind::Text;
    std::optional<Number> numeric_value;
    std::optional<char> choice_label;
    std::optional<std::string> text_value;
    std::string raw;
    /// Text of the labelled option for CHOICE answers when the options are known.
    std::optional<std::string> choice_text;

    /// The value in the form normalize_answer maps back to itself.
    std::string render() const;

    friend bool operator==(const GroundTruthAnswer&, const GroundTruthAnswer&) = default;
};

struct SourceProblem {
    std::string id;
    Source source = Source::Gsm8k;
    std::string question;
    GroundTruthAnswer answer;
    std::optional<std::vector<std::string>> choices;
    std::map<std::string, std::string> meta;

    friend bool operator==(const SourceProblem&, const SourceProblem&) = default;
};

/// Collapses runs of whitespace to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// Total: TEXT is the fallback when nothing numeric or choice-like applies.
GroundTruthAnswer normalize_answer(std::string_view raw, Source source);

struct Reject {
    std::filesystem::path file;
    std::size_t index = 0;
    std::string reason;
};

struct LoadResult {
    std::vector<SourceProblem> problems;
    std::vector<Reject> rejects;
    std::size_t input_records = 0;
};

struct LoadOptions {
    /// Running index of the first record; lets several files of one source be
    /// concatenated under unique ids.
    std::size_t first_index = 0;
    /// Rejects are appended here (one JSON line each) when set.
    AppendLog* rejects_log = nullptr;
};

/// Reads one file in the declared source format. Accepts JSON arrays and
/// line-delimited JSON; DeepMind-Mathematics also accepts its plain
/// question/answer line-pair text format.
LoadResult load_dataset(const std::filesystem::path& path, Source format, const LoadOptions& options = {});

/// Per-source question counts in canonical source order, plus the total.
struct CorpusCounts {
    std::array<std::size_t, 7> per_source{};
    std::size_t total = 0;

    std::size_t count(Source source) const;
};

CorpusCounts corpus_stats(const std::vector<SourceProblem>& problems);

/// Normalized on-disk record {id, source, question, answer_kind, answer_raw,
/// answer_value, choices, meta}.
Json to_record(const SourceProblem& problem);
SourceProblem from_record(const Json& record);

/// {kind, raw, value[, choice_text]} as embedded in downstream records.
Json answer_to_json(const GroundTruthAnswer& answer);
GroundTruthAnswer answer_from_json(const Json& record);
GroundTruthAnswer answer_from_parts(const std::string& kind, const std::string& raw, const std::string& value);

std::vector<SourceProblem> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<SourceProblem>& problems);

} // namespace mathforge
