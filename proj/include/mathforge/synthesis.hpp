#pragma once

#include "mathforge/constraints.hpp"
#include "mathforge/corpus.hpp"
#include "mathforge/jsonl.hpp"
#include "mathforge/masking.hpp"
#include "mathforge/scale.hpp"
#include "mathforge/template.hpp"
#include "mathforge/verify.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mathforge {

inline constexpr std::string_view kHeaderGeneralQuestion = "### General Question";
inline constexpr std::string_view kHeaderExtractedNumbers = "### Extracted Numbers";
inline constexpr std::string_view kHeaderUnifiedProgram = "### Unified Program";
inline constexpr std::string_view kHeaderConstraints = "### Constraints";

/// Name of the environment variable holding the LLM API key.
inline constexpr std::string_view kApiKeyEnv = "MATHFORGE_API_KEY";

enum class CacheMode { Record, Replay, Off };
std::string_view cache_mode_name(CacheMode mode);
std::optional<CacheMode> parse_cache_mode(std::string_view text);

struct CompletionParams {
    std::string model = "gpt-4o";
    double temperature = 0.0;
    std::chrono::milliseconds timeout{120'000};
};

/// complete() returns the model's text or throws Error(ClientError).
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const std::string& prompt, const CompletionParams& params) = 0;
};

/// sha256 over model, temperature and prompt.
std::string cache_key(std::string_view prompt, std::string_view model, double temperature);

/// Append-only JSONL response cache {key, model, prompt_digest, response,
/// timestamp}. Concurrent readers; appends are serialized.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path path);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& model, const std::string& prompt, const std::string& response);
    std::size_t size() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::map<std::string, std::string> entries_;
    mutable std::shared_mutex mutex_;
    std::unique_ptr<AppendLog> log_;
};

/// RECORD: serve hits, forward misses and persist them. REPLAY: serve hits,
/// throw Error(CacheMiss) otherwise; never touches the inner client. OFF:
/// always forward.
class CachingClient : public LlmClient {
public:
    CachingClient(LlmClient* inner, ResponseCache* cache, CacheMode mode);
    std::string complete(const std::string& prompt, const CompletionParams& params) override;

private:
    LlmClient* inner_;
    ResponseCache* cache_;
    CacheMode mode_;
};

/// OpenAI-compatible chat-completions client with a global request-rate
/// limit. The API key comes from the environment and is never logged.
struct HttpClientConfig {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string api_key_env{kApiKeyEnv};
    double requests_per_second = 2.0;
};

class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(HttpClientConfig config);
    std::string complete(const std::string& prompt, const CompletionParams& params) override;

private:
    HttpClientConfig config_;
    std::mutex rate_mutex_;
    std::chrono::steady_clock::time_point next_slot_{};
};

/// A curated worked example for one source format.
struct InContextExample {
    std::string problem;
    std::vector<std::string> choices;
    std::string response;
};

const InContextExample& example_for(Source source);

struct PromptOptions {
    /// Replaces the built-in prompt. Recognized fields: {{example}},
    /// {{problem}}, {{options}}.
    std::optional<std::string> template_text;
};

std::string default_prompt_template();
std::string build_multitask_prompt(const SourceProblem& problem, const PromptOptions& options = {});

struct ParsedSynthesis {
    std::string general_question;
    std::vector<std::pair<std::string, std::string>> extracted_numbers;
    std::string unified_program;
    UnifiedProgram program;
    std::string constraints_text;
    std::vector<VariableConstraint> constraints;
    std::string raw_response;
};

/// Locates the four fixed sections and enforces cross-section consistency.
/// Throws Error with MissingSection, BadNumberLiteral, PlaceholderMismatch,
/// TemplateInvalid, MalformedLine, MissingConstraint or
/// OriginalValueViolates. Never throws anything else.
ParsedSynthesis parse_response(std::string_view text, const TemplateOptions& options = {});

/// Bug-fix rounds return only a Unified Program; its parameters must match
/// the previous round's.
UnifiedProgram parse_program_response(std::string_view text, const std::vector<std::string>& expected_parameters,
                                      const TemplateOptions& options = {});

/// Section bodies keyed by name without the "### " prefix.
std::map<std::string, std::string> split_sections(std::string_view text);

enum class SynthesisStatus { Verified, ParseFailed, ExecFailed, WrongAnswer, BudgetExhausted };
std::string_view synthesis_status_name(SynthesisStatus status);
std::optional<SynthesisStatus> parse_synthesis_status(std::string_view text);

struct RoundVerification {
    bool pass = false;
    /// PASS, EXEC_FAILED or WRONG_ANSWER.
    std::string verdict;
    std::string exec_status;
    std::optional<std::string> value_line;
    std::string stderr_text;
    std::string reason;

    friend bool operator==(const RoundVerification&, const RoundVerification&) = default;
};

struct SynthesisRound {
    std::size_t index = 0;
    /// "multitask" or "bugfix".
    std::string kind;
    std::string prompt;
    std::string response;
    std::optional<std::string> parse_error;
    std::optional<std::string> program;
    std::optional<RoundVerification> verification;

    friend bool operator==(const SynthesisRound&, const SynthesisRound&) = default;
};

struct SynthesisRecord {
    std::string problem_id;
    Source source = Source::Gsm8k;
    std::string question;
    GroundTruthAnswer truth;
    std::optional<std::vector<std::string>> choices;
    std::string general_question;
    std::vector<std::pair<std::string, std::string>> extracted_numbers;
    std::string constraints_text;
    std::optional<MaskedQuestion> masked;
    std::vector<std::string> crosscheck_warnings;
    std::vector<SynthesisRound> rounds;
    SynthesisStatus status = SynthesisStatus::ParseFailed;
    std::optional<UnifiedProgram> final_template;
    std::string failure;

    friend bool operator==(const SynthesisRecord&, const SynthesisRecord&) = default;
};

/// Keeps the program's own traceback frames (its file shown as "program") and
/// the final exception line, so feedback never depends on scratch paths.
std::string condense_error_output(std::string_view stderr_text);

/// Throws Error(NoPriorRound) when no round has a parsed program.
std::string build_bugfix_prompt(const SynthesisRecord& record, const ExecutionResult& feedback,
                                const GroundTruthAnswer& truth);

struct SynthesisConfig {
    CompletionParams completion;
    std::size_t max_fix_rounds = 1;
    /// Extra attempts after a CLIENT_ERROR before BUDGET_EXHAUSTED.
    std::size_t max_client_retries = 3;
    std::chrono::milliseconds retry_backoff{500};
    PromptOptions prompt;
    TemplateOptions template_options;
    ExecutionLimits limits;
    ComparisonPolicy policy;
};

/// Round 1 multi-task prompt, parse, full instantiation with the original
/// numbers and verification; then up to max_fix_rounds bug-fix rounds.
/// SANDBOX_FAILURE and CACHE_MISS abort with an Error.
SynthesisRecord synthesize(const SourceProblem& problem, LlmClient& client, Executor& executor,
                           const SynthesisConfig& config);

std::vector<SynthesisRecord> synthesize_all(const std::vector<SourceProblem>& problems, LlmClient& client,
                                            Executor& executor, const SynthesisConfig& config, std::size_t workers);

Json record_to_json(const SynthesisRecord& record);
SynthesisRecord record_from_json(const Json& j);
std::vector<SynthesisRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<SynthesisRecord>& records);

Json masked_to_json(const MaskedQuestion& masked);
MaskedQuestion masked_from_json(const Json& j);

/// Augmentation input for a VERIFIED record; nullopt otherwise.
std::optional<TemplateJob> template_job(const SynthesisRecord& record);

} // namespace mathforge
