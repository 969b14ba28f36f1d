#include "mathforge/synthesis.hpp"

#include "mathforge/digest.hpp"
#include "mathforge/error.hpp"
#include "mathforge/parallel.hpp"

#include <algorithm>
#include <ctime>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

namespace mathforge {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(start, end - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(std::move(line));
        if (end == text.size()) break;
        start = end + 1;
    }
    return out;
}

std::string section_name(std::string_view header) {
    return std::string(header.substr(4));
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string fenced_program(const std::string& body) {
    auto lines = split_lines(body);
    std::size_t open = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).starts_with("```")) {
            open = i;
            break;
        }
    }
    std::string program;
    if (open == lines.size()) {
        program = body;
    } else {
        for (std::size_t i = open + 1; i < lines.size(); ++i) {
            if (trim(lines[i]).starts_with("```")) break;
            program += lines[i];
            program += '\n';
        }
    }
    while (!program.empty() && (program.back() == '\n' || program.back() == ' ' || program.back() == '\t')) {
        program.pop_back();
    }
    std::size_t lead = 0;
    while (lead < program.size() && program[lead] == '\n') ++lead;
    program.erase(0, lead);
    program.push_back('\n');
    return program;
}

std::string clean_literal(std::string lit) {
    lit = trim(lit);
    if (auto hash = lit.find(" #"); hash != std::string::npos) lit = trim(lit.substr(0, hash));
    auto strip_pair = [&](char a, char b) {
        if (lit.size() >= 2 && lit.front() == a && lit.back() == b) lit = trim(lit.substr(1, lit.size() - 2));
    };
    strip_pair('`', '`');
    strip_pair('"', '"');
    strip_pair('\'', '\'');
    for (std::string_view prefix : {"\\$", "$", "€", "£", "¥"}) {
        if (lit.starts_with(prefix)) {
            lit = trim(lit.substr(prefix.size()));
            break;
        }
    }
    if (lit.size() > 1 && lit.back() == '.' && lit.find('.') == lit.size() - 1) lit.pop_back();
    return lit;
}

std::optional<Number> literal_value(const std::string& literal) {
    if (auto p = parse_number_literal(literal)) return p->first;
    return Number::parse(literal);
}

std::string join_params(const std::vector<std::string>& params) {
    std::string out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) out += ", ";
        out += params[i];
    }
    return out;
}

UnifiedProgram validated(const std::string& source, const TemplateOptions& options) {
    try {
        return validate_program(source, options);
    } catch (const Error& e) {
        throw Error(ErrorCode::TemplateInvalid, e.what());
    }
}

std::string options_block(const std::vector<std::string>& choices) {
    if (choices.empty()) return {};
    std::string out = "Options:\n";
    for (const auto& c : choices) out += c + "\n";
    out += "The program must return the value of the correct option, not its letter.\n";
    return out;
}

std::string render_example(const InContextExample& ex) {
    std::string out = "Example problem:\n" + ex.problem + "\n";
    out += options_block(ex.choices);
    out += "\nExample response:\n" + ex.response;
    if (!out.ends_with('\n')) out.push_back('\n');
    return out;
}

std::string truth_text(const GroundTruthAnswer& truth) {
    if (truth.kind == AnswerKind::Choice && truth.choice_label) {
        std::string s(1, *truth.choice_label);
        if (truth.choice_text) s += " (" + *truth.choice_text + ")";
        return s;
    }
    return truth.render();
}

struct ProgramCheck {
    RoundVerification verification;
    ExecutionResult execution;
};

ProgramCheck check_program(const UnifiedProgram& program, const MaskedQuestion& masked, const SourceProblem& problem,
                           Executor& executor, const SynthesisConfig& config) {
    ProgramCheck out;
    auto& v = out.verification;
    std::map<std::string, Number> originals;
    for (const auto& b : masked.bindings) originals[b.name] = b.span.value;
    std::set<std::string> all(program.parameters.begin(), program.parameters.end());
    InstantiatedSample sample;
    try {
        sample = instantiate(program, masked, originals, all, problem.id);
    } catch (const Error& e) {
        v.verdict = "EXEC_FAILED";
        v.exec_status = "NOT_RUN";
        v.reason = to_string(e.code());
        v.stderr_text = e.what();
        out.execution.status = ExecStatus::RuntimeError;
        out.execution.stderr_text = e.what();
        return out;
    }
    out.execution = executor.execute(sample.program, config.limits);
    if (out.execution.status == ExecStatus::SandboxFailure) {
        throw Error(ErrorCode::SandboxFailure, out.execution.stderr_text);
    }
    out.execution.stderr_text = condense_error_output(out.execution.stderr_text);
    v.exec_status = std::string(exec_status_name(out.execution.status));
    v.value_line = out.execution.value_line;
    v.stderr_text = out.execution.stderr_text;
    if (out.execution.status != ExecStatus::Ok) {
        v.verdict = "EXEC_FAILED";
        v.reason = v.exec_status;
        return out;
    }
    auto cmp = compare_answers(*out.execution.value_line, problem.answer, config.policy);
    v.pass = cmp.equal;
    v.verdict = cmp.equal ? "PASS" : "WRONG_ANSWER";
    v.reason = cmp.reason;
    return out;
}

std::optional<std::string> call_llm(LlmClient& client, const std::string& prompt, const SynthesisConfig& config,
                                    std::string& failure) {
    auto backoff = config.retry_backoff;
    for (std::size_t attempt = 0; attempt <= config.max_client_retries; ++attempt) {
        try {
            return client.complete(prompt, config.completion);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ClientError) throw;
            failure = e.what();
        }
        if (attempt < config.max_client_retries && backoff.count() > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    return std::nullopt;
}

} // namespace

std::string_view cache_mode_name(CacheMode mode) {
    switch (mode) {
    case CacheMode::Record: return "record";
    case CacheMode::Replay: return "replay";
    case CacheMode::Off: return "off";
    }
    return "off";
}

std::optional<CacheMode> parse_cache_mode(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (auto m : {CacheMode::Record, CacheMode::Replay, CacheMode::Off}) {
        if (cache_mode_name(m) == lower) return m;
    }
    return std::nullopt;
}

std::string cache_key(std::string_view prompt, std::string_view model, double temperature) {
    std::string material(model);
    material.push_back('\0');
    material += shortest_decimal(temperature);
    material.push_back('\0');
    material += prompt;
    return sha256_hex(material);
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    std::error_code ec;
    if (std::filesystem::exists(path_, ec) && std::filesystem::file_size(path_, ec) > 0) {
        for (const auto& j : read_jsonl(path_)) {
            try {
                entries_.emplace(j.at("key").get<std::string>(), j.at("response").get<std::string>());
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::SchemaMismatch, "cache record: " + std::string(e.what()));
            }
        }
    }
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& model, const std::string& prompt,
                        const std::string& response) {
    std::unique_lock lock(mutex_);
    if (entries_.contains(key)) return;
    if (!log_) log_ = std::make_unique<AppendLog>(path_);
    Json j;
    j["key"] = key;
    j["model"] = model;
    j["prompt_digest"] = sha256_hex(prompt);
    j["response"] = response;
    j["timestamp"] = utc_timestamp();
    log_->append(j);
    entries_.emplace(key, response);
}

std::size_t ResponseCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

CachingClient::CachingClient(LlmClient* inner, ResponseCache* cache, CacheMode mode)
    : inner_(inner), cache_(cache), mode_(mode) {}

std::string CachingClient::complete(const std::string& prompt, const CompletionParams& params) {
    if (mode_ != CacheMode::Off && cache_) {
        std::string key = cache_key(prompt, params.model, params.temperature);
        if (auto hit = cache_->get(key)) return *hit;
        if (mode_ == CacheMode::Replay) throw Error(ErrorCode::CacheMiss, key);
        if (!inner_) throw Error(ErrorCode::ClientError, "no LLM client configured");
        std::string response = inner_->complete(prompt, params);
        cache_->put(key, params.model, prompt, response);
        return response;
    }
    if (mode_ == CacheMode::Replay) throw Error(ErrorCode::CacheMiss, "no cache configured");
    if (!inner_) throw Error(ErrorCode::ClientError, "no LLM client configured");
    return inner_->complete(prompt, params);
}

std::string default_prompt_template() {
    return R"(You are given a math problem. Rewrite it in a number-independent form and write one program that solves every problem of that form.

Answer with exactly four sections, in this order, using the section headers shown in the example response:
1. General Question: the problem text with every numeric constant replaced by a placeholder in braces such as {n1}, {n2}. Keep all other text unchanged, character for character.
2. Extracted Numbers: one line per placeholder, `name = value`, with the number exactly as it is written in the problem.
3. Unified Program: one Python function `def solution(...)` in a fenced code block. Its parameters are exactly the placeholders, in order. The function starts with a docstring made of a purpose line, one `:param name:` line per parameter in parameter order and one `:return:` line. Comment every line of the body. Do not call the function or print anything, and do not use randomness, the clock, files or the network. Only math, fractions, decimal, statistics, itertools, functools, cmath, sympy and numpy may be imported.
4. Constraints: one line per placeholder, `name: int|float in [low, high]; criteria`, giving the ranges and rules under which the problem still makes sense (for example that a number of people is an integer).

{{example}}
Now do the same for the following problem.

Problem:
{{problem}}
{{options}})";
}

std::string build_multitask_prompt(const SourceProblem& problem, const PromptOptions& options) {
    std::string prompt = options.template_text ? *options.template_text : default_prompt_template();
    std::string example = render_example(example_for(problem.source));
    std::string opts = problem.choices ? options_block(*problem.choices) : std::string();
    // substitute the example last so its braces are never re-read as fields
    replace_all(prompt, "{{problem}}", "\x01problem\x01");
    replace_all(prompt, "{{options}}", "\x01options\x01");
    replace_all(prompt, "{{example}}", "\x01example\x01");
    replace_all(prompt, "\x01options\x01", opts);
    replace_all(prompt, "\x01problem\x01", problem.question);
    replace_all(prompt, "\x01example\x01", example);
    if (!prompt.ends_with('\n')) prompt.push_back('\n');
    return prompt;
}

std::map<std::string, std::string> split_sections(std::string_view text) {
    std::map<std::string, std::string> sections;
    std::optional<std::string> current;
    std::vector<std::string> body;
    bool in_fence = false;
    auto flush = [&] {
        if (!current) return;
        while (!body.empty() && trim(body.back()).empty()) body.pop_back();
        std::size_t first = 0;
        while (first < body.size() && trim(body[first]).empty()) ++first;
        std::string joined;
        for (std::size_t i = first; i < body.size(); ++i) {
            joined += body[i];
            if (i + 1 < body.size()) joined += '\n';
        }
        sections.emplace(*current, joined);
        body.clear();
    };
    for (const auto& line : split_lines(text)) {
        std::string t = trim(line);
        if (t.starts_with("```")) in_fence = !in_fence;
        if (!in_fence && t.starts_with("###") && !t.starts_with("####")) {
            flush();
            std::string name = trim(t.substr(3));
            while (!name.empty() && (name.back() == ':' || name.back() == ' ')) name.pop_back();
            current = name;
            continue;
        }
        if (current) body.push_back(line);
    }
    flush();
    return sections;
}

ParsedSynthesis parse_response(std::string_view text, const TemplateOptions& options) {
    try {
        auto sections = split_sections(text);
        auto require = [&](std::string_view header) -> const std::string& {
            auto it = sections.find(section_name(header));
            if (it == sections.end()) throw Error(ErrorCode::MissingSection, section_name(header));
            return it->second;
        };
        ParsedSynthesis out;
        out.raw_response = std::string(text);
        out.general_question = trim(require(kHeaderGeneralQuestion));
        const std::string& numbers = require(kHeaderExtractedNumbers);
        const std::string& program = require(kHeaderUnifiedProgram);
        out.constraints_text = require(kHeaderConstraints);

        static const std::regex kNumberLine(R"(^\s*(?:[-*]\s*)?`?([A-Za-z_]\w*)`?\s*[=:]\s*(.*?)\s*$)");
        std::map<std::string, Number> values;
        for (const auto& line : split_lines(numbers)) {
            if (trim(line).empty()) continue;
            std::smatch m;
            if (!std::regex_match(line, m, kNumberLine)) throw Error(ErrorCode::BadNumberLiteral, trim(line));
            std::string name = m[1].str();
            std::string literal = clean_literal(m[2].str());
            auto value = literal_value(literal);
            if (!value) throw Error(ErrorCode::BadNumberLiteral, name);
            if (values.contains(name)) throw Error(ErrorCode::PlaceholderMismatch, "duplicate number " + name);
            values.emplace(name, *value);
            out.extracted_numbers.emplace_back(name, literal);
        }

        auto placeholders = placeholder_names(out.general_question);
        std::set<std::string> placeholder_set(placeholders.begin(), placeholders.end());
        if (placeholder_set.size() != placeholders.size()) {
            throw Error(ErrorCode::PlaceholderMismatch, "a placeholder is used more than once");
        }
        std::set<std::string> number_set;
        for (const auto& [name, lit] : out.extracted_numbers) number_set.insert(name);
        if (placeholder_set != number_set) {
            throw Error(ErrorCode::PlaceholderMismatch, "general question placeholders differ from extracted numbers");
        }

        out.unified_program = fenced_program(program);
        out.program = validated(out.unified_program, options);
        std::set<std::string> param_set(out.program.parameters.begin(), out.program.parameters.end());
        if (param_set != placeholder_set) {
            throw Error(ErrorCode::PlaceholderMismatch,
                        "program parameters (" + join_params(out.program.parameters) + ") differ from placeholders");
        }
        out.constraints = parse_constraints(out.constraints_text, out.program.parameters, values);
        return out;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::MissingSection, std::string("unparseable response: ") + e.what());
    }
}

UnifiedProgram parse_program_response(std::string_view text, const std::vector<std::string>& expected_parameters,
                                      const TemplateOptions& options) {
    try {
        auto sections = split_sections(text);
        auto it = sections.find(section_name(kHeaderUnifiedProgram));
        if (it == sections.end()) throw Error(ErrorCode::MissingSection, section_name(kHeaderUnifiedProgram));
        UnifiedProgram program = validated(fenced_program(it->second), options);
        std::set<std::string> got(program.parameters.begin(), program.parameters.end());
        std::set<std::string> want(expected_parameters.begin(), expected_parameters.end());
        if (got != want) {
            throw Error(ErrorCode::PlaceholderMismatch, "corrected program changed its parameters to (" +
                                                            join_params(program.parameters) + ")");
        }
        return program;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::MissingSection, std::string("unparseable response: ") + e.what());
    }
}

std::string_view synthesis_status_name(SynthesisStatus status) {
    switch (status) {
    case SynthesisStatus::Verified: return "VERIFIED";
    case SynthesisStatus::ParseFailed: return "PARSE_FAILED";
    case SynthesisStatus::ExecFailed: return "EXEC_FAILED";
    case SynthesisStatus::WrongAnswer: return "WRONG_ANSWER";
    case SynthesisStatus::BudgetExhausted: return "BUDGET_EXHAUSTED";
    }
    return "PARSE_FAILED";
}

std::optional<SynthesisStatus> parse_synthesis_status(std::string_view text) {
    for (auto s : {SynthesisStatus::Verified, SynthesisStatus::ParseFailed, SynthesisStatus::ExecFailed,
                   SynthesisStatus::WrongAnswer, SynthesisStatus::BudgetExhausted}) {
        if (synthesis_status_name(s) == text) return s;
    }
    return std::nullopt;
}

std::string condense_error_output(std::string_view stderr_text) {
    static const std::regex kFrame(R"re(^\s*File "([^"]*)", line (\d+)(?:, in (.*))?$)re");
    static const std::regex kProgPath(R"re([^\s"']*prog\.src)re");
    auto lines = split_lines(stderr_text);
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) return {};
    bool traceback = false;
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].starts_with("Traceback")) {
            traceback = true;
            kept.clear();
            continue;
        }
        std::smatch m;
        if (!std::regex_match(lines[i], m, kFrame)) continue;
        if (!std::filesystem::path(m[1].str()).filename().string().ends_with("prog.src")) continue;
        std::string frame = "  File \"program\", line " + m[2].str();
        if (m[3].matched) frame += ", in " + m[3].str();
        kept.push_back(frame);
        for (std::size_t k = i + 1; k < lines.size() && lines[k].starts_with("    "); ++k) kept.push_back(lines[k]);
    }
    std::string last = std::regex_replace(lines.back(), kProgPath, "program");
    std::string out;
    if (traceback) {
        out = "Traceback (most recent call last):\n";
        for (const auto& k : kept) out += k + "\n";
    }
    out += last + "\n";
    return out;
}

std::string build_bugfix_prompt(const SynthesisRecord& record, const ExecutionResult& feedback,
                                const GroundTruthAnswer& truth) {
    const SynthesisRound* prior = nullptr;
    for (const auto& r : record.rounds) {
        if (r.program) prior = &r;
    }
    if (!prior) throw Error(ErrorCode::NoPriorRound, record.problem_id);

    std::string out = "The program below was written to solve the following problem, but it does not produce the correct answer.\n\n";
    out += "Problem:\n" + record.question + "\n\n";
    if (record.choices && !record.choices->empty()) out += options_block(*record.choices) + "\n";
    if (!record.general_question.empty()) out += "General question:\n" + record.general_question + "\n\n";
    if (!record.extracted_numbers.empty()) {
        out += "Extracted numbers:\n";
        for (const auto& [name, lit] : record.extracted_numbers) out += name + " = " + lit + "\n";
        out += "\n";
    }
    out += "Program:\n```python\n" + *prior->program;
    if (!prior->program->ends_with('\n')) out += "\n";
    out += "```\n\n";
    if (feedback.status == ExecStatus::Ok) {
        out += "Running the program with the numbers above printed:\n" + feedback.value_line.value_or("") + "\n\n";
    } else {
        out += "Running the program with the numbers above failed (" + std::string(exec_status_name(feedback.status)) +
               ") with this error output:\n" + feedback.stderr_text;
        if (!feedback.stderr_text.ends_with('\n')) out += "\n";
        out += "\n";
    }
    out += "The correct answer is: " + truth_text(truth) + "\n\n";
    out += "Make the smallest change to the program that makes it return the correct answer. Keep the function name, "
           "its parameters and the docstring format. Reply with only the corrected program under the header " +
           std::string(kHeaderUnifiedProgram) + ", in a fenced python code block.\n";
    return out;
}

SynthesisRecord synthesize(const SourceProblem& problem, LlmClient& client, Executor& executor,
                           const SynthesisConfig& config) {
    SynthesisRecord rec;
    rec.problem_id = problem.id;
    rec.source = problem.source;
    rec.question = problem.question;
    rec.truth = problem.answer;
    rec.choices = problem.choices;

    SynthesisRound first;
    first.index = 1;
    first.kind = "multitask";
    first.prompt = build_multitask_prompt(problem, config.prompt);
    std::string client_failure;
    auto response = call_llm(client, first.prompt, config, client_failure);
    if (!response) {
        first.parse_error = client_failure;
        rec.rounds.push_back(std::move(first));
        rec.status = SynthesisStatus::BudgetExhausted;
        rec.failure = client_failure;
        return rec;
    }
    first.response = *response;

    ParsedSynthesis parsed;
    try {
        parsed = parse_response(first.response, config.template_options);
    } catch (const Error& e) {
        first.parse_error = e.what();
        rec.rounds.push_back(std::move(first));
        rec.status = SynthesisStatus::ParseFailed;
        rec.failure = to_string(e.code());
        return rec;
    }
    rec.general_question = parsed.general_question;
    rec.extracted_numbers = parsed.extracted_numbers;
    rec.constraints_text = parsed.constraints_text;
    first.program = parsed.unified_program;

    try {
        auto local = mask_question(problem.question, extract_numbers(problem.question));
        auto report = crosscheck_masking(local, parsed.general_question, parsed.extracted_numbers);
        for (const auto& [kind, detail] : report.warnings) {
            rec.crosscheck_warnings.push_back(std::string(crosscheck_warning_name(kind)) + ": " + detail);
        }
    } catch (const Error&) {
        // the local extractor is advisory only
    }
    rec.masked = mask_from_placeholders(problem.question, parsed.general_question, parsed.extracted_numbers);
    if (!rec.masked) {
        first.parse_error = "ROUNDTRIP_MISMATCH: general question does not render back to the problem";
        first.program.reset();
        rec.rounds.push_back(std::move(first));
        rec.status = SynthesisStatus::ParseFailed;
        rec.failure = "ROUNDTRIP_MISMATCH";
        return rec;
    }

    UnifiedProgram program = parsed.program;
    auto check = check_program(program, *rec.masked, problem, executor, config);
    first.verification = check.verification;
    rec.rounds.push_back(std::move(first));
    if (check.verification.pass) {
        rec.status = SynthesisStatus::Verified;
        rec.final_template = program;
        return rec;
    }
    rec.status = check.verification.verdict == "WRONG_ANSWER" ? SynthesisStatus::WrongAnswer : SynthesisStatus::ExecFailed;
    rec.failure = check.verification.reason;
    ExecutionResult feedback = check.execution;

    for (std::size_t fix = 0; fix < config.max_fix_rounds; ++fix) {
        SynthesisRound round;
        round.index = rec.rounds.size() + 1;
        round.kind = "bugfix";
        round.prompt = build_bugfix_prompt(rec, feedback, problem.answer);
        auto fixed = call_llm(client, round.prompt, config, client_failure);
        if (!fixed) {
            round.parse_error = client_failure;
            rec.rounds.push_back(std::move(round));
            rec.status = SynthesisStatus::BudgetExhausted;
            rec.failure = client_failure;
            return rec;
        }
        round.response = *fixed;
        UnifiedProgram candidate;
        try {
            candidate = parse_program_response(round.response, program.parameters, config.template_options);
        } catch (const Error& e) {
            round.parse_error = e.what();
            rec.rounds.push_back(std::move(round));
            rec.status = SynthesisStatus::ParseFailed;
            rec.failure = to_string(e.code());
            continue;
        }
        round.program = candidate.source;
        auto again = check_program(candidate, *rec.masked, problem, executor, config);
        round.verification = again.verification;
        rec.rounds.push_back(std::move(round));
        if (again.verification.pass) {
            rec.status = SynthesisStatus::Verified;
            rec.final_template = candidate;
            rec.failure.clear();
            return rec;
        }
        rec.status = again.verification.verdict == "WRONG_ANSWER" ? SynthesisStatus::WrongAnswer : SynthesisStatus::ExecFailed;
        rec.failure = again.verification.reason;
        feedback = again.execution;
        program = candidate;
    }
    return rec;
}

std::vector<SynthesisRecord> synthesize_all(const std::vector<SourceProblem>& problems, LlmClient& client,
                                            Executor& executor, const SynthesisConfig& config, std::size_t workers) {
    std::vector<SynthesisRecord> out(problems.size());
    parallel_for(problems.size(), workers, [&](std::size_t i) { out[i] = synthesize(problems[i], client, executor, config); });
    return out;
}

Json masked_to_json(const MaskedQuestion& masked) {
    Json j;
    j["template"] = masked.template_text;
    j["bindings"] = Json::array();
    for (const auto& b : masked.bindings) {
        Json jb;
        jb["name"] = b.name;
        jb["start"] = b.span.start;
        jb["end"] = b.span.end;
        jb["surface"] = b.span.surface;
        jb["value"] = b.span.value.to_string();
        jb["kind"] = number_kind_name(b.span.kind);
        j["bindings"].push_back(std::move(jb));
    }
    return j;
}

MaskedQuestion masked_from_json(const Json& j) {
    MaskedQuestion m;
    m.template_text = j.at("template").get<std::string>();
    for (const auto& jb : j.at("bindings")) {
        Binding b;
        b.name = jb.at("name").get<std::string>();
        b.span.start = jb.at("start").get<std::size_t>();
        b.span.end = jb.at("end").get<std::size_t>();
        b.span.surface = jb.at("surface").get<std::string>();
        auto value = Number::parse(jb.at("value").get<std::string>());
        auto kind = parse_number_kind(jb.at("kind").get<std::string>());
        if (!value || !kind) throw Error(ErrorCode::SchemaMismatch, "bad binding " + b.name);
        b.span.value = *value;
        b.span.kind = *kind;
        m.bindings.push_back(std::move(b));
    }
    return m;
}

Json record_to_json(const SynthesisRecord& r) {
    Json j;
    j["problem_id"] = r.problem_id;
    j["source"] = source_name(r.source);
    j["question"] = r.question;
    j["truth"] = answer_to_json(r.truth);
    j["choices"] = r.choices ? Json(*r.choices) : Json(nullptr);
    j["general_question"] = r.general_question;
    j["extracted_numbers"] = Json::array();
    for (const auto& [name, lit] : r.extracted_numbers) j["extracted_numbers"].push_back({{"name", name}, {"literal", lit}});
    j["constraints"] = r.constraints_text;
    j["masked"] = r.masked ? masked_to_json(*r.masked) : Json(nullptr);
    j["crosscheck_warnings"] = r.crosscheck_warnings;
    j["rounds"] = Json::array();
    for (const auto& round : r.rounds) {
        Json jr;
        jr["index"] = round.index;
        jr["kind"] = round.kind;
        jr["prompt"] = round.prompt;
        jr["response"] = round.response;
        jr["parse_error"] = round.parse_error ? Json(*round.parse_error) : Json(nullptr);
        jr["program"] = round.program ? Json(*round.program) : Json(nullptr);
        if (round.verification) {
            const auto& v = *round.verification;
            jr["verification"] = {{"pass", v.pass},
                                  {"verdict", v.verdict},
                                  {"exec_status", v.exec_status},
                                  {"value_line", v.value_line ? Json(*v.value_line) : Json(nullptr)},
                                  {"stderr", v.stderr_text},
                                  {"reason", v.reason}};
        } else {
            jr["verification"] = nullptr;
        }
        j["rounds"].push_back(std::move(jr));
    }
    j["status"] = synthesis_status_name(r.status);
    j["final_template"] = r.final_template ? Json(r.final_template->source) : Json(nullptr);
    j["template_digest"] = r.final_template ? Json(r.final_template->digest()) : Json(nullptr);
    j["failure"] = r.failure;
    return j;
}

SynthesisRecord record_from_json(const Json& j) {
    try {
        SynthesisRecord r;
        r.problem_id = j.at("problem_id").get<std::string>();
        auto source = parse_source(j.at("source").get<std::string>());
        if (!source) throw Error(ErrorCode::SchemaMismatch, "unknown source");
        r.source = *source;
        r.question = j.at("question").get<std::string>();
        r.truth = answer_from_json(j.at("truth"));
        if (!j.at("choices").is_null()) r.choices = j["choices"].get<std::vector<std::string>>();
        r.general_question = j.at("general_question").get<std::string>();
        for (const auto& n : j.at("extracted_numbers")) {
            r.extracted_numbers.emplace_back(n.at("name").get<std::string>(), n.at("literal").get<std::string>());
        }
        r.constraints_text = j.at("constraints").get<std::string>();
        if (!j.at("masked").is_null()) r.masked = masked_from_json(j["masked"]);
        r.crosscheck_warnings = j.at("crosscheck_warnings").get<std::vector<std::string>>();
        for (const auto& jr : j.at("rounds")) {
            SynthesisRound round;
            round.index = jr.at("index").get<std::size_t>();
            round.kind = jr.at("kind").get<std::string>();
            round.prompt = jr.at("prompt").get<std::string>();
            round.response = jr.at("response").get<std::string>();
            if (!jr.at("parse_error").is_null()) round.parse_error = jr["parse_error"].get<std::string>();
            if (!jr.at("program").is_null()) round.program = jr["program"].get<std::string>();
            if (!jr.at("verification").is_null()) {
                const Json& jv = jr["verification"];
                RoundVerification v;
                v.pass = jv.at("pass").get<bool>();
                v.verdict = jv.at("verdict").get<std::string>();
                v.exec_status = jv.at("exec_status").get<std::string>();
                if (!jv.at("value_line").is_null()) v.value_line = jv["value_line"].get<std::string>();
                v.stderr_text = jv.at("stderr").get<std::string>();
                v.reason = jv.at("reason").get<std::string>();
                round.verification = std::move(v);
            }
            r.rounds.push_back(std::move(round));
        }
        auto status = parse_synthesis_status(j.at("status").get<std::string>());
        if (!status) throw Error(ErrorCode::SchemaMismatch, "unknown status");
        r.status = *status;
        if (!j.at("final_template").is_null()) {
            TemplateOptions permissive;
            r.final_template = validate_program(j["final_template"].get<std::string>(), permissive);
        }
        r.failure = j.at("failure").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("synthesis record: ") + e.what());
    }
}

std::vector<SynthesisRecord> read_records(const std::filesystem::path& path) {
    std::vector<SynthesisRecord> out;
    for (const auto& j : read_jsonl(path)) out.push_back(record_from_json(j));
    return out;
}

void write_records(const std::filesystem::path& path, const std::vector<SynthesisRecord>& records) {
    std::vector<Json> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(record_to_json(r));
    write_jsonl(path, lines);
}

std::optional<TemplateJob> template_job(const SynthesisRecord& record) {
    if (record.status != SynthesisStatus::Verified || !record.final_template || !record.masked) return std::nullopt;
    TemplateJob job;
    job.problem_id = record.problem_id;
    job.source = record.source;
    job.truth = record.truth;
    job.masked = *record.masked;
    job.program = *record.final_template;
    std::map<std::string, Number> originals;
    for (const auto& b : job.masked.bindings) originals[b.name] = b.span.value;
    job.constraints = parse_constraints(record.constraints_text, job.program.parameters, originals);
    return job;
}

} // namespace mathforge
