#pragma once

#include "mathforge/corpus.hpp"
#include "mathforge/template.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace mathforge {

struct ExecutionLimits {
    std::chrono::milliseconds timeout{10'000};
    std::size_t memory_bytes = 512ull * 1024 * 1024;
    std::size_t output_bytes = 64 * 1024;
};

enum class ExecStatus { Ok, RuntimeError, Timeout, OutputOverflow, SandboxFailure };

std::string_view exec_status_name(ExecStatus status);
std::optional<ExecStatus> parse_exec_status(std::string_view name);

struct ExecutionResult {
    ExecStatus status = ExecStatus::SandboxFailure;
    std::string stdout_text;
    std::string stderr_text;
    /// Last non-empty stdout line; present iff status is Ok.
    std::optional<std::string> value_line;
    std::chrono::milliseconds duration{0};
};

struct ComparisonPolicy {
    double relative_tolerance = 1e-6;
    double absolute_tolerance = 1e-9;
};

/// Where and how the runner process is launched.
struct RunnerConfig {
    std::filesystem::path runner;
    /// Prefix program for the runner script, e.g. "python3". Empty runs the
    /// runner path directly.
    std::string interpreter = "python3";
    std::filesystem::path scratch_root = std::filesystem::temp_directory_path();
    std::chrono::milliseconds grace{500};
    std::size_t max_concurrent = 4;
};

enum class RunMode { Run, Check };

/// Parses one runner response. Anything but a single well-formed record
/// line yields SANDBOX_FAILURE with a diagnostic in stderr_text.
ExecutionResult parse_runner_output(std::string_view runner_stdout, int exit_code);

/// Last non-empty line, without its terminator.
std::optional<std::string> last_nonempty_line(std::string_view text);

/// Launches one runner process per call; thread safe. A semaphore bounds
/// the number of live runner processes.
class Executor {
public:
    explicit Executor(RunnerConfig config);
    ~Executor();
    Executor(const Executor&) = delete;
    Executor& operator=(const Executor&) = delete;

    ExecutionResult execute(std::string_view program, const ExecutionLimits& limits = {});
    /// Compile-only: OK or RUNTIME_ERROR.
    ExecutionResult syntax_check(std::string_view program, const ExecutionLimits& limits = {});

    const RunnerConfig& config() const { return config_; }
    /// Number of runner processes launched so far.
    std::size_t launches() const;

private:
    ExecutionResult run(std::string_view program, RunMode mode, const ExecutionLimits& limits);

    RunnerConfig config_;
    struct State;
    std::unique_ptr<State> state_;
};

struct ComparisonResult {
    bool equal = false;
    /// MATCH, VALUE_MISMATCH or UNPARSEABLE.
    std::string reason;
};

ComparisonResult compare_answers(std::string_view got, const GroundTruthAnswer& expected,
                                 const ComparisonPolicy& policy = {});

/// Tolerance rule shared by numeric comparisons; symmetric in a and b.
bool numbers_close(const Number& a, const Number& b, const ComparisonPolicy& policy = {});

/// Normalization applied to TEXT answers before equality.
std::string normalize_text_answer(std::string_view text);

struct VerificationOutcome {
    bool pass = false;
    ExecutionResult execution;
    /// MATCH, VALUE_MISMATCH, UNPARSEABLE, SYNTAX_OK, or the execution
    /// status name when the program did not run to completion.
    std::string reason;
};

VerificationOutcome verify_sample(const InstantiatedSample& sample, Executor& executor,
                                  const ExecutionLimits& limits = {}, const ComparisonPolicy& policy = {});

} // namespace mathforge
