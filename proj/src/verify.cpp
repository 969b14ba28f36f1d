#include "mathforge/verify.hpp"

#include "mathforge/error.hpp"
#include "mathforge/jsonl.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <regex>
#include <semaphore>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace mathforge {

namespace {

using Clock = std::chrono::steady_clock;

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

ExecutionResult sandbox_failure(std::string diagnostic) {
    ExecutionResult r;
    r.status = ExecStatus::SandboxFailure;
    r.stderr_text = std::move(diagnostic);
    return r;
}

std::string find_in_path(const std::string& program) {
    if (program.find('/') != std::string::npos) return program;
    const char* path = std::getenv("PATH");
    std::istringstream dirs(path ? path : "/usr/local/bin:/usr/bin:/bin");
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) continue;
        std::filesystem::path candidate = std::filesystem::path(dir) / program;
        if (::access(candidate.c_str(), X_OK) == 0) return candidate.string();
    }
    return {};
}

class ScratchDir {
public:
    explicit ScratchDir(const std::filesystem::path& root) {
        std::string pattern = (root / "mathforge-XXXXXX").string();
        std::vector<char> buf(pattern.begin(), pattern.end());
        buf.push_back('\0');
        if (::mkdtemp(buf.data()) == nullptr) {
            throw Error(ErrorCode::SandboxFailure, "cannot create scratch directory under " + root.string());
        }
        path_ = buf.data();
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

std::optional<Number> parse_numeric_text(std::string_view text) {
    std::string s = trim(text);
    for (std::string_view prefix : {"\\$", "$", "€", "£", "¥"}) {
        if (s.starts_with(prefix)) {
            s = trim(s.substr(prefix.size()));
            break;
        }
    }
    if (s.starts_with("-$")) s = "-" + s.substr(2);
    static const std::regex kThousands(R"(^-?\d{1,3}(,\d{3})+(\.\d+)?$)");
    if (std::regex_match(s, kThousands)) s.erase(std::remove(s.begin(), s.end(), ','), s.end());
    return Number::parse(s);
}

std::optional<Number> leading_number(std::string_view text) {
    std::string s = trim(text);
    for (std::string_view prefix : {"\\$", "$", "€", "£", "¥", "Rs.", "Rs", "rs."}) {
        if (s.starts_with(prefix)) {
            s = trim(s.substr(prefix.size()));
            break;
        }
    }
    static const std::regex kLead(R"(^(-?\d[\d,]*(?:\.\d+)?(?:/\d+)?)(?:\s*[A-Za-z%].*)?$)");
    std::smatch m;
    if (!std::regex_match(s, m, kLead)) return std::nullopt;
    return parse_numeric_text(m[1].str());
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

struct Semaphore {
    explicit Semaphore(std::size_t n) : sem(static_cast<std::ptrdiff_t>(std::max<std::size_t>(n, 1))) {}
    std::counting_semaphore<4096> sem;
};

} // namespace

std::string_view exec_status_name(ExecStatus status) {
    switch (status) {
    case ExecStatus::Ok: return "OK";
    case ExecStatus::RuntimeError: return "RUNTIME_ERROR";
    case ExecStatus::Timeout: return "TIMEOUT";
    case ExecStatus::OutputOverflow: return "OUTPUT_OVERFLOW";
    case ExecStatus::SandboxFailure: return "SANDBOX_FAILURE";
    }
    return "SANDBOX_FAILURE";
}

std::optional<ExecStatus> parse_exec_status(std::string_view name) {
    for (auto s : {ExecStatus::Ok, ExecStatus::RuntimeError, ExecStatus::Timeout, ExecStatus::OutputOverflow,
                   ExecStatus::SandboxFailure}) {
        if (exec_status_name(s) == name) return s;
    }
    return std::nullopt;
}

std::optional<std::string> last_nonempty_line(std::string_view text) {
    std::optional<std::string> last;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) last = std::string(line);
        start = end + 1;
    }
    return last;
}

ExecutionResult parse_runner_output(std::string_view out, int exit_code) {
    if (exit_code != 0) {
        return sandbox_failure("runner exited with code " + std::to_string(exit_code));
    }
    std::string_view line = out;
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (line.empty()) return sandbox_failure("runner produced no response line");
    if (line.find('\n') != std::string_view::npos) return sandbox_failure("runner produced more than one line");
    Json rec;
    try {
        rec = Json::parse(line);
    } catch (const std::exception& e) {
        return sandbox_failure(std::string("runner response is not JSON: ") + e.what());
    }
    if (!rec.is_object() || rec.size() != 4) return sandbox_failure("runner response must be a four-field object");
    auto status = rec.find("status");
    auto out_text = rec.find("stdout");
    auto err_text = rec.find("stderr");
    auto duration = rec.find("duration_ms");
    if (status == rec.end() || !status->is_string() || out_text == rec.end() || !out_text->is_string() ||
        err_text == rec.end() || !err_text->is_string() || duration == rec.end() || !duration->is_number() ||
        duration->get<double>() < 0) {
        return sandbox_failure("runner response has missing or mistyped fields");
    }
    auto parsed = parse_exec_status(status->get<std::string>());
    if (!parsed || *parsed == ExecStatus::SandboxFailure) {
        return sandbox_failure("runner reported unknown status " + status->get<std::string>());
    }
    ExecutionResult r;
    r.status = *parsed;
    r.stdout_text = out_text->get<std::string>();
    r.stderr_text = err_text->get<std::string>();
    r.duration = std::chrono::milliseconds(static_cast<long long>(duration->get<double>()));
    if (r.status == ExecStatus::Ok) r.value_line = last_nonempty_line(r.stdout_text);
    return r;
}

struct Executor::State {
    explicit State(std::size_t n) : slots(n) {}
    Semaphore slots;
    std::atomic<std::size_t> launches{0};
};

Executor::Executor(RunnerConfig config) : config_(std::move(config)), state_(std::make_unique<State>(config_.max_concurrent)) {}

Executor::~Executor() = default;

std::size_t Executor::launches() const {
    return state_->launches.load();
}

ExecutionResult Executor::execute(std::string_view program, const ExecutionLimits& limits) {
    ExecutionResult r = run(program, RunMode::Run, limits);
    if (r.status == ExecStatus::Ok && !r.value_line) {
        r.status = ExecStatus::RuntimeError;
        r.stderr_text += "program printed no value\n";
    }
    return r;
}

ExecutionResult Executor::syntax_check(std::string_view program, const ExecutionLimits& limits) {
    ExecutionResult r = run(program, RunMode::Check, limits);
    if (r.status == ExecStatus::Ok && !r.value_line) r.value_line = std::string();
    return r;
}

ExecutionResult Executor::run(std::string_view program, RunMode mode, const ExecutionLimits& limits) {
    std::error_code ec;
    if (config_.runner.empty() || !std::filesystem::is_regular_file(config_.runner, ec)) {
        return sandbox_failure("runner not found: " + config_.runner.string());
    }
    std::string launcher = config_.interpreter.empty() ? config_.runner.string() : find_in_path(config_.interpreter);
    if (launcher.empty()) return sandbox_failure("interpreter not found: " + config_.interpreter);

    state_->slots.sem.acquire();
    struct Release {
        Semaphore& s;
        ~Release() { s.sem.release(); }
    } release{state_->slots};

    ScratchDir scratch(config_.scratch_root);
    std::filesystem::path prog_path = scratch.path() / "prog.src";
    {
        std::ofstream f(prog_path, std::ios::binary);
        f.write(program.data(), static_cast<std::streamsize>(program.size()));
        if (!f) return sandbox_failure("cannot write " + prog_path.string());
    }

    std::vector<std::string> args;
    args.push_back(launcher);
    if (!config_.interpreter.empty()) args.push_back(std::filesystem::absolute(config_.runner).string());
    args.insert(args.end(), {"--program", prog_path.string(), "--mode", mode == RunMode::Run ? "run" : "check",
                             "--timeout-ms", std::to_string(limits.timeout.count())});
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    std::vector<std::string> env_strings;
    for (const char* key : {"PATH", "LANG", "LC_ALL", "PYTHONPATH", "VIRTUAL_ENV"}) {
        if (const char* v = std::getenv(key)) env_strings.push_back(std::string(key) + "=" + v);
    }
    env_strings.push_back("HOME=" + scratch.path().string());
    env_strings.push_back("TMPDIR=" + scratch.path().string());
    env_strings.push_back("PYTHONDONTWRITEBYTECODE=1");
    env_strings.push_back("PYTHONHASHSEED=0");
    env_strings.push_back("OPENBLAS_NUM_THREADS=1");
    env_strings.push_back("OMP_NUM_THREADS=1");
    std::vector<char*> envp;
    for (auto& e : env_strings) envp.push_back(e.data());
    envp.push_back(nullptr);

    int out_pipe[2] = {-1, -1};
    int err_pipe[2] = {-1, -1};
    if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0) {
        close_fd(out_pipe[0]);
        close_fd(out_pipe[1]);
        return sandbox_failure(std::string("pipe: ") + std::strerror(errno));
    }
    std::string scratch_str = scratch.path().string();
    rlim_t memory = static_cast<rlim_t>(limits.memory_bytes);

    auto started = Clock::now();
    pid_t pid = ::fork();
    if (pid < 0) {
        close_fd(out_pipe[0]);
        close_fd(out_pipe[1]);
        close_fd(err_pipe[0]);
        close_fd(err_pipe[1]);
        return sandbox_failure(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, 0);
        ::dup2(out_pipe[1], 1);
        ::dup2(err_pipe[1], 2);
        if (::chdir(scratch_str.c_str()) != 0) ::_exit(126);
        struct rlimit as_limit{memory, memory};
        ::setrlimit(RLIMIT_AS, &as_limit);
        struct rlimit no_core{0, 0};
        ::setrlimit(RLIMIT_CORE, &no_core);
        // best effort: an empty network namespace when privileges allow
        ::unshare(CLONE_NEWNET);
        ::execve(argv[0], argv.data(), envp.data());
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    close_fd(out_pipe[1]);
    close_fd(err_pipe[1]);
    state_->launches.fetch_add(1);

    const std::size_t out_cap = limits.output_bytes * 16 + 64 * 1024;
    const std::size_t err_cap = 64 * 1024;
    std::string out_buf, err_buf;
    auto deadline = started + limits.timeout + config_.grace;
    bool killed = false;
    bool flooded = false;
    int status = 0;
    bool reaped = false;

    auto kill_group = [&] {
        ::kill(-pid, SIGKILL);
        ::kill(pid, SIGKILL);
    };

    while (out_pipe[0] >= 0 || err_pipe[0] >= 0) {
        auto now = Clock::now();
        if (now >= deadline) {
            kill_group();
            killed = true;
            break;
        }
        int wait_ms = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;
        pollfd fds[2];
        int n = 0;
        if (out_pipe[0] >= 0) fds[n++] = {out_pipe[0], POLLIN, 0};
        if (err_pipe[0] >= 0) fds[n++] = {err_pipe[0], POLLIN, 0};
        int rc = ::poll(fds, static_cast<nfds_t>(n), wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            kill_group();
            killed = true;
            break;
        }
        for (int i = 0; i < n; ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            char chunk[8192];
            ssize_t got = ::read(fds[i].fd, chunk, sizeof chunk);
            bool is_out = out_pipe[0] == fds[i].fd;
            if (got <= 0) {
                if (got < 0 && errno == EINTR) continue;
                close_fd(is_out ? out_pipe[0] : err_pipe[0]);
                continue;
            }
            std::string& buf = is_out ? out_buf : err_buf;
            std::size_t cap = is_out ? out_cap : err_cap;
            std::size_t room = cap > buf.size() ? cap - buf.size() : 0;
            buf.append(chunk, std::min<std::size_t>(room, static_cast<std::size_t>(got)));
            if (is_out && static_cast<std::size_t>(got) > room) flooded = true;
        }
        if (flooded) {
            kill_group();
            break;
        }
    }
    close_fd(out_pipe[0]);
    close_fd(err_pipe[0]);

    while (!reaped) {
        pid_t w = ::waitpid(pid, &status, killed || flooded ? 0 : WNOHANG);
        if (w == pid) {
            reaped = true;
            break;
        }
        if (w < 0 && errno != EINTR) break;
        if (w == 0) {
            if (Clock::now() >= deadline) {
                kill_group();
                killed = true;
            } else {
                std::this_thread::sleep_for(std::chrono::milliseconds(1));
            }
        }
    }
    // stray grandchildren never outlive the call
    ::kill(-pid, SIGKILL);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started);

    if (killed) {
        ExecutionResult r;
        r.status = ExecStatus::Timeout;
        r.stderr_text = "killed by host after " + std::to_string(elapsed.count()) + " ms\n";
        r.duration = elapsed;
        return r;
    }
    if (flooded) return sandbox_failure("runner response exceeded " + std::to_string(out_cap) + " bytes");
    int exit_code = -1;
    if (reaped && WIFEXITED(status)) exit_code = WEXITSTATUS(status);
    else if (reaped && WIFSIGNALED(status)) exit_code = 128 + WTERMSIG(status);
    ExecutionResult r = parse_runner_output(out_buf, exit_code);
    if (r.status == ExecStatus::SandboxFailure && !err_buf.empty()) r.stderr_text += "\nrunner stderr: " + err_buf;
    r.duration = elapsed;
    return r;
}

bool numbers_close(const Number& a, const Number& b, const ComparisonPolicy& policy) {
    if (a == b) return true;
    double x = a.to_double();
    double y = b.to_double();
    if (!std::isfinite(x) || !std::isfinite(y)) return false;
    double diff = std::fabs(x - y);
    if (diff <= policy.absolute_tolerance) return true;
    return diff <= policy.relative_tolerance * std::max(std::fabs(x), std::fabs(y));
}

std::string normalize_text_answer(std::string_view text) {
    std::string s = trim(text);
    static const std::regex kTextWrap(R"(\\(?:text|textbf|mbox|mathrm)\{([^{}]*)\})");
    s = std::regex_replace(s, kTextWrap, "$1");
    for (std::string_view junk : {"\\left", "\\right", "\\!", "\\,", "\\;", "\\:", "^\\circ", "^{\\circ}", "\\%", "\\$", "$"}) {
        replace_all(s, junk, "");
    }
    replace_all(s, "\\dfrac", "\\frac");
    replace_all(s, "\\tfrac", "\\frac");
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    while (!s.empty() && s.back() == '.') s.pop_back();
    if (s.find('\\') == std::string::npos) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    return s;
}

ComparisonResult compare_answers(std::string_view got, const GroundTruthAnswer& expected, const ComparisonPolicy& policy) {
    std::string g = trim(got);
    if (g.empty()) return {false, "UNPARSEABLE"};
    switch (expected.kind) {
    case AnswerKind::Numeric: {
        auto value = parse_numeric_text(g);
        if (!value || !expected.numeric_value) return {false, "UNPARSEABLE"};
        return numbers_close(*value, *expected.numeric_value, policy) ? ComparisonResult{true, "MATCH"}
                                                                        : ComparisonResult{false, "VALUE_MISMATCH"};
    }
    case AnswerKind::Choice: {
        std::string letter = g;
        if (letter.size() == 3 && letter.front() == '(' && letter.back() == ')') letter = letter.substr(1, 1);
        if (letter.size() == 2 && (letter.back() == ')' || letter.back() == '.')) letter.pop_back();
        if (letter.size() == 1 && std::isalpha(static_cast<unsigned char>(letter[0])) && expected.choice_label) {
            bool eq = std::toupper(static_cast<unsigned char>(letter[0])) ==
                      std::toupper(static_cast<unsigned char>(*expected.choice_label));
            return eq ? ComparisonResult{true, "MATCH"} : ComparisonResult{false, "VALUE_MISMATCH"};
        }
        if (expected.choice_text) {
            if (normalize_text_answer(g) == normalize_text_answer(*expected.choice_text)) return {true, "MATCH"};
            auto value = parse_numeric_text(g);
            auto option = leading_number(*expected.choice_text);
            if (value && option && numbers_close(*value, *option, policy)) return {true, "MATCH"};
        }
        return {false, "VALUE_MISMATCH"};
    }
    case AnswerKind::Text: {
        std::string want = expected.text_value ? *expected.text_value : expected.raw;
        if (normalize_text_answer(g) == normalize_text_answer(want)) return {true, "MATCH"};
        auto a = parse_numeric_text(g);
        auto b = parse_numeric_text(want);
        if (a && b && numbers_close(*a, *b, policy)) return {true, "MATCH"};
        return {false, "VALUE_MISMATCH"};
    }
    }
    return {false, "VALUE_MISMATCH"};
}

VerificationOutcome verify_sample(const InstantiatedSample& sample, Executor& executor, const ExecutionLimits& limits,
                                  const ComparisonPolicy& policy) {
    VerificationOutcome outcome;
    if (!sample.full) {
        outcome.execution = executor.syntax_check(sample.program, limits);
        outcome.pass = outcome.execution.status == ExecStatus::Ok;
        outcome.reason = outcome.pass ? "SYNTAX_OK" : std::string(exec_status_name(outcome.execution.status));
        return outcome;
    }
    outcome.execution = executor.execute(sample.program, limits);
    if (outcome.execution.status != ExecStatus::Ok) {
        outcome.reason = std::string(exec_status_name(outcome.execution.status));
        return outcome;
    }
    if (!sample.expected_answer) {
        outcome.pass = true;
        outcome.reason = "EXECUTED";
        return outcome;
    }
    auto cmp = compare_answers(*outcome.execution.value_line, *sample.expected_answer, policy);
    outcome.pass = cmp.equal;
    outcome.reason = cmp.reason;
    return outcome;
}

} // namespace mathforge
