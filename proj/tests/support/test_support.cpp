#include "test_support.hpp"

#include "mathforge/error.hpp"

#include <cstdlib>
#include <stdexcept>
#include <unistd.h>

namespace testing_support {

std::filesystem::path fixtures_dir() {
    return MATHFORGE_FIXTURES;
}

std::filesystem::path stub_runner() {
    return MATHFORGE_STUB_RUNNER;
}

mathforge::RunnerConfig stub_runner_config(std::size_t max_concurrent) {
    mathforge::RunnerConfig c;
    c.runner = stub_runner();
    c.interpreter = MATHFORGE_PYTHON;
    c.max_concurrent = max_concurrent;
    return c;
}

TempDir::TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "mathforge-test-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::vector<mathforge::SourceProblem> masking_fixture_problems() {
    using mathforge::Source;
    const std::vector<std::pair<std::string, Source>> files = {
        {"gsm8k.jsonl", Source::Gsm8k},     {"aqua.jsonl", Source::AquaRat},       {"math.json", Source::Math},
        {"numglue.jsonl", Source::NumGlue}, {"mathqa.json", Source::MathQa},       {"theoremqa.json", Source::TheoremQa},
        {"deepmind.txt", Source::DeepMindMath},
    };
    std::vector<mathforge::SourceProblem> out;
    for (const auto& [name, source] : files) {
        auto result = mathforge::load_dataset(fixtures_dir() / "masking" / name, source);
        if (!result.rejects.empty()) throw std::runtime_error(name + ": " + result.rejects.front().reason);
        for (auto& p : result.problems) out.push_back(std::move(p));
    }
    return out;
}

ScriptedClient::ScriptedClient(std::vector<std::string> responses) : responses_(responses.begin(), responses.end()) {}

std::string ScriptedClient::complete(const std::string& prompt, const mathforge::CompletionParams&) {
    std::lock_guard lock(mutex_);
    prompts.push_back(prompt);
    if (responses_.empty()) throw mathforge::Error(mathforge::ErrorCode::ClientError, "script exhausted");
    std::string r = responses_.front();
    responses_.pop_front();
    return r;
}

const std::string kPensQuestion = "Sam has 5 boxes with 12 pens each. How many pens does Sam have?";

namespace {

const std::string kPensHead =
    "def solution(n1, n2):\n"
    "    \"\"\"Count pens.\n\n    :param n1: boxes\n    :param n2: pens per box\n    :return: int, pens\n    \"\"\"\n";

} // namespace

std::string pens_response(const std::string& body, const std::string& gq, const std::string& numbers,
                          const std::string& constraints) {
    std::string g = gq.empty() ? "Sam has {n1} boxes with {n2} pens each. How many pens does Sam have?" : gq;
    std::string n = numbers.empty() ? "n1 = 5\nn2 = 12" : numbers;
    std::string c = constraints.empty() ? "n1: int in [1, 50]; integer\nn2: int in [1, 50]; integer" : constraints;
    return "### General Question\n" + g + "\n\n### Extracted Numbers\n" + n + "\n\n### Unified Program\n```python\n" +
           kPensHead + body + "```\n\n### Constraints\n" + c + "\n";
}

std::string pens_program_only(const std::string& body) {
    return "### Unified Program\n```python\n" + kPensHead + body + "```\n";
}

mathforge::SynthesisRecord verified_pens_record(const std::string& id, int boxes, int pens, mathforge::Executor& executor) {
    using namespace mathforge;
    SourceProblem p;
    p.id = id;
    p.source = Source::Gsm8k;
    p.question = "Sam has " + std::to_string(boxes) + " boxes with " + std::to_string(pens) +
                 " pens each. How many pens does Sam have?";
    p.answer = normalize_answer(std::to_string(boxes * pens), Source::Gsm8k);
    ScriptedClient client({pens_response("    return n1 * n2  # pens\n", {},
                                         "n1 = " + std::to_string(boxes) + "\nn2 = " + std::to_string(pens))});
    SynthesisConfig config;
    config.retry_backoff = std::chrono::milliseconds(0);
    auto rec = synthesize(p, client, executor, config);
    if (rec.status != SynthesisStatus::Verified) throw std::runtime_error("pens record did not verify: " + rec.failure);
    return rec;
}

} // namespace testing_support
