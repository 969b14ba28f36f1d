#include "mathforge/synthesis.hpp"

#include "mathforge/error.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace mathforge;

namespace {

using testing_support::ScriptedClient;

SourceProblem problem(Source source, const std::string& question, const std::string& truth,
                      std::optional<std::vector<std::string>> choices = std::nullopt,
                      std::optional<std::string> choice_text = std::nullopt) {
    SourceProblem p;
    p.id = "p-" + std::string(source_name(source));
    p.source = source;
    p.question = question;
    p.answer = normalize_answer(truth, source);
    p.choices = choices;
    p.answer.choice_text = choice_text;
    return p;
}

const std::string kQuestion = "Sam has 5 boxes with 12 pens each. How many pens does Sam have?";

std::string response(const std::string& body, const std::string& gq = "Sam has {n1} boxes with {n2} pens each. How many pens does Sam have?",
                     const std::string& numbers = "n1 = 5\nn2 = 12",
                     const std::string& constraints = "n1: int in [1, 50]; integer\nn2: int in [1, 50]; integer") {
    return "### General Question\n" + gq + "\n\n### Extracted Numbers\n" + numbers +
           "\n\n### Unified Program\n```python\ndef solution(n1, n2):\n"
           "    \"\"\"Count pens.\n\n    :param n1: boxes\n    :param n2: pens per box\n    :return: int, pens\n    \"\"\"\n" +
           body + "```\n\n### Constraints\n" + constraints + "\n";
}

std::string program_only(const std::string& body) {
    return "### Unified Program\n```python\ndef solution(n1, n2):\n"
           "    \"\"\"Count pens.\n\n    :param n1: boxes\n    :param n2: pens per box\n    :return: int, pens\n    \"\"\"\n" +
           body + "```\n";
}

const std::string kGood = "    return n1 * n2  # pens\n";
const std::string kWrong = "    return n1 + n2  # pens\n";
const std::string kCrash = "    return n1 * n2 / 0  # pens\n";

SynthesisConfig fast_config() {
    SynthesisConfig c;
    c.retry_backoff = std::chrono::milliseconds(0);
    return c;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

} // namespace

TEST_CASE("multitask prompt carries each header once") {
    auto p = problem(Source::AquaRat, "A train covers 300 km in 5 hours. What is its speed?", "B",
                     std::vector<std::string>{"A)50", "B)60", "C)70", "D)80", "E)90"}, "60");
    std::string prompt = build_multitask_prompt(p);
    for (auto h : {kHeaderGeneralQuestion, kHeaderExtractedNumbers, kHeaderUnifiedProgram, kHeaderConstraints}) {
        CHECK(count_of(prompt, std::string(h) + "\n") == 1);
    }
    CHECK(prompt.find(p.question) != std::string::npos);
    CHECK(prompt.find("D)80") != std::string::npos);
    CHECK(prompt.find("not its letter") != std::string::npos);
    CHECK(prompt.find("{{") == std::string::npos);

    PromptOptions custom;
    custom.template_text = "Q: {{problem}}\n{{options}}";
    std::string short_prompt = build_multitask_prompt(p, custom);
    CHECK(short_prompt.starts_with("Q: A train covers 300 km"));
    CHECK(short_prompt.find("### ") == std::string::npos);
}

TEST_CASE("prompt construction is deterministic") {
    auto p = problem(Source::Gsm8k, kQuestion, "60");
    CHECK(build_multitask_prompt(p) == build_multitask_prompt(p));
}

TEST_CASE("well-formed response parses") {
    auto parsed = parse_response(response(kGood));
    CHECK(parsed.general_question.find("{n1} boxes") != std::string::npos);
    REQUIRE(parsed.extracted_numbers.size() == 2);
    CHECK(parsed.extracted_numbers[1] == std::pair<std::string, std::string>{"n2", "12"});
    CHECK(parsed.program.parameters == std::vector<std::string>{"n1", "n2"});
    CHECK(parsed.constraints.size() == 2);
    CHECK(parsed.unified_program.starts_with("def solution"));
}

TEST_CASE("headers tolerate a trailing colon and comment lines inside code") {
    std::string r = response("    ### not a header\n" + kGood);
    r.replace(r.find("### Constraints"), 15, "### Constraints:");
    auto parsed = parse_response(r);
    CHECK(parsed.unified_program.find("### not a header") != std::string::npos);
}

TEST_CASE("numbers with currency and bullets") {
    auto parsed = parse_response(response(kGood, "Sam has {n1} boxes with {n2} pens each. How many pens does Sam have?",
                                          "- n1 = `5`\n- n2: $12"));
    CHECK(parsed.extracted_numbers[1].second == "12");
}

TEST_CASE("parse failures carry their reason") {
    SUBCASE("missing section") {
        std::string r = response(kGood);
        r.erase(r.find("### Constraints"));
        try {
            parse_response(r);
            FAIL("expected failure");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingSection);
            CHECK(std::string(e.what()).find("Constraints") != std::string::npos);
        }
    }
    SUBCASE("placeholders differ from numbers") {
        CHECK_THROWS_AS(parse_response(response(kGood, "Sam has {n1} boxes with 12 pens each.")), Error);
    }
    SUBCASE("bad literal") {
        try {
            parse_response(response(kGood, "Sam has {n1} boxes with {n2} pens each.", "n1 = 5\nn2 = twelve"));
            FAIL("expected failure");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::BadNumberLiteral);
        }
    }
    SUBCASE("program parameters differ") {
        std::string r = response(kGood);
        r.replace(r.find("def solution(n1, n2)"), 20, "def solution(n1, n3)");
        CHECK_THROWS_AS(parse_response(r), Error);
    }
    SUBCASE("invalid program") {
        try {
            parse_response(response("    import os  # shell\n    return n1 * n2  # pens\n"));
            FAIL("expected failure");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TemplateInvalid);
        }
    }
    SUBCASE("constraint missing") {
        CHECK_THROWS_AS(parse_response(response(kGood, "Sam has {n1} boxes with {n2} pens each. How many pens does Sam have?",
                                                "n1 = 5\nn2 = 12", "n1: int in [1, 50]")),
                        Error);
    }
}

TEST_CASE("parse_response only ever throws Error") {
    std::mt19937 gen(1234);
    std::string base = response(kGood);
    const std::string alphabet = "{}#`\n =:;[],-.0123456789nabc\"'()";
    std::size_t parsed = 0;
    for (int i = 0; i < 1500; ++i) {
        std::string r = base;
        int edits = 1 + static_cast<int>(gen() % 6);
        for (int e = 0; e < edits && !r.empty(); ++e) {
            std::size_t pos = gen() % r.size();
            switch (gen() % 3) {
            case 0: r.erase(pos, 1 + gen() % 8); break;
            case 1: r.insert(pos, 1, alphabet[gen() % alphabet.size()]); break;
            default: r[pos] = alphabet[gen() % alphabet.size()]; break;
            }
        }
        try {
            parse_response(r);
            ++parsed;
        } catch (const Error&) {
        }
    }
    CHECK(parsed > 0);
}

TEST_CASE("cache keys separate model, temperature and prompt") {
    auto k = cache_key("p", "m", 0.0);
    CHECK(k.size() == 64);
    CHECK(k == cache_key("p", "m", 0.0));
    CHECK(k != cache_key("p", "m", 0.5));
    CHECK(k != cache_key("p", "m2", 0.0));
    CHECK(k != cache_key("p2", "m", 0.0));
}

TEST_CASE("response cache records and replays") {
    testing_support::TempDir dir;
    auto path = dir / "cache.jsonl";
    CompletionParams params;
    {
        ResponseCache cache(path);
        ScriptedClient inner({"first answer"});
        CachingClient rec(&inner, &cache, CacheMode::Record);
        CHECK(rec.complete("hello", params) == "first answer");
        CHECK(rec.complete("hello", params) == "first answer");
        CHECK(inner.prompts.size() == 1);
    }
    ResponseCache reloaded(path);
    CHECK(reloaded.size() == 1);
    CachingClient replay(nullptr, &reloaded, CacheMode::Replay);
    CHECK(replay.complete("hello", params) == "first answer");
    try {
        replay.complete("other", params);
        FAIL("expected a miss");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CacheMiss);
    }
    auto text = read_text_file(path);
    CHECK(text.find("\"prompt_digest\"") != std::string::npos);
    CHECK(text.find("hello") == std::string::npos);
}

TEST_CASE("synthesis verifies in the first round") {
    Executor ex(testing_support::stub_runner_config());
    ScriptedClient client({response(kGood)});
    auto rec = synthesize(problem(Source::Gsm8k, kQuestion, "60"), client, ex, fast_config());
    CHECK(rec.status == SynthesisStatus::Verified);
    REQUIRE(rec.rounds.size() == 1);
    CHECK(rec.rounds[0].verification->verdict == "PASS");
    REQUIRE(rec.final_template);
    REQUIRE(rec.masked);
    CHECK(rec.masked->bindings.size() == 2);
    auto job = template_job(rec);
    REQUIRE(job);
    CHECK(job->constraints.size() == 2);
}

TEST_CASE("a crash is fixed in the bug-fix round") {
    Executor ex(testing_support::stub_runner_config());
    ScriptedClient client({response(kCrash), program_only(kGood)});
    auto rec = synthesize(problem(Source::Gsm8k, kQuestion, "60"), client, ex, fast_config());
    CHECK(rec.status == SynthesisStatus::Verified);
    REQUIRE(rec.rounds.size() == 2);
    CHECK(rec.rounds[0].verification->verdict == "EXEC_FAILED");
    CHECK(rec.rounds[1].kind == "bugfix");
    REQUIRE(client.prompts.size() == 2);
    CHECK(client.prompts[1].find("ZeroDivisionError") != std::string::npos);
    CHECK(client.prompts[1].find("The correct answer is: 60") != std::string::npos);
    CHECK(client.prompts[1].find("n1 * n2 / 0") != std::string::npos);
    CHECK(rec.final_template->source.find("/ 0") == std::string::npos);
}

TEST_CASE("a wrong answer that stays wrong is reported") {
    Executor ex(testing_support::stub_runner_config());
    ScriptedClient client({response(kWrong), program_only(kWrong)});
    auto rec = synthesize(problem(Source::Gsm8k, kQuestion, "60"), client, ex, fast_config());
    CHECK(rec.status == SynthesisStatus::WrongAnswer);
    CHECK(rec.rounds.size() == 2);
    CHECK(client.prompts[1].find("printed:\n17") != std::string::npos);
    CHECK_FALSE(template_job(rec));
}

TEST_CASE("a general question that does not render back fails parsing") {
    Executor ex(testing_support::stub_runner_config());
    ScriptedClient client({response(kGood, "Sam has {n1} crates with {n2} pens each. How many pens does Sam have?")});
    auto rec = synthesize(problem(Source::Gsm8k, kQuestion, "60"), client, ex, fast_config());
    CHECK(rec.status == SynthesisStatus::ParseFailed);
    CHECK(rec.failure == "ROUNDTRIP_MISMATCH");
    CHECK(ex.launches() == 0);
}

TEST_CASE("client failures exhaust the budget") {
    Executor ex(testing_support::stub_runner_config());
    ScriptedClient client({});
    auto rec = synthesize(problem(Source::Gsm8k, kQuestion, "60"), client, ex, fast_config());
    CHECK(rec.status == SynthesisStatus::BudgetExhausted);
    CHECK(client.prompts.size() == 4);
}

TEST_CASE("bug-fix prompt needs a prior round") {
    SynthesisRecord rec;
    rec.problem_id = "x";
    ExecutionResult r;
    try {
        build_bugfix_prompt(rec, r, normalize_answer("1", Source::Gsm8k));
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoPriorRound);
    }
}

TEST_CASE("synthesis records survive serialization") {
    Executor ex(testing_support::stub_runner_config());
    ScriptedClient client({response(kCrash), program_only(kGood)});
    auto rec = synthesize(problem(Source::Gsm8k, kQuestion, "60"), client, ex, fast_config());
    testing_support::TempDir dir;
    write_records(dir / "s.jsonl", {rec});
    auto back = read_records(dir / "s.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(record_to_json(back[0]).dump() == record_to_json(rec).dump());
    CHECK(back[0].final_template->digest() == rec.final_template->digest());
}

TEST_CASE("every curated example parses and verifies") {
    struct Case {
        Source source;
        std::string truth;
        std::optional<std::string> choice_text;
    };
    const std::vector<Case> cases = {
        {Source::Gsm8k, "10", {}},          {Source::AquaRat, "C", "60 km/h"}, {Source::Math, "5", {}},
        {Source::NumGlue, "11", {}},        {Source::MathQa, "c", "600"},      {Source::TheoremQa, "6", {}},
        {Source::DeepMindMath, "37", {}},
    };
    Executor ex(testing_support::stub_runner_config());
    for (const auto& c : cases) {
        CAPTURE(source_name(c.source));
        const auto& example = example_for(c.source);
        std::optional<std::vector<std::string>> choices;
        if (!example.choices.empty()) choices = example.choices;
        auto p = problem(c.source, example.problem, c.truth, choices, c.choice_text);
        ScriptedClient client({example.response});
        auto rec = synthesize(p, client, ex, fast_config());
        CHECK(rec.status == SynthesisStatus::Verified);
        CHECK(rec.failure == "");
    }
}

TEST_CASE("error feedback drops runner frames and scratch paths") {
    std::string tb = "Traceback (most recent call last):\n"
                     "  File \"/opt/runner.py\", line 60, in main\n"
                     "    exec(code, env)\n"
                     "  File \"/tmp/mf-a1b2/prog.src\", line 9, in <module>\n"
                     "    print(solution())\n"
                     "  File \"/tmp/mf-a1b2/prog.src\", line 7, in solution\n"
                     "    return n1 / 0  # pens\n"
                     "ZeroDivisionError: division by zero\n";
    CHECK(condense_error_output(tb) == "Traceback (most recent call last):\n"
                                       "  File \"program\", line 9, in <module>\n"
                                       "    print(solution())\n"
                                       "  File \"program\", line 7, in solution\n"
                                       "    return n1 / 0  # pens\n"
                                       "ZeroDivisionError: division by zero\n");
    CHECK(condense_error_output("  File \"/tmp/x/prog.src\", line 3\nSyntaxError: bad /tmp/x/prog.src\n") ==
          "SyntaxError: bad program\n");
    CHECK(condense_error_output("") == "");
}
