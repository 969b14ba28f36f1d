#include "mathforge/corpus.hpp"

#include "mathforge/error.hpp"
#include "mathforge/jsonl.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <fstream>

using namespace mathforge;
using testing_support::TempDir;

namespace {

std::filesystem::path write(const TempDir& dir, const std::string& name, const std::string& body) {
    auto p = dir / name;
    std::ofstream(p) << body;
    return p;
}

ErrorCode load_error(const std::filesystem::path& p, Source s) {
    try {
        load_dataset(p, s);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected load error");
    return ErrorCode::UsageError;
}

} // namespace

TEST_CASE("normalize answers") {
    auto dollars = normalize_answer("$1,200", Source::Gsm8k);
    CHECK(dollars.kind == AnswerKind::Numeric);
    CHECK(*dollars.numeric_value == Number::integer(1200));

    auto letter = normalize_answer("B", Source::AquaRat);
    CHECK(letter.kind == AnswerKind::Choice);
    CHECK(*letter.choice_label == 'B');

    auto frac = normalize_answer("\\frac{1}{2}", Source::Math);
    CHECK(frac.kind == AnswerKind::Text);
    CHECK(*frac.text_value == "\\frac{1}{2}");

    CHECK(normalize_answer(" 18 ", Source::Gsm8k).numeric_value == Number::integer(18));
    CHECK(normalize_answer("-3.50", Source::NumGlue).numeric_value == *Number::parse("-3.5"));
    CHECK(normalize_answer("B", Source::Gsm8k).kind == AnswerKind::Text);
}

TEST_CASE("normalize answer is idempotent") {
    for (Source s : kAllSources) {
        for (std::string raw : {"$1,200", "18", "B", "(c)", "\\frac{1}{2}", "0.250", "True", "-7", "3/4", "1,000,000",
                                " 12 ", "x^2+1", "€5"}) {
            auto once = normalize_answer(raw, s);
            auto twice = normalize_answer(once.render(), s);
            // raw keeps the original text; the normalized value must not move
            twice.raw = once.raw;
            CHECK_MESSAGE(once == twice, raw);
        }
    }
}

TEST_CASE("gsm8k record") {
    TempDir dir;
    auto p = write(dir, "gsm.jsonl",
                   R"({"question": "Janet has 16 eggs. She eats 3 and bakes with 4. She sells the rest for $2 each. How much does she make?", "answer": "16 - 3 - 4 = 9\n9 * 2 = 18\n#### 18"})" "\n");
    auto r = load_dataset(p, Source::Gsm8k);
    REQUIRE(r.problems.size() == 1);
    const auto& prob = r.problems[0];
    CHECK(prob.id == "gsm8k-0");
    CHECK(prob.source == Source::Gsm8k);
    CHECK(prob.answer.kind == AnswerKind::Numeric);
    CHECK(*prob.answer.numeric_value == Number::integer(18));
    CHECK(prob.answer.raw == "18");
    CHECK_FALSE(prob.choices);
}

TEST_CASE("aqua record") {
    TempDir dir;
    auto p = write(dir, "aqua.json",
                   R"([{"question": "A train runs 60 km in 1.5 hours. Its speed?", "options": ["A)30", "B)40", "C)50", "D)60", "E)90"], "rationale": "60/1.5", "correct": "B"}])");
    auto r = load_dataset(p, Source::AquaRat);
    REQUIRE(r.problems.size() == 1);
    const auto& prob = r.problems[0];
    CHECK(prob.answer.kind == AnswerKind::Choice);
    CHECK(*prob.answer.choice_label == 'B');
    REQUIRE(prob.choices);
    CHECK(prob.choices->size() == 5);
    CHECK(*prob.answer.choice_text == "40");
}

TEST_CASE("other source formats") {
    TempDir dir;
    auto mathqa = write(dir, "mathqa.json",
                        R"([{"Problem": "what is 20 % of 50 ?", "options": "a ) 5 , b ) 10 , c ) 15 , d ) 20 , e ) 25", "correct": "b", "category": "gain"}])");
    auto m = load_dataset(mathqa, Source::MathQa);
    REQUIRE(m.problems.size() == 1);
    CHECK(m.problems[0].choices->size() == 5);
    CHECK(*m.problems[0].answer.choice_text == "10");

    auto math = write(dir, "math.jsonl",
                      R"({"problem": "What is $1+1$?", "solution": "We get $\\boxed{2}$.", "level": "Level 1", "type": "Algebra"})" "\n");
    auto mt = load_dataset(math, Source::Math);
    REQUIRE(mt.problems.size() == 1);
    CHECK(*mt.problems[0].answer.numeric_value == Number::integer(2));
    CHECK(mt.problems[0].meta.at("level") == "Level 1");

    auto numglue = write(dir, "numglue.jsonl", R"({"question": "Add 3 and 4.", "answer": {"number": "7", "date": {}, "spans": []}, "type": "Type_1"})" "\n");
    CHECK(*load_dataset(numglue, Source::NumGlue).problems[0].answer.numeric_value == Number::integer(7));

    auto tqa = write(dir, "tqa.json", R"([{"Question": "Is 7 prime?", "Answer": true, "Answer_type": "bool"}])");
    auto t = load_dataset(tqa, Source::TheoremQa);
    CHECK(t.problems[0].answer.kind == AnswerKind::Text);

    auto dm = write(dir, "dm.txt", "Calculate 3 + 4.\n7\nWhat is 2 * 5?\n10\n");
    auto d = load_dataset(dm, Source::DeepMindMath);
    REQUIRE(d.problems.size() == 2);
    CHECK(d.problems[1].id == "deepmind-1");
    CHECK(*d.problems[1].answer.numeric_value == Number::integer(10));
}

TEST_CASE("load errors and rejects") {
    TempDir dir;
    CHECK(load_error(write(dir, "empty.jsonl", ""), Source::Gsm8k) == ErrorCode::EmptyDataset);
    CHECK(load_error(dir / "missing.jsonl", Source::Gsm8k) == ErrorCode::UnreadableFile);
    auto aqua_as_gsm = write(dir, "mismatch.jsonl", R"({"Problem": "x", "options": "a ) 1", "correct": "a"})" "\n");
    CHECK(load_error(aqua_as_gsm, Source::Gsm8k) == ErrorCode::SchemaMismatch);

    auto mixed = write(dir, "mixed.jsonl",
                       R"({"question": "q1 has 2", "answer": "#### 2"})" "\n"
                       R"({"question": "q2 has 3", "answer": "no marker"})" "\n"
                       R"({"question": "", "answer": "#### 1"})" "\n"
                       R"({"question": "q4 has 5", "answer": "#### 5"})" "\n");
    AppendLog log(dir / "rejects.jsonl");
    auto r = load_dataset(mixed, Source::Gsm8k, LoadOptions{10, &log});
    CHECK(r.input_records == 4);
    CHECK(r.problems.size() + r.rejects.size() == r.input_records);
    CHECK(r.problems.size() == 2);
    CHECK(r.problems[1].id == "gsm8k-13");
    auto logged = read_jsonl(dir / "rejects.jsonl");
    CHECK(logged.size() == 2);
}

TEST_CASE("corpus stats") {
    CHECK(corpus_stats({}).total == 0);
    std::vector<SourceProblem> ps;
    for (int i = 0; i < 3; ++i) ps.push_back(SourceProblem{"g" + std::to_string(i), Source::Gsm8k, "q", {}, {}, {}});
    for (int i = 0; i < 2; ++i) ps.push_back(SourceProblem{"m" + std::to_string(i), Source::Math, "q", {}, {}, {}});
    auto c = corpus_stats(ps);
    CHECK(c.count(Source::Gsm8k) == 3);
    CHECK(c.count(Source::Math) == 2);
    CHECK(c.count(Source::AquaRat) == 0);
    CHECK(c.total == 5);
}

TEST_CASE("record round trip") {
    TempDir dir;
    auto p = write(dir, "aqua.json",
                   R"([{"question": "Speed?", "options": ["A)30", "B)40"], "rationale": "r", "correct": "B"}])");
    auto problems = load_dataset(p, Source::AquaRat).problems;
    auto g = write(dir, "gsm.jsonl", R"({"question": "Pay $1,200 now", "answer": "#### 1,200"})" "\n");
    auto more = load_dataset(g, Source::Gsm8k).problems;
    problems.insert(problems.end(), more.begin(), more.end());
    write_corpus(dir / "corpus.jsonl", problems);
    CHECK(read_corpus(dir / "corpus.jsonl") == problems);
    for (const auto& prob : problems) CHECK(from_record(to_record(prob)) == prob);
}
