#include "mathforge/perturb.hpp"

#include "mathforge/error.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace mathforge;
using testing_support::verified_pens_record;

namespace {

std::vector<SynthesisRecord> pens_records(Executor& ex, int n) {
    std::vector<SynthesisRecord> out;
    for (int i = 0; i < n; ++i) out.push_back(verified_pens_record("pens-" + std::to_string(i), 2 + i, 3 + 2 * i, ex));
    return out;
}

PerturbedGroup numeric_group(const std::string& id, std::size_t variants) {
    PerturbedGroup g;
    g.group_id = id;
    for (std::size_t v = 0; v < variants; ++v) {
        g.variants.push_back(PerturbedVariant{"q" + std::to_string(v), normalize_answer(std::to_string(v + 1), Source::Gsm8k),
                                              std::nullopt, {}});
    }
    return g;
}

} // namespace

TEST_CASE("plus-set groups hold the original and two new number sets") {
    Executor ex(testing_support::stub_runner_config());
    auto records = pens_records(ex, 3);
    PerturbPlan plan;
    plan.seed = 5;
    auto set = build_plus_set(records, plan, ex, 2);
    REQUIRE(set.groups.size() == 3);
    CHECK(set.item_count() == 9);
    CHECK(set.exclusions.empty());
    CHECK(set.worklist.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& g = set.groups[i];
        CHECK(g.group_id == records[i].problem_id);
        CHECK(g.review == ReviewStatus::Auto);
        REQUIRE(g.variants.size() == 3);
        CHECK(g.variants[0].question == records[i].question);
        CHECK(g.variants[0].expected == records[i].truth);
        std::set<std::map<std::string, std::string>> tuples;
        for (std::size_t v = 1; v < 3; ++v) {
            const auto& a = g.variants[v].assignment;
            tuples.insert(a);
            long boxes = std::stol(a.at("n1"));
            long pens = std::stol(a.at("n2"));
            CHECK(g.variants[v].expected.numeric_value == Number::integer(boxes * pens));
            CHECK(g.variants[v].question.find(" " + std::to_string(boxes) + " boxes") != std::string::npos);
            CHECK_FALSE((boxes == 2 + static_cast<long>(i) && pens == 3 + 2 * static_cast<long>(i)));
        }
        CHECK(tuples.size() == 2);
    }
}

TEST_CASE("plus-set building is deterministic") {
    Executor ex(testing_support::stub_runner_config());
    auto records = pens_records(ex, 2);
    PerturbPlan plan;
    plan.seed = 9;
    testing_support::TempDir dir;
    write_plus_set(dir / "a.jsonl", build_plus_set(records, plan, ex, 1).groups);
    write_plus_set(dir / "b.jsonl", build_plus_set(records, plan, ex, 4).groups);
    CHECK(read_text_file(dir / "a.jsonl") == read_text_file(dir / "b.jsonl"));
}

TEST_CASE("unverified records are excluded and counted") {
    Executor ex(testing_support::stub_runner_config());
    auto records = pens_records(ex, 2);
    records[1].status = SynthesisStatus::WrongAnswer;
    auto set = build_plus_set(records, PerturbPlan{}, ex);
    CHECK(set.groups.size() == 1);
    REQUIRE(set.exclusions.size() == 1);
    CHECK(set.exclusions[0].problem_id == "pens-1");
    CHECK(set.exclusions[0].reason == "WRONG_ANSWER");
}

TEST_CASE("a template with no room for new numbers is excluded") {
    Executor ex(testing_support::stub_runner_config());
    auto records = pens_records(ex, 1);
    records[0].constraints_text = "n1: int in [2, 2]\nn2: int in [3, 3]";
    auto set = build_plus_set(records, PerturbPlan{}, ex);
    CHECK(set.groups.empty());
    REQUIRE(set.exclusions.size() == 1);
}

TEST_CASE("n_new = 0 gives singleton groups and y = x") {
    Executor ex(testing_support::stub_runner_config());
    auto records = pens_records(ex, 3);
    PerturbPlan plan;
    plan.n_new = 0;
    auto set = build_plus_set(records, plan, ex);
    CHECK(set.item_count() == 3);
    AnswerMap answers{{{"pens-0", 0}, "6"}, {{"pens-1", 0}, "wrong"}, {{"pens-2", 0}, "28"}};
    auto report = score_consistency(set.groups, answers);
    CHECK(report.x == 2);
    CHECK(report.y == report.x);
}

TEST_CASE("consistency counts match a brute-force recount") {
    std::mt19937 gen(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n_groups = 1 + gen() % 100;
        std::size_t width = 1 + gen() % 4;
        std::vector<PerturbedGroup> groups;
        AnswerMap answers;
        std::vector<std::vector<bool>> matrix(n_groups, std::vector<bool>(width));
        for (std::size_t g = 0; g < n_groups; ++g) {
            groups.push_back(numeric_group("g" + std::to_string(g), width));
            for (std::size_t v = 0; v < width; ++v) {
                int roll = static_cast<int>(gen() % 3);
                matrix[g][v] = roll == 0;
                if (roll == 0) answers[{groups.back().group_id, v}] = std::to_string(v + 1);
                if (roll == 1) answers[{groups.back().group_id, v}] = std::to_string(v + 2);
            }
        }
        std::size_t x = 0, y = 0;
        for (std::size_t g = 0; g < n_groups; ++g) {
            bool any = false, all = true;
            for (std::size_t v = 0; v < width; ++v) {
                any = any || matrix[g][v];
                all = all && matrix[g][v];
            }
            x += any;
            y += all;
        }
        auto report = score_consistency(groups, answers);
        REQUIRE(report.x == x);
        REQUIRE(report.y == y);
        CHECK(report.y <= report.x);
        CHECK(report.x <= report.total_groups);

        std::shuffle(groups.begin(), groups.end(), gen);
        auto shuffled = score_consistency(groups, answers);
        CHECK(shuffled.x == x);
        CHECK(shuffled.y == y);
    }
}

TEST_CASE("all answers wrong leaves the ratio absent") {
    std::vector<PerturbedGroup> groups{numeric_group("a", 3), numeric_group("b", 3)};
    auto report = score_consistency(groups, {});
    CHECK(report.x == 0);
    CHECK(report.y == 0);
    CHECK_FALSE(report.ratio);
    CHECK(report.to_json()["ratio"].is_null());
}

TEST_CASE("ratio rounding agrees with an exact oracle") {
    std::mt19937 gen(3);
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t x = 1 + gen() % 5000;
        std::uint64_t y = gen() % (x + 1);
        // oracle: whole tenths by long division, then compare the remainder with half of x
        std::uint64_t tenths = (1000 * y) / x;
        std::uint64_t rem = (1000 * y) % x;
        if (2 * rem >= x) ++tenths;
        std::string expect = std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
        REQUIRE(format_ratio(x, y) == expect);
    }
    CHECK(format_ratio(8, 1) == "12.5");
    CHECK(format_ratio(3, 3) == "100.0");
    CHECK_THROWS_AS(format_ratio(0, 0), Error);
}

TEST_CASE("review decisions filter groups") {
    std::vector<PerturbedGroup> groups;
    for (int i = 0; i < 10; ++i) groups.push_back(numeric_group("g" + std::to_string(i), 3));
    CHECK(apply_review(groups, {}).size() == 10);
    auto kept = apply_review(groups, {{"g3", "HUMAN_REJECTED", "wrong units"}, {"g4", "approve", ""}});
    CHECK(kept.size() == 9);
    CHECK(std::none_of(kept.begin(), kept.end(), [](const auto& g) { return g.group_id == "g3"; }));
    CHECK(kept[3].review == ReviewStatus::HumanApproved);
    try {
        apply_review(groups, {{"nope", "reject", ""}});
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownGroupId);
    }
}

TEST_CASE("plus-set, answers and review files round-trip") {
    Executor ex(testing_support::stub_runner_config());
    auto set = build_plus_set(pens_records(ex, 2), PerturbPlan{}, ex);
    testing_support::TempDir dir;
    write_plus_set(dir / "plus.jsonl", set.groups);
    auto back = read_plus_set(dir / "plus.jsonl");
    REQUIRE(back.size() == set.groups.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].group_id == set.groups[i].group_id);
        REQUIRE(back[i].variants.size() == 3);
        for (std::size_t v = 0; v < 3; ++v) {
            CHECK(back[i].variants[v].question == set.groups[i].variants[v].question);
            CHECK(back[i].variants[v].expected.render() == set.groups[i].variants[v].expected.render());
        }
    }
    auto lines = read_jsonl(dir / "plus.jsonl");
    CHECK(lines.size() == 6);
    for (auto key : {"group_id", "variant_index", "question", "expected_kind", "expected_value"}) CHECK(lines[0].contains(key));

    write_text_file(dir / "answers.jsonl", "{\"group_id\":\"pens-0\",\"variant_index\":0,\"answer_text\":\"6\"}\n");
    auto answers = read_answers(dir / "answers.jsonl");
    CHECK(answers.at({"pens-0", 0}) == "6");
    auto report = score_consistency(back, answers);
    CHECK(report.x == 1);
    CHECK(report.y == 0);

    write_review(dir / "review.jsonl", set.worklist);
    auto review = read_review(dir / "review.jsonl");
    CHECK(review.size() == 2);
    CHECK(apply_review(back, review).size() == 2);
}
