#include "mathforge/emit.hpp"

#include "mathforge/error.hpp"
#include "mathforge/lexer.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace mathforge;
using testing_support::verified_pens_record;

namespace {

std::size_t docstring_tokens(const std::string& program) {
    return docstring_token_indices(tokenize_source(program)).size();
}

SourceProblem corpus_problem(const std::string& id, Source source) {
    SourceProblem p;
    p.id = id;
    p.source = source;
    p.question = "q";
    p.answer = normalize_answer("1", source);
    return p;
}

} // namespace

TEST_CASE("success rate rounds half-up at two decimals") {
    CHECK(success_rate(0, 10) == "0.00");
    CHECK(success_rate(10, 10) == "100.00");
    CHECK(success_rate(1, 8) == "12.50");
    CHECK(success_rate(1, 800) == "0.13");
    CHECK(success_rate(1, 3) == "33.33");
    CHECK(success_rate(2, 3) == "66.67");
    CHECK_THROWS_AS(success_rate(1, 0), Error);
    std::mt19937 gen(11);
    for (int i = 0; i < 5000; ++i) {
        std::uint64_t q = 1 + gen() % 200000;
        std::uint64_t s = gen() % (q + 1);
        std::uint64_t hundredths = (10000 * s) / q;
        if (2 * ((10000 * s) % q) >= q) ++hundredths;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%llu.%02llu", static_cast<unsigned long long>(hundredths / 100),
                      static_cast<unsigned long long>(hundredths % 100));
        REQUIRE(success_rate(s, q) == buf);
    }
}

TEST_CASE("stats count verified records per source") {
    Executor ex(testing_support::stub_runner_config());
    std::vector<SourceProblem> corpus;
    std::vector<SynthesisRecord> records;
    for (int i = 0; i < 4; ++i) {
        auto rec = verified_pens_record("g" + std::to_string(i), 2, 3, ex);
        if (i == 3) rec.status = SynthesisStatus::ExecFailed;
        records.push_back(rec);
        corpus.push_back(corpus_problem(rec.problem_id, Source::Gsm8k));
    }
    corpus.push_back(corpus_problem("m0", Source::Math));
    auto table = compute_stats(records, corpus);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].source == Source::Gsm8k);
    CHECK(table.rows[0].samples == 3);
    CHECK(table.rows[0].questions == 4);
    CHECK(table.rows[0].rate == "75.00");
    CHECK(table.rows[1].rate == "0.00");
    CHECK(table.total_samples == 3);
    CHECK(table.render_text().find("75.00%") != std::string::npos);
    CHECK(table.to_json()["sources"][0]["success_rate"] == "75.00");

    corpus.erase(corpus.begin(), corpus.begin() + 4);
    CHECK_THROWS_AS(compute_stats(records, corpus), Error);
}

TEST_CASE("a source with records but no questions is rejected") {
    SynthesisRecord rec;
    rec.problem_id = "x";
    rec.source = Source::Math;
    try {
        compute_stats({rec}, {corpus_problem("x", Source::Gsm8k)});
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK((e.code() == ErrorCode::ZeroQuestions || e.code() == ErrorCode::SchemaMismatch));
    }
}

TEST_CASE("sft emission keeps docstrings by default and strips them on request") {
    Executor ex(testing_support::stub_runner_config());
    std::vector<SynthesisRecord> records;
    for (int i = 0; i < 5; ++i) records.push_back(verified_pens_record("p" + std::to_string(4 - i), 2 + i, 3, ex));
    auto plain = emit_sft(sft_inputs_from_records(records));
    REQUIRE(plain.size() == 5);
    CHECK(plain[0].provenance["problem_id"] == "p0");
    for (const auto& r : plain) {
        CHECK(docstring_tokens(r.output) == 1);
        CHECK(r.instruction.find("Sam has") != std::string::npos);
        CHECK(r.output.find("print(solution())") != std::string::npos);
    }
    SftOptions strip;
    strip.strip_docstrings = true;
    auto stripped = emit_sft(sft_inputs_from_records(records), strip);
    REQUIRE(stripped.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(docstring_tokens(stripped[i].output) == 0);
        auto a = ex.execute(plain[i].output);
        auto b = ex.execute(stripped[i].output);
        REQUIRE(a.value_line);
        CHECK(a.value_line == b.value_line);
    }
    testing_support::TempDir dir;
    write_sft(dir / "a.jsonl", stripped);
    write_sft(dir / "b.jsonl", emit_sft(sft_inputs_from_records(records), strip));
    CHECK(read_text_file(dir / "a.jsonl") == read_text_file(dir / "b.jsonl"));
    CHECK(read_sft(dir / "a.jsonl").size() == 5);
}

TEST_CASE("symbolic samples are filtered unless requested") {
    Executor ex(testing_support::stub_runner_config());
    auto rec = verified_pens_record("p", 2, 3, ex);
    auto job = *template_job(rec);
    AugmentationPlan plan;
    plan.budget = 2;
    plan.include_symbolic = true;
    AugmentationReport report;
    auto samples = augment(job, plan, ex, report);
    std::size_t full = std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.sample.full; });
    REQUIRE(full < samples.size());
    CHECK(emit_sft(sft_inputs_from_augmented(samples)).size() == full);
    SftOptions all;
    all.include_symbolic = true;
    CHECK(emit_sft(sft_inputs_from_augmented(samples), all).size() == samples.size());
}

TEST_CASE("emission provenance joins back to one record") {
    Executor ex(testing_support::stub_runner_config());
    std::vector<SynthesisRecord> records{verified_pens_record("a", 2, 3, ex), verified_pens_record("b", 4, 5, ex)};
    for (const auto& r : emit_sft(sft_inputs_from_records(records))) {
        std::size_t hits = 0;
        for (const auto& rec : records) {
            if (rec.problem_id == r.provenance["problem_id"] && rec.final_template->digest() == r.provenance["template_digest"]) ++hits;
        }
        CHECK(hits == 1);
    }
}

TEST_CASE("empty emission input is an error") {
    try {
        emit_sft({});
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyInput);
    }
}

TEST_CASE("instruction preamble template") {
    Executor ex(testing_support::stub_runner_config());
    SftOptions o;
    o.preamble = "Solve with code:\n{{question}}\nEnd.";
    auto out = emit_sft(sft_inputs_from_records({verified_pens_record("a", 2, 3, ex)}), o);
    CHECK(out[0].instruction.starts_with("Solve with code:\nSam has 2 boxes"));
    CHECK(out[0].instruction.ends_with("\nEnd."));
}

TEST_CASE("run reports add up") {
    auto empty = emit_report({});
    for (const auto& [k, v] : empty.counts) CHECK(v == 0);
    CHECK(empty.counts.contains("synthesis.status.VERIFIED"));

    Executor ex(testing_support::stub_runner_config());
    std::vector<SynthesisRecord> a{verified_pens_record("a", 2, 3, ex)};
    std::vector<SynthesisRecord> b{verified_pens_record("b", 2, 4, ex), verified_pens_record("c", 2, 5, ex)};
    b[1].status = SynthesisStatus::WrongAnswer;
    b[1].failure = "VALUE_MISMATCH";
    auto ra = emit_report(a);
    auto rb = emit_report(b);
    std::vector<SynthesisRecord> ab{a[0], b[0], b[1]};
    auto whole = emit_report(ab);
    ra.merge(rb);
    CHECK(ra.counts == whole.counts);
    CHECK(whole.counts["synthesis.problems"] == 3);
    CHECK(whole.counts["synthesis.status.WRONG_ANSWER"] == 1);
    CHECK(whole.render_text().find("llm.requests") != std::string::npos);
}
