#include "mathforge/corpus.hpp"
#include "mathforge/emit.hpp"
#include "mathforge/error.hpp"
#include "mathforge/manifest.hpp"
#include "mathforge/perturb.hpp"
#include "mathforge/scale.hpp"
#include "mathforge/sweep.hpp"
#include "mathforge/synthesis.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

using namespace mathforge;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::uint64_t seed = 0;
    std::string runner;
    std::string interpreter = "python3";
    std::string scratch;
    std::size_t max_concurrent = 4;
    long timeout_ms = 10'000;
    std::size_t memory_mb = 512;
    std::size_t output_kib = 64;
    long grace_ms = 500;
    double rel_tol = 1e-6;
    double abs_tol = 1e-9;
    bool dump_config = false;
};

struct IngestArgs {
    std::string format;
    std::vector<std::string> inputs;
    std::string out;
    std::string rejects;
    bool append = false;
};

struct SynthesizeArgs {
    std::string corpus;
    std::string out;
    std::string cache;
    std::string cache_mode = "replay";
    std::size_t max_fix_rounds = 1;
    std::size_t retries = 3;
    std::string model = "gpt-4o";
    double temperature = 0.0;
    std::string base_url = "https://api.openai.com";
    double requests_per_second = 2.0;
    std::string prompt_template;
};

struct ScaleArgs {
    std::string records;
    std::string out;
    std::string report;
    std::size_t budget = 1;
    bool all_selectors = false;
    std::size_t selector_cap = 16;
    std::size_t sampled_selectors = 32;
    bool no_dedup = false;
};

struct EmitArgs {
    std::vector<std::string> records;
    std::string out;
    bool strip_docstrings = false;
    bool include_symbolic = false;
    std::string preamble;
    std::string report;
    std::string scale_report;
};

struct StatsArgs {
    std::string records;
    std::string corpus;
    std::string out = "stats.json";
};

struct PerturbBuildArgs {
    std::string records;
    std::string out;
    std::string review;
    std::size_t n_new = 2;
};

struct PerturbScoreArgs {
    std::string groups;
    std::string answers;
    std::string review;
    std::string out = "consistency.json";
};

struct SweepArgs {
    std::string input;
    std::string records;
    std::string report = "sweep.json";
    bool strict = false;
};

void print_error(std::string_view code, std::string_view detail, std::string_view subcommand) {
    Json j;
    j["error"] = code;
    j["detail"] = detail;
    if (!subcommand.empty()) j["subcommand"] = subcommand;
    std::cerr << j.dump() << std::endl;
}

RunnerConfig runner_config(const Globals& g) {
    if (g.runner.empty()) {
        throw Error(ErrorCode::ConfigInvalid, "no sandbox runner configured; pass --runner or set the runner key");
    }
    RunnerConfig c;
    c.runner = g.runner;
    c.interpreter = g.interpreter;
    if (!g.scratch.empty()) c.scratch_root = g.scratch;
    c.grace = std::chrono::milliseconds(g.grace_ms);
    c.max_concurrent = g.max_concurrent;
    return c;
}

ExecutionLimits limits(const Globals& g) {
    ExecutionLimits l;
    l.timeout = std::chrono::milliseconds(g.timeout_ms);
    l.memory_bytes = g.memory_mb * 1024 * 1024;
    l.output_bytes = g.output_kib * 1024;
    return l;
}

ComparisonPolicy policy(const Globals& g) { return ComparisonPolicy{g.rel_tol, g.abs_tol}; }

std::size_t next_index(const std::vector<SourceProblem>& corpus, Source source) {
    std::size_t next = 0;
    std::string prefix = std::string(source_tag(source)) + "-";
    for (const auto& p : corpus) {
        if (p.source != source || !p.id.starts_with(prefix)) continue;
        try {
            next = std::max(next, static_cast<std::size_t>(std::stoull(p.id.substr(prefix.size()))) + 1);
        } catch (const std::exception&) {
        }
    }
    return next;
}

int run_ingest(const IngestArgs& a, RunManifest& m) {
    auto source = parse_source(a.format);
    if (!source) throw Error(ErrorCode::UsageError, "unknown --format " + a.format);
    std::vector<SourceProblem> corpus;
    if (a.append && fs::exists(a.out)) {
        m.add_input(a.out);
        corpus = read_corpus(a.out);
    }
    std::unique_ptr<AppendLog> rejects;
    if (!a.rejects.empty()) {
        fs::remove(a.rejects);
        rejects = std::make_unique<AppendLog>(a.rejects);
    }
    std::size_t added = 0, rejected = 0, records = 0;
    for (const auto& in : a.inputs) {
        m.add_input(in);
        LoadOptions opts;
        opts.first_index = next_index(corpus, *source);
        opts.rejects_log = rejects.get();
        auto result = load_dataset(in, *source, opts);
        records += result.input_records;
        rejected += result.rejects.size();
        added += result.problems.size();
        for (auto& p : result.problems) corpus.push_back(std::move(p));
    }
    rejects.reset();
    write_corpus(a.out, corpus);
    m.add_output(a.out);
    if (!a.rejects.empty()) m.add_output(a.rejects);
    Json summary{{"records", records}, {"ingested", added}, {"rejected", rejected}, {"corpus_size", corpus.size()}};
    std::cout << summary.dump() << std::endl;
    return 0;
}

int run_synthesize(const SynthesizeArgs& a, const Globals& g, RunManifest& m) {
    auto mode = parse_cache_mode(a.cache_mode);
    if (!mode) throw Error(ErrorCode::UsageError, "unknown --cache-mode " + a.cache_mode);
    if (*mode != CacheMode::Off && a.cache.empty()) {
        throw Error(ErrorCode::UsageError, "--cache is required with --cache-mode " + a.cache_mode);
    }
    m.add_input(a.corpus);
    auto corpus = read_corpus(a.corpus);

    SynthesisConfig config;
    config.completion.model = a.model;
    config.completion.temperature = a.temperature;
    config.max_fix_rounds = a.max_fix_rounds;
    config.max_client_retries = a.retries;
    config.limits = limits(g);
    config.policy = policy(g);
    if (!a.prompt_template.empty()) {
        m.add_input(a.prompt_template);
        config.prompt.template_text = read_text_file(a.prompt_template);
    }

    std::unique_ptr<ResponseCache> cache;
    if (!a.cache.empty()) {
        if (fs::exists(a.cache)) m.add_input(a.cache);
        cache = std::make_unique<ResponseCache>(a.cache);
    }
    std::unique_ptr<HttpLlmClient> http;
    if (*mode != CacheMode::Replay) {
        HttpClientConfig hc;
        hc.base_url = a.base_url;
        hc.requests_per_second = a.requests_per_second;
        http = std::make_unique<HttpLlmClient>(hc);
    }
    CachingClient client(http.get(), cache.get(), *mode);
    Executor executor(runner_config(g));

    auto records = synthesize_all(corpus, client, executor, config, g.workers);
    m.mark("synthesize");
    write_records(a.out, records);
    m.add_output(a.out);
    if (cache && *mode == CacheMode::Record) m.add_output(a.cache);

    std::size_t verified = std::count_if(records.begin(), records.end(),
                                         [](const auto& r) { return r.status == SynthesisStatus::Verified; });
    Json summary{{"problems", records.size()}, {"verified", verified}, {"llm_requests", emit_report(records).counts["llm.requests"]}};
    std::cout << summary.dump() << std::endl;
    return 0;
}

int run_scale(const ScaleArgs& a, const Globals& g, RunManifest& m) {
    m.add_input(a.records);
    auto records = read_records(a.records);
    std::vector<TemplateJob> jobs;
    for (const auto& r : records) {
        if (auto job = template_job(r)) jobs.push_back(std::move(*job));
    }
    AugmentationPlan plan;
    plan.budget = a.budget;
    plan.include_symbolic = a.all_selectors;
    plan.selector_cap = a.selector_cap;
    plan.sampled_selectors = a.sampled_selectors;
    plan.seed = g.seed;
    plan.dedup = !a.no_dedup;
    m.set_seed("seed", g.seed);

    Executor executor(runner_config(g));
    AugmentationReport report;
    auto samples = augment_all(jobs, plan, executor, report, g.workers, limits(g));
    m.mark("scale");
    std::vector<Json> lines;
    lines.reserve(samples.size());
    for (const auto& s : samples) lines.push_back(augmented_to_json(s));
    write_jsonl(a.out, lines);
    m.add_output(a.out);
    if (!a.report.empty()) {
        write_text_file(a.report, report.to_json().dump(2) + "\n");
        m.add_output(a.report);
    }
    std::cout << report.to_json().dump() << std::endl;
    return 0;
}

int run_emit(const EmitArgs& a, RunManifest& m) {
    std::vector<SynthesisRecord> records;
    std::vector<AugmentedSample> augmented;
    for (const auto& path : a.records) {
        m.add_input(path);
        for (const auto& j : read_jsonl(path)) {
            if (j.contains("rounds")) {
                records.push_back(record_from_json(j));
            } else {
                augmented.push_back(augmented_from_json(j));
            }
        }
    }
    SftOptions options;
    options.strip_docstrings = a.strip_docstrings;
    options.include_symbolic = a.include_symbolic;
    if (!a.preamble.empty()) {
        m.add_input(a.preamble);
        options.preamble = read_text_file(a.preamble);
        while (!options.preamble.empty() && options.preamble.back() == '\n') options.preamble.pop_back();
    }
    auto inputs = sft_inputs_from_records(records);
    for (auto& in : sft_inputs_from_augmented(augmented)) inputs.push_back(std::move(in));
    auto sft = emit_sft(std::move(inputs), options);
    write_sft(a.out, sft);
    m.add_output(a.out);
    if (!a.report.empty()) {
        std::optional<AugmentationReport> scale_report;
        if (!a.scale_report.empty()) {
            m.add_input(a.scale_report);
            scale_report.emplace();
            Json counts = Json::parse(read_text_file(a.scale_report));
            for (const auto& [k, v] : counts.items()) {
                scale_report->add(k, v.get<std::size_t>());
            }
        }
        auto report = emit_report(records, scale_report ? &*scale_report : nullptr);
        report.add("emit.sft_records", sft.size());
        write_text_file(a.report, report.render_text());
        m.add_output(a.report);
    }
    std::cout << Json{{"sft_records", sft.size()}}.dump() << std::endl;
    return 0;
}

int run_stats(const StatsArgs& a, RunManifest& m) {
    m.add_input(a.records);
    m.add_input(a.corpus);
    auto table = compute_stats(read_records(a.records), read_corpus(a.corpus));
    write_text_file(a.out, table.to_json().dump(2) + "\n");
    m.add_output(a.out);
    std::cout << table.render_text();
    return 0;
}

int run_perturb_build(const PerturbBuildArgs& a, const Globals& g, RunManifest& m) {
    m.add_input(a.records);
    PerturbPlan plan;
    plan.n_new = a.n_new;
    plan.seed = g.seed;
    m.set_seed("seed", g.seed);
    Executor executor(runner_config(g));
    auto set = build_plus_set(read_records(a.records), plan, executor, g.workers, limits(g));
    m.mark("perturb_build");
    write_plus_set(a.out, set.groups);
    m.add_output(a.out);
    fs::path review = a.review.empty() ? fs::path(a.out + ".review.jsonl") : fs::path(a.review);
    write_review(review, set.worklist);
    m.add_output(review);
    Json exclusions = Json::array();
    for (const auto& e : set.exclusions) exclusions.push_back({{"problem_id", e.problem_id}, {"reason", e.reason}});
    std::cout << Json{{"groups", set.groups.size()}, {"items", set.item_count()}, {"excluded", exclusions}}.dump() << std::endl;
    return 0;
}

int run_perturb_score(const PerturbScoreArgs& a, const Globals& g, RunManifest& m) {
    m.add_input(a.groups);
    m.add_input(a.answers);
    auto groups = read_plus_set(a.groups);
    if (!a.review.empty()) {
        m.add_input(a.review);
        groups = apply_review(std::move(groups), read_review(a.review));
    }
    auto report = score_consistency(groups, read_answers(a.answers), policy(g));
    write_text_file(a.out, report.to_json().dump(2) + "\n");
    m.add_output(a.out);
    std::cout << "groups " << report.total_groups << "  x " << report.x << "  y " << report.y << "  y/x "
              << (report.x ? format_ratio(report.x, report.y) + "%" : std::string("-")) << std::endl;
    return 0;
}

int run_sweep(const SweepArgs& a, const Globals& g, RunManifest& m) {
    m.add_input(a.input);
    auto items = load_sweep_items(a.input);
    Executor executor(runner_config(g));
    auto report = verify_sweep(items, executor, policy(g), limits(g), g.workers);
    if (!a.records.empty()) {
        m.add_input(a.records);
        check_constraint_compliance(items, read_records(a.records), report);
    }
    m.mark("verify_sweep");
    write_text_file(a.report, report.to_json().dump(2) + "\n");
    m.add_output(a.report);
    std::cout << Json{{"checked", report.checked}, {"passed", report.passed}, {"failures", report.failures.size()}}.dump()
              << std::endl;
    if (a.strict && !report.clean()) {
        print_error("SWEEP_FAILED", std::to_string(report.failures.size()) + " failing samples", "verify-sweep");
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Template synthesis, verification and scaling for math word-problem corpora.", "mathforge"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.set_config("--config", "", "Flat key/value config file; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--workers", g.workers, "Worker threads")->capture_default_str();
    app.add_option("--seed", g.seed, "Sampling seed")->capture_default_str();
    app.add_option("--runner", g.runner, "Sandbox runner script");
    app.add_option("--interpreter", g.interpreter, "Interpreter that runs the runner script")->capture_default_str();
    app.add_option("--scratch", g.scratch, "Directory for per-run scratch space");
    app.add_option("--max-concurrent", g.max_concurrent, "Interpreter processes at once")->capture_default_str();
    app.add_option("--timeout-ms", g.timeout_ms, "Per-program wall-clock limit")->capture_default_str();
    app.add_option("--memory-mb", g.memory_mb, "Per-program address-space limit")->capture_default_str();
    app.add_option("--output-kib", g.output_kib, "Per-program output cap")->capture_default_str();
    app.add_option("--grace-ms", g.grace_ms, "Extra time before the host kills a runner")->capture_default_str();
    app.add_option("--rel-tol", g.rel_tol, "Relative tolerance for numeric answers")->capture_default_str();
    app.add_option("--abs-tol", g.abs_tol, "Absolute tolerance for numeric answers")->capture_default_str();
    app.add_flag("--dump-config", g.dump_config, "Print the resolved configuration and exit")->configurable(false);

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Normalize a source dataset into a corpus file");
    c_ingest->add_option("--format", ingest.format, "Source format")->required();
    c_ingest->add_option("--in", ingest.inputs, "Input file (repeatable)")->required();
    c_ingest->add_option("--out", ingest.out, "Corpus JSONL")->required();
    c_ingest->add_option("--rejects", ingest.rejects, "Rejected records JSONL");
    c_ingest->add_flag("--append", ingest.append, "Add to an existing corpus file");

    SynthesizeArgs synth;
    auto* c_synth = app.add_subcommand("synthesize", "Generate and verify one template per problem");
    c_synth->add_option("--corpus", synth.corpus, "Corpus JSONL")->required();
    c_synth->add_option("--out", synth.out, "Synthesis records JSONL")->required();
    c_synth->add_option("--cache", synth.cache, "Response cache JSONL");
    c_synth->add_option("--cache-mode", synth.cache_mode, "record, replay or off")->capture_default_str();
    c_synth->add_option("--max-fix-rounds", synth.max_fix_rounds, "Bug-fix rounds after the first")->capture_default_str();
    c_synth->add_option("--retries", synth.retries, "Client retries before BUDGET_EXHAUSTED")->capture_default_str();
    c_synth->add_option("--model", synth.model, "Model name")->capture_default_str();
    c_synth->add_option("--temperature", synth.temperature, "Sampling temperature")->capture_default_str();
    c_synth->add_option("--base-url", synth.base_url, "Chat completions endpoint host")->capture_default_str();
    c_synth->add_option("--rps", synth.requests_per_second, "Request rate limit")->capture_default_str();
    c_synth->add_option("--prompt-template", synth.prompt_template, "Prompt template file");

    ScaleArgs scale;
    auto* c_scale = app.add_subcommand("scale", "Instantiate verified templates with fresh numbers");
    c_scale->add_option("--records", scale.records, "Synthesis records JSONL")->required();
    c_scale->add_option("--out", scale.out, "Augmented samples JSONL")->required();
    c_scale->add_option("--report", scale.report, "Counters JSON");
    c_scale->add_option("--plan-budget", scale.budget, "Assignment draws per template")->capture_default_str();
    c_scale->add_flag("--all-selectors", scale.all_selectors, "Also emit partially instantiated variants");
    c_scale->add_option("--selector-cap", scale.selector_cap, "Enumerate selectors up to this many parameters")->capture_default_str();
    c_scale->add_option("--sampled-selectors", scale.sampled_selectors, "Selectors drawn above the cap")->capture_default_str();
    c_scale->add_flag("--no-dedup", scale.no_dedup, "Keep duplicate samples");

    EmitArgs emit;
    auto* c_emit = app.add_subcommand("emit", "Write the instruction-tuning dataset");
    c_emit->add_option("--records", emit.records, "Synthesis records or augmented samples (repeatable)")->required();
    c_emit->add_option("--out", emit.out, "SFT JSONL")->required();
    c_emit->add_flag("--strip-docstrings", emit.strip_docstrings, "Remove docstrings from programs");
    c_emit->add_flag("--include-symbolic", emit.include_symbolic, "Keep partially instantiated samples");
    c_emit->add_option("--preamble", emit.preamble, "Instruction preamble file");
    c_emit->add_option("--report", emit.report, "Run report text file");
    c_emit->add_option("--scale-report", emit.scale_report, "Counters JSON from scale, folded into the report");

    StatsArgs stats;
    auto* c_stats = app.add_subcommand("stats", "Per-source sample counts and success rates");
    c_stats->add_option("--records", stats.records, "Synthesis records JSONL")->required();
    c_stats->add_option("--corpus", stats.corpus, "Corpus JSONL")->required();
    c_stats->add_option("--out", stats.out, "Stats JSON")->capture_default_str();

    auto* c_perturb = app.add_subcommand("perturb", "Perturbed evaluation sets");
    c_perturb->require_subcommand(1);
    c_perturb->fallthrough();
    PerturbBuildArgs pbuild;
    auto* c_pbuild = c_perturb->add_subcommand("build", "Original plus new number sets per problem");
    c_pbuild->add_option("--records", pbuild.records, "Synthesis records JSONL")->required();
    c_pbuild->add_option("--out", pbuild.out, "Plus-set JSONL")->required();
    c_pbuild->add_option("--review", pbuild.review, "Review worklist JSONL (default <out>.review.jsonl)");
    c_pbuild->add_option("--n-new", pbuild.n_new, "New number sets per problem")->capture_default_str();
    PerturbScoreArgs pscore;
    auto* c_pscore = c_perturb->add_subcommand("score", "Consistency metrics over model answers");
    c_pscore->add_option("--groups", pscore.groups, "Plus-set JSONL")->required();
    c_pscore->add_option("--answers", pscore.answers, "Answers JSONL")->required();
    c_pscore->add_option("--review", pscore.review, "Review decisions JSONL");
    c_pscore->add_option("--out", pscore.out, "Report JSON")->capture_default_str();

    SweepArgs sweep;
    auto* c_sweep = app.add_subcommand("verify-sweep", "Re-execute every fully instantiated sample");
    c_sweep->add_option("--in", sweep.input, "Augmented samples, SFT file or synthesis records")->required();
    c_sweep->add_option("--records", sweep.records, "Synthesis records for constraint compliance");
    c_sweep->add_option("--report", sweep.report, "Report JSON")->capture_default_str();
    c_sweep->add_flag("--strict", sweep.strict, "Exit nonzero unless every sample passes");

    std::string subcommand;
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ConfigError& e) {
        print_error(to_string(ErrorCode::ConfigInvalid), e.what(), "");
        return 2;
    } catch (const CLI::FileError& e) {
        print_error(to_string(ErrorCode::ConfigInvalid), e.what(), "");
        return 2;
    } catch (const CLI::ParseError& e) {
        print_error(to_string(ErrorCode::UsageError), e.what(), "");
        return 2;
    }

    if (g.dump_config) {
        std::cout << app.config_to_str(true, false);
        return 0;
    }

    try {
        if (g.workers == 0) throw Error(ErrorCode::ConfigInvalid, "--workers must be positive");
        if (g.max_concurrent == 0) throw Error(ErrorCode::ConfigInvalid, "--max-concurrent must be positive");
        if (g.timeout_ms <= 0) throw Error(ErrorCode::ConfigInvalid, "--timeout-ms must be positive");
        int rc = 0;
        auto run = [&](const std::string& name, auto&& body) {
            subcommand = name;
            RunManifest manifest(name);
            manifest.set_config(app.config_to_str(true, false));
            rc = body(manifest);
            manifest.mark("total");
            manifest.write();
        };
        if (*c_ingest) run("ingest", [&](RunManifest& m) { return run_ingest(ingest, m); });
        if (*c_synth) run("synthesize", [&](RunManifest& m) { return run_synthesize(synth, g, m); });
        if (*c_scale) run("scale", [&](RunManifest& m) { return run_scale(scale, g, m); });
        if (*c_emit) run("emit", [&](RunManifest& m) { return run_emit(emit, m); });
        if (*c_stats) run("stats", [&](RunManifest& m) { return run_stats(stats, m); });
        if (*c_pbuild) run("perturb build", [&](RunManifest& m) { return run_perturb_build(pbuild, g, m); });
        if (*c_pscore) run("perturb score", [&](RunManifest& m) { return run_perturb_score(pscore, g, m); });
        if (*c_sweep) run("verify-sweep", [&](RunManifest& m) { return run_sweep(sweep, g, m); });
        return rc;
    } catch (const Error& e) {
        print_error(to_string(e.code()), e.detail(), subcommand);
        return e.code() == ErrorCode::UsageError ? 2 : 1;
    } catch (const std::exception& e) {
        print_error("INTERNAL_ERROR", e.what(), subcommand);
        return 1;
    }
}
