#include "mathforge/digest.hpp"
#include "mathforge/jsonl.hpp"
#include "mathforge/synthesis.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

using namespace mathforge;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

CliResult cli(const std::string& args, const testing_support::TempDir& scratch) {
    fs::path out = scratch / "cli.out", err = scratch / "cli.err";
    std::string cmd = quote(MATHFORGE_CLI) + " " + args + " >" + quote(out.string()) + " 2>" + quote(err.string());
    int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text_file(out);
    r.err = read_text_file(err);
    return r;
}

std::string runner_flags() {
    return "--runner " + quote(testing_support::stub_runner().string()) + " --interpreter " + quote(MATHFORGE_PYTHON);
}

std::map<std::string, std::string> parse_dump(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string v = line.substr(eq + 1);
        if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
        out[line.substr(0, eq)] = v;
    }
    return out;
}

std::vector<SynthesisRecord> pens_records(std::size_t n) {
    Executor ex(testing_support::stub_runner_config());
    std::vector<SynthesisRecord> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(testing_support::verified_pens_record("gsm8k-" + std::to_string(i), 2 + int(i), 3 + int(i), ex));
    return out;
}

/// Every regular file in `dir` except manifests must be listed with its digest.
void check_manifest_covers(const fs::path& dir, const fs::path& manifest) {
    REQUIRE(fs::exists(manifest));
    auto j = Json::parse(read_text_file(manifest));
    CHECK(j["version"].is_string());
    CHECK(j["config_digest"].get<std::string>().size() == 64);
    std::map<std::string, std::string> listed;
    for (const auto& o : j["outputs"]) listed[fs::path(o["path"].get<std::string>()).filename().string()] = o["sha256"];
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.ends_with(".manifest.json")) continue;
        CAPTURE(name);
        REQUIRE(listed.contains(name));
        CHECK(listed[name] == file_sha256(entry.path()));
    }
}

} // namespace

TEST_CASE("cli help and usage errors") {
    testing_support::TempDir dir;
    auto help = cli("--help", dir);
    CHECK(help.code == 0);
    CHECK(help.out.find("synthesize") != std::string::npos);
    CHECK(cli("perturb build --help", dir).code == 0);

    auto bad = cli("--no-such-flag scale --records a --out b", dir);
    CHECK(bad.code == 2);
    auto err = Json::parse(bad.err);
    CHECK(err["error"] == "USAGE_ERROR");

    auto missing = cli("scale --out b", dir);
    CHECK(missing.code == 2);
    CHECK(Json::parse(missing.err)["error"] == "USAGE_ERROR");

    auto no_config = cli("--config " + quote((dir / "absent.ini").string()) + " scale --records a --out b", dir);
    CHECK(no_config.code == 2);
    CHECK(Json::parse(no_config.err)["error"] == "CONFIG_INVALID");

    write_text_file(dir / "corpus.jsonl", "");
    auto no_runner = cli("synthesize --corpus " + quote((dir / "corpus.jsonl").string()) + " --out " +
                             quote((dir / "s.jsonl").string()) + " --cache " + quote((dir / "c.jsonl").string()),
                         dir);
    CHECK(no_runner.code != 0);
    CHECK(Json::parse(no_runner.err)["error"] == "CONFIG_INVALID");
}

TEST_CASE("config precedence holds per flag") {
    struct Flag {
        std::string dump_key;
        std::string config_line;
        std::string section;
        std::string cli;
        std::string config_value;
        std::string cli_value;
    };
    const std::vector<Flag> flags = {
        {"workers", "workers=3", "", "--workers 5", "3", "5"},
        {"seed", "seed=11", "", "--seed 12", "11", "12"},
        {"runner", "runner=\"/cfg/runner.py\"", "", "--runner /cli/runner.py", "/cfg/runner.py", "/cli/runner.py"},
        {"interpreter", "interpreter=\"python3.11\"", "", "--interpreter python3.12", "python3.11", "python3.12"},
        {"scratch", "scratch=\"/cfg/tmp\"", "", "--scratch /cli/tmp", "/cfg/tmp", "/cli/tmp"},
        {"max-concurrent", "max-concurrent=7", "", "--max-concurrent 9", "7", "9"},
        {"timeout-ms", "timeout-ms=2500", "", "--timeout-ms 3500", "2500", "3500"},
        {"memory-mb", "memory-mb=256", "", "--memory-mb 128", "256", "128"},
        {"output-kib", "output-kib=16", "", "--output-kib 32", "16", "32"},
        {"grace-ms", "grace-ms=50", "", "--grace-ms 75", "50", "75"},
        {"rel-tol", "rel-tol=0.5", "", "--rel-tol 0.25", "0.5", "0.25"},
        {"abs-tol", "abs-tol=0.125", "", "--abs-tol 0.375", "0.125", "0.375"},
        {"scale.plan-budget", "plan-budget=7", "scale", "--plan-budget 2", "7", "2"},
        {"scale.selector-cap", "selector-cap=5", "scale", "--selector-cap 6", "5", "6"},
        {"scale.sampled-selectors", "sampled-selectors=9", "scale", "--sampled-selectors 4", "9", "4"},
        {"scale.report", "report=\"cfg.json\"", "scale", "--report cli.json", "cfg.json", "cli.json"},
    };
    testing_support::TempDir dir;
    auto base = cli("scale --records a --out b --dump-config", dir);
    REQUIRE(base.code == 0);
    auto defaults = parse_dump(base.out);
    for (const auto& f : flags) {
        CAPTURE(f.dump_key);
        REQUIRE(defaults.contains(f.dump_key));
        CHECK(defaults[f.dump_key] != f.config_value);
        fs::path cfg = dir / "run.ini";
        write_text_file(cfg, (f.section.empty() ? "" : "[" + f.section + "]\n") + f.config_line + "\n");
        std::string c = "--config " + quote(cfg.string());
        bool global = f.section.empty();

        auto from_file = cli(c + " scale --records a --out b --dump-config", dir);
        REQUIRE(from_file.code == 0);
        CHECK(parse_dump(from_file.out)[f.dump_key] == f.config_value);

        std::string args = global ? c + " " + f.cli + " scale --records a --out b --dump-config"
                                  : c + " scale --records a --out b " + f.cli + " --dump-config";
        auto from_flag = cli(args, dir);
        REQUIRE(from_flag.code == 0);
        auto resolved = parse_dump(from_flag.out);
        CHECK(resolved[f.dump_key] == f.cli_value);
        for (const auto& [k, v] : defaults) {
            if (k != f.dump_key && k != "scale.records" && k != "scale.out") CHECK(resolved[k] == v);
        }
    }
}

TEST_CASE("manifests list every file a run writes") {
    testing_support::TempDir in;
    auto records = pens_records(3);
    write_records(in / "records.jsonl", records);
    write_text_file(in / "gsm8k.jsonl", "{\"question\": \"Tom has 3 apples.\", \"answer\": \"ok\\n#### 3\"}\n");

    {
        testing_support::TempDir out;
        auto r = cli("ingest --format gsm8k --in " + quote((in / "gsm8k.jsonl").string()) + " --out " +
                         quote((out / "corpus.jsonl").string()) + " --rejects " + quote((out / "rejects.jsonl").string()),
                     out);
        fs::remove(out / "cli.out");
        fs::remove(out / "cli.err");
        REQUIRE(r.code == 0);
        check_manifest_covers(out.path(), out / "corpus.jsonl.manifest.json");
    }
    {
        testing_support::TempDir out;
        auto r = cli(runner_flags() + " --seed 4 scale --records " + quote((in / "records.jsonl").string()) + " --out " +
                         quote((out / "aug.jsonl").string()) + " --report " + quote((out / "scale.json").string()),
                     in);
        REQUIRE(r.code == 0);
        check_manifest_covers(out.path(), out / "aug.jsonl.manifest.json");
        auto m = Json::parse(read_text_file(out / "aug.jsonl.manifest.json"));
        CHECK(m["inputs"].size() == 1);
        CHECK(m["seeds"].size() >= 1);
    }
    {
        testing_support::TempDir out;
        auto r = cli(runner_flags() + " perturb build --records " + quote((in / "records.jsonl").string()) + " --out " +
                         quote((out / "plus.jsonl").string()),
                     in);
        REQUIRE(r.code == 0);
        CHECK(fs::exists(out / "plus.jsonl.review.jsonl"));
        check_manifest_covers(out.path(), out / "plus.jsonl.manifest.json");
    }
    {
        testing_support::TempDir out;
        auto r = cli("emit --records " + quote((in / "records.jsonl").string()) + " --out " + quote((out / "sft.jsonl").string()) +
                         " --report " + quote((out / "report.txt").string()),
                     in);
        REQUIRE(r.code == 0);
        check_manifest_covers(out.path(), out / "sft.jsonl.manifest.json");
    }
}

TEST_CASE("verify-sweep reports exactly the corrupted record") {
    testing_support::TempDir dir;
    auto records = pens_records(4);
    write_records(dir / "clean.jsonl", records);
    auto clean = cli(runner_flags() + " verify-sweep --strict --in " + quote((dir / "clean.jsonl").string()) + " --report " +
                         quote((dir / "clean-report.json").string()),
                     dir);
    CHECK(clean.code == 0);
    auto cj = Json::parse(read_text_file(dir / "clean-report.json"));
    CHECK(cj["checked"] == 4);
    CHECK(cj["passed"] == 4);

    records[2].truth = normalize_answer("999", Source::Gsm8k);
    write_records(dir / "bad.jsonl", records);
    auto bad = cli(runner_flags() + " verify-sweep --strict --in " + quote((dir / "bad.jsonl").string()) + " --report " +
                       quote((dir / "bad-report.json").string()),
                   dir);
    CHECK(bad.code == 1);
    auto bj = Json::parse(read_text_file(dir / "bad-report.json"));
    REQUIRE(bj["failures"].size() == 1);
    CHECK(bj["failures"][0]["id"] == "gsm8k-2");
    CHECK(bj["passed"] == 3);

    write_text_file(dir / "empty.jsonl", "");
    auto empty = cli(runner_flags() + " verify-sweep --strict --in " + quote((dir / "empty.jsonl").string()) + " --report " +
                         quote((dir / "empty-report.json").string()),
                     dir);
    CHECK(empty.code == 0);
    auto ej = Json::parse(read_text_file(dir / "empty-report.json"));
    CHECK(ej["total"] == 0);
    CHECK(ej["failures"].empty());
}
