#include "mathforge/emit.hpp"

#include "mathforge/digest.hpp"
#include "mathforge/error.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

namespace mathforge {

namespace {

std::size_t source_rank(Source s) {
    return static_cast<std::size_t>(std::find(kAllSources.begin(), kAllSources.end(), s) - kAllSources.begin());
}

std::string instruction_for(const std::string& preamble, const std::string& question) {
    const std::string marker = "{{question}}";
    if (auto pos = preamble.find(marker); pos != std::string::npos) {
        std::string out = preamble;
        out.replace(pos, marker.size(), question);
        return out;
    }
    if (preamble.empty()) return question;
    return preamble + "\n\n" + question;
}

const std::vector<std::string> kStatusKeys = {"VERIFIED", "PARSE_FAILED", "EXEC_FAILED", "WRONG_ANSWER", "BUDGET_EXHAUSTED"};

} // namespace

std::vector<SftInput> sft_inputs_from_records(const std::vector<SynthesisRecord>& records) {
    std::vector<SftInput> out;
    for (const auto& r : records) {
        if (r.status != SynthesisStatus::Verified || !r.final_template || !r.masked) continue;
        std::map<std::string, Number> originals;
        for (const auto& b : r.masked->bindings) originals[b.name] = b.span.value;
        const auto& params = r.final_template->parameters;
        auto sample = instantiate(*r.final_template, *r.masked, originals, std::set<std::string>(params.begin(), params.end()),
                                  r.problem_id);
        sample.question = r.question;
        sample.expected_answer = r.truth;
        out.push_back(SftInput{r.source, "orig", std::move(sample)});
    }
    return out;
}

std::vector<SftInput> sft_inputs_from_augmented(const std::vector<AugmentedSample>& samples) {
    std::vector<SftInput> out;
    for (const auto& s : samples) {
        std::string id = augmented_to_json(s).at("id").get<std::string>();
        out.push_back(SftInput{s.source, id, s.sample});
    }
    return out;
}

std::string default_instruction_preamble() {
    return "Write a Python program that solves the following math problem. Define a function `solution()` that "
           "returns the answer and print its result.";
}

std::string assignment_digest(const std::map<std::string, std::string>& assignment) {
    std::string canonical;
    for (const auto& [k, v] : assignment) canonical += k + "=" + v + "\n";
    return sha256_hex(canonical);
}

std::vector<SftRecord> emit_sft(std::vector<SftInput> inputs, const SftOptions& options) {
    std::erase_if(inputs, [&](const SftInput& in) { return !in.sample.full && !options.include_symbolic; });
    if (inputs.empty()) throw Error(ErrorCode::EmptyInput, "no samples to emit");
    std::stable_sort(inputs.begin(), inputs.end(), [](const SftInput& a, const SftInput& b) {
        return std::forward_as_tuple(source_rank(a.source), a.sample.provenance.problem_id, a.variant) <
               std::forward_as_tuple(source_rank(b.source), b.sample.provenance.problem_id, b.variant);
    });
    std::vector<SftRecord> out;
    out.reserve(inputs.size());
    for (const auto& in : inputs) {
        SftRecord r;
        r.instruction = instruction_for(options.preamble, in.sample.question);
        r.output = options.strip_docstrings ? strip_docstring(in.sample.program) : in.sample.program;
        const auto& prov = in.sample.provenance;
        r.provenance = {{"problem_id", prov.problem_id},
                        {"source", source_name(in.source)},
                        {"variant", in.variant},
                        {"template_digest", prov.template_digest},
                        {"selector", prov.selector},
                        {"assignment_digest", assignment_digest(prov.assignment)},
                        {"full", in.sample.full}};
        if (in.sample.expected_answer) r.provenance["expected_answer"] = answer_to_json(*in.sample.expected_answer);
        out.push_back(std::move(r));
    }
    return out;
}

void write_sft(const std::filesystem::path& path, const std::vector<SftRecord>& records) {
    std::vector<Json> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back({{"instruction", r.instruction}, {"output", r.output}, {"provenance", r.provenance}});
    write_jsonl(path, lines);
}

std::vector<SftRecord> read_sft(const std::filesystem::path& path) {
    std::vector<SftRecord> out;
    try {
        for (const auto& j : read_jsonl(path)) {
            out.push_back(SftRecord{j.at("instruction").get<std::string>(), j.at("output").get<std::string>(), j.at("provenance")});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("sft record: ") + e.what());
    }
    return out;
}

std::string success_rate(std::uint64_t samples, std::uint64_t questions) {
    if (questions == 0) throw Error(ErrorCode::ZeroQuestions, "success rate over zero questions");
    std::uint64_t hundredths = (20000 * samples + questions) / (2 * questions);
    std::string frac = std::to_string(hundredths % 100);
    if (frac.size() < 2) frac.insert(0, "0");
    return std::to_string(hundredths / 100) + "." + frac;
}

std::string StatsTable::render_text() const {
    std::vector<std::vector<std::string>> cols;
    cols.push_back({"", "Samples", "No. of Question", "Success Rate"});
    for (const auto& r : rows) {
        cols.push_back({std::string(source_name(r.source)), std::to_string(r.samples), std::to_string(r.questions), r.rate + "%"});
    }
    cols.push_back({"Total", std::to_string(total_samples), "-", "-"});
    std::ostringstream out;
    for (std::size_t line = 0; line < 4; ++line) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            std::size_t width = 0;
            for (const auto& cell : cols[c]) width = std::max(width, cell.size());
            const std::string& cell = cols[c][line];
            if (c == 0) {
                out << cell << std::string(width - cell.size(), ' ');
            } else {
                out << "  " << std::string(width - cell.size(), ' ') << cell;
            }
        }
        out << '\n';
    }
    return out.str();
}

Json StatsTable::to_json() const {
    Json j;
    j["sources"] = Json::array();
    for (const auto& r : rows) {
        j["sources"].push_back({{"source", source_name(r.source)},
                                {"samples", r.samples},
                                {"questions", r.questions},
                                {"success_rate", r.rate}});
    }
    j["total_samples"] = total_samples;
    j["total_questions"] = total_questions;
    return j;
}

StatsTable compute_stats(const std::vector<SynthesisRecord>& records, const std::vector<SourceProblem>& corpus) {
    std::array<std::uint64_t, 7> questions{};
    std::array<std::uint64_t, 7> samples{};
    std::array<bool, 7> seen{};
    std::set<std::string> ids;
    for (const auto& p : corpus) {
        ++questions[source_rank(p.source)];
        seen[source_rank(p.source)] = true;
        ids.insert(p.id);
    }
    for (const auto& r : records) {
        if (!ids.contains(r.problem_id)) throw Error(ErrorCode::SchemaMismatch, "record " + r.problem_id + " is not in the corpus");
        seen[source_rank(r.source)] = true;
        if (r.status == SynthesisStatus::Verified) ++samples[source_rank(r.source)];
    }
    StatsTable table;
    for (std::size_t i = 0; i < kAllSources.size(); ++i) {
        if (!seen[i]) continue;
        if (questions[i] == 0) throw Error(ErrorCode::ZeroQuestions, std::string(source_name(kAllSources[i])));
        table.rows.push_back(StatsRow{kAllSources[i], samples[i], questions[i], success_rate(samples[i], questions[i])});
        table.total_samples += samples[i];
        table.total_questions += questions[i];
    }
    return table;
}

void RunReport::add(const std::string& key, std::uint64_t n) { counts[key] += n; }

void RunReport::merge(const RunReport& other) {
    for (const auto& [k, v] : other.counts) counts[k] += v;
}

std::string RunReport::render_text() const {
    std::size_t width = 0;
    for (const auto& [k, v] : counts) width = std::max(width, k.size());
    std::ostringstream out;
    for (const auto& [k, v] : counts) out << k << std::string(width - k.size() + 2, ' ') << v << '\n';
    return out.str();
}

Json RunReport::to_json() const {
    Json j = Json::object();
    for (const auto& [k, v] : counts) j[k] = v;
    return j;
}

RunReport emit_report(const std::vector<SynthesisRecord>& records, const AugmentationReport* augmentation) {
    RunReport report;
    report.add("synthesis.problems", 0);
    report.add("llm.requests", 0);
    for (const auto& s : kStatusKeys) report.add("synthesis.status." + s, 0);
    for (const auto& r : records) {
        report.add("synthesis.problems");
        report.add("synthesis.status." + std::string(synthesis_status_name(r.status)));
        report.add("llm.requests", r.rounds.size());
        if (r.status == SynthesisStatus::Verified && r.rounds.size() > 1) report.add("synthesis.fixed_by_bugfix");
        if (!r.failure.empty() && r.status != SynthesisStatus::Verified) report.add("synthesis.failure." + r.failure);
        if (!r.crosscheck_warnings.empty()) report.add("synthesis.crosscheck_warnings", r.crosscheck_warnings.size());
    }
    if (augmentation) {
        for (const auto& [k, v] : augmentation->counts) report.add("scale." + k, v);
    }
    return report;
}

} // namespace mathforge
