#include "mathforge/sweep.hpp"

#include "mathforge/error.hpp"
#include "mathforge/parallel.hpp"

#include <set>

namespace mathforge {

std::vector<SweepItem> load_sweep_items(const std::filesystem::path& path) {
    std::vector<SweepItem> items;
    std::size_t line = 0;
    try {
        for (const auto& j : read_jsonl(path)) {
            ++line;
            if (j.contains("rounds")) {
                auto rec = record_from_json(j);
                if (rec.status != SynthesisStatus::Verified || !rec.final_template || !rec.masked) continue;
                std::map<std::string, Number> originals;
                for (const auto& b : rec.masked->bindings) originals[b.name] = b.span.value;
                const auto& params = rec.final_template->parameters;
                auto sample = instantiate(*rec.final_template, *rec.masked, originals,
                                          std::set<std::string>(params.begin(), params.end()), rec.problem_id);
                sample.expected_answer = rec.truth;
                items.push_back(SweepItem{rec.problem_id, std::move(sample)});
            } else if (j.contains("instruction") && j.contains("output")) {
                const Json& prov = j.at("provenance");
                SweepItem item;
                item.id = prov.at("problem_id").get<std::string>() + "/" + prov.value("variant", std::to_string(line));
                item.sample.question = j.at("instruction").get<std::string>();
                item.sample.program = j.at("output").get<std::string>();
                item.sample.full = prov.value("full", true);
                item.sample.provenance.problem_id = prov.at("problem_id").get<std::string>();
                item.sample.provenance.template_digest = prov.value("template_digest", "");
                if (prov.contains("expected_answer")) item.sample.expected_answer = answer_from_json(prov["expected_answer"]);
                items.push_back(std::move(item));
            } else {
                auto aug = augmented_from_json(j);
                std::string id = j.contains("id") ? j["id"].get<std::string>() : "line-" + std::to_string(line);
                items.push_back(SweepItem{id, std::move(aug.sample)});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, "sweep input line " + std::to_string(line) + ": " + e.what());
    }
    return items;
}

Json SweepReport::to_json() const {
    Json j;
    j["total"] = total;
    j["checked"] = checked;
    j["passed"] = passed;
    j["constraint_checked"] = constraint_checked;
    j["pass_rate"] = checked ? Json(100.0 * static_cast<double>(passed) / static_cast<double>(checked)) : Json(nullptr);
    j["failures"] = Json::array();
    for (const auto& f : failures) j["failures"].push_back({{"id", f.id}, {"reason", f.reason}, {"detail", f.detail}});
    return j;
}

SweepReport verify_sweep(const std::vector<SweepItem>& items, Executor& executor, const ComparisonPolicy& policy,
                         const ExecutionLimits& limits, std::size_t workers) {
    std::vector<std::optional<SweepFailure>> results(items.size());
    std::vector<char> checked(items.size(), 0);
    parallel_for(items.size(), workers, [&](std::size_t i) {
        const auto& item = items[i];
        if (!item.sample.full) return;
        checked[i] = 1;
        if (!item.sample.expected_answer) {
            results[i] = SweepFailure{item.id, "NO_EXPECTED_ANSWER", ""};
            return;
        }
        auto outcome = verify_sample(item.sample, executor, limits, policy);
        if (outcome.execution.status == ExecStatus::SandboxFailure) {
            throw Error(ErrorCode::SandboxFailure, outcome.execution.stderr_text);
        }
        if (!outcome.pass) {
            std::string detail = outcome.execution.value_line ? "printed " + *outcome.execution.value_line
                                                              : outcome.execution.stderr_text;
            results[i] = SweepFailure{item.id, outcome.reason, detail};
        }
    });
    SweepReport report;
    report.total = items.size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        report.checked += checked[i];
        if (results[i]) {
            report.failures.push_back(*results[i]);
        } else if (checked[i]) {
            ++report.passed;
        }
    }
    return report;
}

void check_constraint_compliance(const std::vector<SweepItem>& items, const std::vector<SynthesisRecord>& records,
                                 SweepReport& report) {
    std::map<std::string, TemplateJob> jobs;
    for (const auto& r : records) {
        if (auto job = template_job(r)) jobs.emplace(r.problem_id, std::move(*job));
    }
    for (const auto& item : items) {
        const auto& prov = item.sample.provenance;
        if (prov.assignment.empty()) continue;
        auto it = jobs.find(prov.problem_id);
        if (it == jobs.end() || it->second.program.digest() != prov.template_digest) {
            report.failures.push_back(SweepFailure{item.id, "UNKNOWN_TEMPLATE", prov.problem_id});
            continue;
        }
        ++report.constraint_checked;
        auto constraints = coerce_to_bindings(it->second.constraints, it->second.masked);
        std::map<std::string, Number> values;
        bool parsed = true;
        for (const auto& [name, text] : prov.assignment) {
            auto n = Number::parse(text);
            if (!n) {
                parsed = false;
                break;
            }
            values.emplace(name, *n);
        }
        std::vector<VariableConstraint> selected;
        for (const auto& c : constraints) {
            if (values.contains(c.name)) selected.push_back(c);
        }
        // predicates that mention unselected variables cannot be judged on a partial assignment
        bool ok = parsed;
        if (ok) {
            for (const auto& c : selected) {
                if (!within_domain(c, values.at(c.name))) ok = false;
            }
        }
        if (ok && values.size() == constraints.size()) ok = satisfies(constraints, values);
        if (!ok) report.failures.push_back(SweepFailure{item.id, "CONSTRAINT_VIOLATION", prov.problem_id});
    }
}

} // namespace mathforge
