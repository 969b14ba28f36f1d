#include "mathforge/perturb.hpp"

#include "mathforge/error.hpp"
#include "mathforge/parallel.hpp"
#include "mathforge/rng.hpp"
#include "mathforge/scale.hpp"

#include <algorithm>
#include <set>

namespace mathforge {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string tuple_key(const std::map<std::string, Number>& assignment) {
    std::string key;
    for (const auto& [name, value] : assignment) key += name + "=" + value.to_string() + ";";
    return key;
}

struct GroupOutcome {
    std::optional<PerturbedGroup> group;
    std::string exclusion;
};

GroupOutcome build_group(const SynthesisRecord& record, const PerturbPlan& plan, Executor& executor,
                         const ExecutionLimits& limits) {
    GroupOutcome out;
    if (record.status != SynthesisStatus::Verified) {
        out.exclusion = std::string(synthesis_status_name(record.status));
        return out;
    }
    std::optional<TemplateJob> job;
    try {
        job = template_job(record);
    } catch (const Error& e) {
        out.exclusion = std::string(to_string(e.code()));
        return out;
    }
    if (!job) {
        out.exclusion = "NO_TEMPLATE";
        return out;
    }

    PerturbedGroup group;
    group.group_id = record.problem_id;
    group.source = record.source;
    group.template_digest = job->program.digest();
    group.variants.push_back(PerturbedVariant{record.question, record.truth, record.choices, {}});

    auto constraints = coerce_to_bindings(job->constraints, job->masked);
    std::set<std::string> all(job->program.parameters.begin(), job->program.parameters.end());
    std::set<std::string> seen;
    {
        std::map<std::string, Number> originals;
        for (const auto& b : job->masked.bindings) originals[b.name] = b.span.value;
        seen.insert(tuple_key(originals));
    }
    std::string last_failure = "SAMPLING_EXHAUSTED";
    for (std::size_t draw = 0; draw < plan.max_draws && group.variants.size() < plan.n_new + 1; ++draw) {
        Rng rng(derive_seed(plan.seed, record.problem_id, draw));
        std::map<std::string, Number> assignment;
        try {
            assignment = sample_assignment(constraints, rng, plan.max_attempts);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SamplingExhausted) throw;
            last_failure = "SAMPLING_EXHAUSTED";
            break;
        }
        if (!seen.insert(tuple_key(assignment)).second) continue;
        InstantiatedSample sample;
        try {
            sample = instantiate(job->program, job->masked, assignment, all, record.problem_id);
        } catch (const Error& e) {
            last_failure = "INSTANTIATE_FAILED";
            continue;
        }
        auto exec = executor.execute(sample.program, limits);
        if (exec.status == ExecStatus::SandboxFailure) throw Error(ErrorCode::SandboxFailure, exec.stderr_text);
        if (exec.status != ExecStatus::Ok) {
            last_failure = "EXEC_FAILED";
            continue;
        }
        auto check = check_augmented_value(*exec.value_line, job->program, record.truth);
        if (!check.answer) {
            last_failure = check.rejection;
            continue;
        }
        group.variants.push_back(PerturbedVariant{sample.question, *check.answer, std::nullopt, sample.provenance.assignment});
    }
    if (group.variants.size() < plan.n_new + 1) {
        out.exclusion = last_failure;
        return out;
    }
    out.group = std::move(group);
    return out;
}

} // namespace

std::string_view review_status_name(ReviewStatus status) {
    switch (status) {
    case ReviewStatus::Auto: return "AUTO";
    case ReviewStatus::HumanApproved: return "HUMAN_APPROVED";
    case ReviewStatus::HumanRejected: return "HUMAN_REJECTED";
    }
    return "AUTO";
}

std::optional<ReviewStatus> parse_review_status(std::string_view text) {
    std::string t = lower(text);
    if (t == "auto") return ReviewStatus::Auto;
    if (t == "human_approved" || t == "approve" || t == "approved") return ReviewStatus::HumanApproved;
    if (t == "human_rejected" || t == "reject" || t == "rejected") return ReviewStatus::HumanRejected;
    return std::nullopt;
}

std::size_t PlusSet::item_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.variants.size();
    return n;
}

PlusSet build_plus_set(const std::vector<SynthesisRecord>& records, const PerturbPlan& plan, Executor& executor,
                       std::size_t workers, const ExecutionLimits& limits) {
    std::vector<GroupOutcome> outcomes(records.size());
    parallel_for(records.size(), workers,
                 [&](std::size_t i) { outcomes[i] = build_group(records[i], plan, executor, limits); });
    PlusSet set;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!outcomes[i].group) {
            set.exclusions.push_back(PerturbExclusion{records[i].problem_id, outcomes[i].exclusion});
            continue;
        }
        auto& g = *outcomes[i].group;
        std::string note = std::to_string(g.variants.size()) + " variants; expected";
        for (std::size_t v = 0; v < g.variants.size(); ++v) note += (v ? " | " : " ") + g.variants[v].expected.render();
        set.worklist.push_back(ReviewItem{g.group_id, std::string(review_status_name(ReviewStatus::Auto)), note});
        set.groups.push_back(std::move(g));
    }
    return set;
}

Json ConsistencyReport::to_json() const {
    Json j;
    j["total_groups"] = total_groups;
    j["x"] = x;
    j["y"] = y;
    j["ratio"] = ratio ? Json(*ratio) : Json(nullptr);
    j["ratio_display"] = x > 0 ? Json(format_ratio(x, y)) : Json(nullptr);
    j["groups"] = Json::array();
    for (const auto& r : rows) {
        j["groups"].push_back({{"group_id", r.group_id}, {"variants", r.variants}, {"correct", r.correct}});
    }
    return j;
}

ConsistencyReport score_consistency(const std::vector<PerturbedGroup>& groups, const AnswerMap& answers,
                                    const ComparisonPolicy& policy) {
    ConsistencyReport report;
    for (const auto& g : groups) {
        GroupScore row{g.group_id, g.variants.size(), 0};
        for (std::size_t v = 0; v < g.variants.size(); ++v) {
            auto it = answers.find({g.group_id, v});
            if (it == answers.end()) continue;
            if (compare_answers(it->second, g.variants[v].expected, policy).equal) ++row.correct;
        }
        ++report.total_groups;
        if (row.correct > 0) ++report.x;
        if (row.variants > 0 && row.correct == row.variants) ++report.y;
        report.rows.push_back(std::move(row));
    }
    if (report.x > 0) report.ratio = 100.0 * static_cast<double>(report.y) / static_cast<double>(report.x);
    return report;
}

std::string format_ratio(std::uint64_t x, std::uint64_t y) {
    if (x == 0) throw Error(ErrorCode::ZeroQuestions, "ratio with x = 0");
    std::uint64_t tenths = (2000 * y + x) / (2 * x);
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

std::vector<PerturbedGroup> apply_review(std::vector<PerturbedGroup> groups, const std::vector<ReviewItem>& decisions) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < groups.size(); ++i) index[groups[i].group_id] = i;
    for (const auto& d : decisions) {
        auto it = index.find(d.group_id);
        if (it == index.end()) throw Error(ErrorCode::UnknownGroupId, d.group_id);
        auto status = parse_review_status(d.decision);
        if (!status) throw Error(ErrorCode::SchemaMismatch, "unknown review decision " + d.decision);
        groups[it->second].review = *status;
        groups[it->second].review_note = d.note;
    }
    std::erase_if(groups, [](const PerturbedGroup& g) { return g.review == ReviewStatus::HumanRejected; });
    return groups;
}

void write_plus_set(const std::filesystem::path& path, const std::vector<PerturbedGroup>& groups) {
    std::vector<Json> lines;
    for (const auto& g : groups) {
        for (std::size_t v = 0; v < g.variants.size(); ++v) {
            const auto& var = g.variants[v];
            Json j;
            j["group_id"] = g.group_id;
            j["variant_index"] = v;
            j["question"] = var.question;
            j["expected_kind"] = answer_kind_name(var.expected.kind);
            j["expected_value"] = var.expected.render();
            if (var.expected.choice_text) j["choice_text"] = *var.expected.choice_text;
            if (var.choices) j["choices"] = *var.choices;
            j["source"] = source_name(g.source);
            j["template_digest"] = g.template_digest;
            j["assignment"] = var.assignment;
            j["review"] = review_status_name(g.review);
            if (!g.review_note.empty()) j["review_note"] = g.review_note;
            lines.push_back(std::move(j));
        }
    }
    write_jsonl(path, lines);
}

std::vector<PerturbedGroup> read_plus_set(const std::filesystem::path& path) {
    std::vector<PerturbedGroup> groups;
    std::map<std::string, std::size_t> index;
    try {
        for (const auto& j : read_jsonl(path)) {
            std::string id = j.at("group_id").get<std::string>();
            auto v = j.at("variant_index").get<std::size_t>();
            auto [it, fresh] = index.emplace(id, groups.size());
            if (fresh) {
                PerturbedGroup g;
                g.group_id = id;
                if (j.contains("source")) {
                    auto s = parse_source(j["source"].get<std::string>());
                    if (!s) throw Error(ErrorCode::SchemaMismatch, "unknown source in plus-set");
                    g.source = *s;
                }
                g.template_digest = j.value("template_digest", "");
                if (j.contains("review")) {
                    auto r = parse_review_status(j["review"].get<std::string>());
                    if (!r) throw Error(ErrorCode::SchemaMismatch, "unknown review status in plus-set");
                    g.review = *r;
                }
                g.review_note = j.value("review_note", "");
                groups.push_back(std::move(g));
            }
            auto& g = groups[it->second];
            if (v != g.variants.size()) throw Error(ErrorCode::SchemaMismatch, "variant indices of " + id + " out of order");
            PerturbedVariant var;
            var.question = j.at("question").get<std::string>();
            std::string value = j.at("expected_value").get<std::string>();
            var.expected = answer_from_parts(j.at("expected_kind").get<std::string>(), value, value);
            if (j.contains("choice_text")) var.expected.choice_text = j["choice_text"].get<std::string>();
            if (j.contains("choices")) var.choices = j["choices"].get<std::vector<std::string>>();
            if (j.contains("assignment")) var.assignment = j["assignment"].get<std::map<std::string, std::string>>();
            g.variants.push_back(std::move(var));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("plus-set record: ") + e.what());
    }
    return groups;
}

AnswerMap read_answers(const std::filesystem::path& path) {
    AnswerMap out;
    try {
        for (const auto& j : read_jsonl(path)) {
            out[{j.at("group_id").get<std::string>(), j.at("variant_index").get<std::size_t>()}] =
                j.at("answer_text").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("answer record: ") + e.what());
    }
    return out;
}

void write_review(const std::filesystem::path& path, const std::vector<ReviewItem>& items) {
    std::vector<Json> lines;
    for (const auto& i : items) lines.push_back({{"group_id", i.group_id}, {"decision", i.decision}, {"note", i.note}});
    write_jsonl(path, lines);
}

std::vector<ReviewItem> read_review(const std::filesystem::path& path) {
    std::vector<ReviewItem> out;
    try {
        for (const auto& j : read_jsonl(path)) {
            out.push_back(ReviewItem{j.at("group_id").get<std::string>(), j.at("decision").get<std::string>(),
                                     j.value("note", "")});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("review record: ") + e.what());
    }
    return out;
}

} // namespace mathforge
