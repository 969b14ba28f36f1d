#include "mathforge/scale.hpp"

#include "mathforge/digest.hpp"
#include "mathforge/error.hpp"
#include "mathforge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mathforge {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

int decimals(const Number& n) {
    if (n.is_exact() && !n.is_terminating_decimal()) return 2;
    std::string text = n.to_string();
    auto dot = text.find('.');
    if (dot == std::string::npos || text.find_first_of("eE") != std::string::npos) return 0;
    return std::min<int>(static_cast<int>(text.size() - dot - 1), 6);
}

Number pow10_inverse(int d) {
    std::int64_t den = 1;
    for (int i = 0; i < d; ++i) den *= 10;
    return Number::rational(1, den);
}

std::int64_t floor_int(const Number& n) {
    if (!n.is_exact()) return static_cast<std::int64_t>(std::floor(n.to_double()));
    std::int64_t q = n.numerator() / n.denominator();
    if (n.numerator() % n.denominator() != 0 && n.numerator() < 0) --q;
    return q;
}

std::int64_t ceil_int(const Number& n) {
    std::int64_t f = floor_int(n);
    return Number::integer(f) == n ? f : f + 1;
}

bool has_integral(const VariableConstraint& c) {
    return std::any_of(c.predicates.begin(), c.predicates.end(), [&](const Predicate& p) {
        auto* ip = std::get_if<IntegralPredicate>(&p);
        return ip && ip->variable == c.name;
    });
}

struct Grid {
    Number lo;
    Number step;
    std::uint64_t count = 0;
};

Grid grid_for(const VariableConstraint& c) {
    Grid g{c.min, default_step(c), 0};
    if (c.type == ValueType::Float && has_integral(c)) {
        Number lo = Number::integer(ceil_int(c.min));
        if ((Number::integer(1) / g.step).is_integer() && ((lo - c.min) / g.step).is_integer()) {
            g.lo = lo;
            g.step = Number::integer(1);
        }
    }
    if (g.lo > c.max) return g;
    Number span = (c.max - g.lo) / g.step;
    double approx = span.to_double();
    if (approx > 4e18) approx = 4e18;
    std::int64_t steps = span.is_exact() ? floor_int(span) : static_cast<std::int64_t>(std::floor(approx + 1e-9));
    g.count = static_cast<std::uint64_t>(std::max<std::int64_t>(steps, 0)) + 1;
    return g;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<SelectorMask> selectors_for(std::size_t k, const AugmentationPlan& plan, Rng& rng) {
    if (!plan.include_symbolic) return {SelectorMask::full(k)};
    if (k <= plan.selector_cap) return enumerate_selectors(k, plan.selector_cap);
    std::set<SelectorMask> picked;
    SelectorMask full = SelectorMask::full(k);
    std::vector<SelectorMask> out;
    std::size_t guard = 0;
    while (out.size() < plan.sampled_selectors && guard++ < plan.sampled_selectors * 20) {
        SelectorMask m(rng.below(full.bits()) + 1);
        if (m == full || !picked.insert(m).second) continue;
        out.push_back(m);
    }
    std::sort(out.begin(), out.end());
    out.push_back(full);
    return out;
}

} // namespace

Number default_step(const VariableConstraint& c) {
    if (c.step) return *c.step;
    if (c.type == ValueType::Int) return Number::integer(1);
    int d = std::max(decimals(c.min), decimals(c.max));
    if (c.original) d = std::max(d, decimals(*c.original));
    return pow10_inverse(d);
}

std::vector<VariableConstraint> coerce_to_bindings(std::vector<VariableConstraint> constraints,
                                                   const MaskedQuestion& masked) {
    for (auto& c : constraints) {
        const Binding* b = masked.find(c.name);
        if (!b || b->span.kind != NumberKind::Int || c.type == ValueType::Int) continue;
        c.type = ValueType::Int;
        c.min = Number::integer(ceil_int(c.min));
        c.max = Number::integer(floor_int(c.max));
        if (c.step && !c.step->is_integer()) c.step.reset();
    }
    return constraints;
}

std::map<std::string, Number> sample_assignment(const std::vector<VariableConstraint>& constraints, Rng& rng,
                                                std::size_t max_attempts) {
    std::vector<Grid> grids;
    grids.reserve(constraints.size());
    for (const auto& c : constraints) {
        grids.push_back(grid_for(c));
        if (grids.back().count == 0) throw Error(ErrorCode::SamplingExhausted, c.name + " has an empty grid");
    }
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        std::map<std::string, Number> values;
        for (std::size_t i = 0; i < constraints.size(); ++i) {
            const Grid& g = grids[i];
            values[constraints[i].name] = g.lo + g.step * Number::integer(static_cast<std::int64_t>(rng.below(g.count)));
        }
        if (satisfies(constraints, values)) return values;
    }
    std::vector<std::string> names;
    for (const auto& c : constraints) names.push_back(c.name);
    throw Error(ErrorCode::SamplingExhausted,
                "no assignment for " + join(names, ", ") + " after " + std::to_string(max_attempts) + " draws");
}

std::size_t AugmentationReport::get(const std::string& key) const {
    auto it = counts.find(key);
    return it == counts.end() ? 0 : it->second;
}

void AugmentationReport::merge(const AugmentationReport& other) {
    for (const auto& [k, v] : other.counts) counts[k] += v;
}

Json AugmentationReport::to_json() const {
    Json j = Json::object();
    for (const auto& [k, v] : counts) j[k] = v;
    return j;
}

std::string dedup_key(const InstantiatedSample& sample) {
    std::string material = normalize_whitespace(sample.question);
    material.push_back('\x1f');
    material += sample.program;
    return sha256_hex(material);
}

ValueCheck check_augmented_value(const std::string& value_line, const UnifiedProgram& program,
                                 const GroundTruthAnswer& seed_truth) {
    std::string v = trim(value_line);
    std::string lower = v;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "inf" || lower == "-inf" || lower == "nan" || lower == "infinity" || lower == "-infinity") {
        return {std::nullopt, "FILTERED_NONFINITE"};
    }
    auto n = Number::parse(v);
    if (!n) {
        if (seed_truth.kind != AnswerKind::Text) return {std::nullopt, "FILTERED_NONNUMERIC"};
        GroundTruthAnswer a;
        a.kind = AnswerKind::Text;
        a.text_value = v;
        a.raw = v;
        return {a, {}};
    }
    if (program.returns_integer && !n->is_integer()) return {std::nullopt, "FILTERED_NONINTEGER"};
    if (program.returns_nonnegative && n->is_negative()) return {std::nullopt, "FILTERED_NEGATIVE"};
    GroundTruthAnswer a;
    a.kind = AnswerKind::Numeric;
    a.numeric_value = *n;
    a.raw = v;
    return {a, {}};
}

std::vector<AugmentedSample> augment(const TemplateJob& job, const AugmentationPlan& plan, Executor& executor,
                                     AugmentationReport& report, const ExecutionLimits& limits) {
    std::vector<AugmentedSample> out;
    report.add("TEMPLATES");
    const auto& params = job.program.parameters;
    auto constraints = coerce_to_bindings(job.constraints, job.masked);
    std::set<std::string> all_params(params.begin(), params.end());

    std::set<std::string> seen;
    {
        std::map<std::string, Number> originals;
        for (const auto& b : job.masked.bindings) originals[b.name] = b.span.value;
        try {
            seen.insert(dedup_key(instantiate(job.program, job.masked, originals, all_params, job.problem_id)));
        } catch (const Error&) {
            // the seed could not be rebuilt; nothing to pre-seed
        }
    }
    const std::string digest = job.program.digest();
    for (std::size_t draw = 0; draw < plan.budget; ++draw) {
        report.add("DRAWS");
        Rng rng(derive_seed(plan.seed, digest, draw));
        std::map<std::string, Number> assignment;
        try {
            assignment = sample_assignment(constraints, rng, plan.max_attempts);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SamplingExhausted) throw;
            report.add("SAMPLING_EXHAUSTED");
            continue;
        }
        for (SelectorMask sel : selectors_for(params.size(), plan, rng)) {
            auto names = sel.names(params);
            InstantiatedSample sample;
            try {
                sample = instantiate(job.program, job.masked, assignment, names, job.problem_id);
            } catch (const Error&) {
                report.add("INSTANTIATE_FAILED");
                continue;
            }
            std::string key = dedup_key(sample);
            if (plan.dedup && seen.contains(key)) {
                report.add("DUPLICATE");
                continue;
            }
            if (sample.full) {
                auto exec = executor.execute(sample.program, limits);
                if (exec.status == ExecStatus::SandboxFailure) throw Error(ErrorCode::SandboxFailure, exec.stderr_text);
                if (exec.status != ExecStatus::Ok) {
                    report.add("EXEC_FAILED");
                    continue;
                }
                auto check = check_augmented_value(*exec.value_line, job.program, job.truth);
                if (!check.answer) {
                    report.add(check.rejection);
                    continue;
                }
                sample.expected_answer = check.answer;
            } else {
                auto exec = executor.syntax_check(sample.program, limits);
                if (exec.status == ExecStatus::SandboxFailure) throw Error(ErrorCode::SandboxFailure, exec.stderr_text);
                if (exec.status != ExecStatus::Ok) {
                    report.add("SYNTAX_FAILED");
                    continue;
                }
            }
            seen.insert(key);
            report.add(sample.full ? "EMITTED_FULL" : "EMITTED_SYMBOLIC");
            out.push_back(AugmentedSample{std::move(sample), job.source, plan.seed, draw});
        }
    }
    return out;
}

std::vector<AugmentedSample> augment_all(const std::vector<TemplateJob>& jobs, const AugmentationPlan& plan,
                                         Executor& executor, AugmentationReport& report, std::size_t workers,
                                         const ExecutionLimits& limits) {
    std::vector<std::vector<AugmentedSample>> per_job(jobs.size());
    std::vector<AugmentationReport> reports(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t i) { per_job[i] = augment(jobs[i], plan, executor, reports[i], limits); });
    std::vector<AugmentedSample> out;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        report.merge(reports[i]);
        for (auto& s : per_job[i]) out.push_back(std::move(s));
    }
    return out;
}

Json sample_to_json(const InstantiatedSample& sample) {
    Json j;
    j["question"] = sample.question;
    j["program"] = sample.program;
    j["full"] = sample.full;
    j["expected_answer"] = sample.expected_answer ? answer_to_json(*sample.expected_answer) : Json(nullptr);
    Json prov;
    prov["problem_id"] = sample.provenance.problem_id;
    prov["template_digest"] = sample.provenance.template_digest;
    prov["selector"] = sample.provenance.selector;
    prov["assignment"] = Json::object();
    for (const auto& [k, v] : sample.provenance.assignment) prov["assignment"][k] = v;
    j["provenance"] = std::move(prov);
    return j;
}

InstantiatedSample sample_from_json(const Json& j) {
    try {
        InstantiatedSample s;
        s.question = j.at("question").get<std::string>();
        s.program = j.at("program").get<std::string>();
        s.full = j.at("full").get<bool>();
        if (j.contains("expected_answer") && !j["expected_answer"].is_null()) {
            s.expected_answer = answer_from_json(j["expected_answer"]);
        }
        const Json& prov = j.at("provenance");
        s.provenance.problem_id = prov.at("problem_id").get<std::string>();
        s.provenance.template_digest = prov.at("template_digest").get<std::string>();
        s.provenance.selector = prov.at("selector").get<std::vector<std::string>>();
        for (const auto& [k, v] : prov.at("assignment").items()) s.provenance.assignment[k] = v.get<std::string>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("sample record: ") + e.what());
    }
}

Json augmented_to_json(const AugmentedSample& a) {
    Json j;
    j["id"] = a.sample.provenance.problem_id + "/aug" + std::to_string(a.draw) + "/" + join(a.sample.provenance.selector, "+");
    j["source"] = source_name(a.source);
    Json body = sample_to_json(a.sample);
    for (auto& [k, v] : body.items()) j[k] = v;
    j["provenance"]["seed"] = a.seed;
    j["provenance"]["draw"] = a.draw;
    return j;
}

AugmentedSample augmented_from_json(const Json& j) {
    try {
        AugmentedSample a;
        a.sample = sample_from_json(j);
        auto source = parse_source(j.at("source").get<std::string>());
        if (!source) throw Error(ErrorCode::SchemaMismatch, "unknown source in augmented record");
        a.source = *source;
        a.seed = j.at("provenance").at("seed").get<std::uint64_t>();
        a.draw = j.at("provenance").at("draw").get<std::size_t>();
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("augmented record: ") + e.what());
    }
}

} // namespace mathforge
