#include "mathforge/constraints.hpp"

#include "mathforge/error.hpp"
#include "mathforge/masking.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

namespace mathforge {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::optional<Number> parse_bound(std::string_view text) {
    auto parsed = parse_number_literal(trim(text));
    if (parsed && parsed->second != NumberKind::Percent) return parsed->first;
    // negative bounds and exponents are allowed here
    return Number::parse(trim(text));
}

std::optional<Operand> resolve(const std::string& token, const std::vector<std::string>& variables) {
    if (std::find(variables.begin(), variables.end(), token) != variables.end()) return Operand{token};
    if (auto n = Number::parse(token)) return Operand{*n};
    return std::nullopt;
}

std::optional<CompareOp> parse_op(std::string_view op) {
    if (op == "<") return CompareOp::Less;
    if (op == "<=") return CompareOp::LessEqual;
    if (op == ">") return CompareOp::Greater;
    if (op == ">=") return CompareOp::GreaterEqual;
    if (op == "==") return CompareOp::Equal;
    if (op == "!=") return CompareOp::NotEqual;
    return std::nullopt;
}

std::string_view op_text(CompareOp op) {
    switch (op) {
    case CompareOp::Less: return "<";
    case CompareOp::LessEqual: return "<=";
    case CompareOp::Greater: return ">";
    case CompareOp::GreaterEqual: return ">=";
    case CompareOp::Equal: return "==";
    case CompareOp::NotEqual: return "!=";
    }
    return "?";
}

std::string operand_text(const Operand& o) {
    return std::holds_alternative<std::string>(o) ? std::get<std::string>(o) : std::get<Number>(o).to_string();
}

std::optional<Number> value_of(const Operand& o, const std::map<std::string, Number>& values) {
    if (std::holds_alternative<Number>(o)) return std::get<Number>(o);
    auto it = values.find(std::get<std::string>(o));
    if (it == values.end()) return std::nullopt;
    return it->second;
}

void add_unique(std::vector<Predicate>& out, Predicate p) {
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
}

} // namespace

std::string_view value_type_name(ValueType type) {
    return type == ValueType::Int ? "int" : "float";
}

std::string describe(const Predicate& predicate) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ComparePredicate>) {
                return operand_text(p.lhs) + " " + std::string(op_text(p.op)) + " " + operand_text(p.rhs);
            } else if constexpr (std::is_same_v<T, IntegralPredicate>) {
                return p.variable + " is an integer";
            } else {
                return p.variable + " divisible by " + operand_text(p.divisor);
            }
        },
        predicate);
}

std::vector<Predicate> parse_predicates(std::string_view criteria, const std::string& self_name,
                                        const std::vector<std::string>& variables) {
    std::vector<Predicate> out;
    std::string text(criteria);
    std::string lower = text;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    static const std::regex kIntegral(R"(\b(integer|integers|whole number|whole numbers|integral)\b)");
    static const std::regex kNonNegative(R"(\bnon-?negative\b)");
    static const std::regex kPositive(R"((^|[^-a-z])positive\b)");
    if (std::regex_search(lower, kIntegral)) add_unique(out, IntegralPredicate{self_name});
    if (std::regex_search(lower, kNonNegative)) {
        add_unique(out, ComparePredicate{self_name, CompareOp::GreaterEqual, Number::integer(0)});
    } else if (std::regex_search(lower, kPositive)) {
        add_unique(out, ComparePredicate{self_name, CompareOp::Greater, Number::integer(0)});
    }

    static const std::regex kDivisible(R"((?:divisible by|multiple of)\s+([A-Za-z_]\w*|\d+(?:\.\d+)?))",
                                       std::regex::icase);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kDivisible); it != std::sregex_iterator(); ++it) {
        if (auto d = resolve((*it)[1].str(), variables)) add_unique(out, DivisiblePredicate{self_name, *d});
    }

    static const std::regex kWordCompare(
        R"((less than or equal to|greater than or equal to|at most|at least|less than|greater than|smaller than|larger than|more than)\s+([A-Za-z_]\w*|-?\d+(?:\.\d+)?))",
        std::regex::icase);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kWordCompare); it != std::sregex_iterator(); ++it) {
        std::string phrase = (*it)[1].str();
        std::transform(phrase.begin(), phrase.end(), phrase.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        CompareOp op = CompareOp::Less;
        if (phrase == "less than or equal to" || phrase == "at most") op = CompareOp::LessEqual;
        else if (phrase == "greater than or equal to" || phrase == "at least") op = CompareOp::GreaterEqual;
        else if (phrase == "greater than" || phrase == "larger than" || phrase == "more than") op = CompareOp::Greater;
        if (auto rhs = resolve((*it)[2].str(), variables)) add_unique(out, ComparePredicate{self_name, op, *rhs});
    }

    static const std::regex kSymbolic(R"(([A-Za-z_]\w*|-?\d+(?:\.\d+)?)\s*(<=|>=|==|!=|<|>)\s*([A-Za-z_]\w*|-?\d+(?:\.\d+)?))");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kSymbolic); it != std::sregex_iterator(); ++it) {
        auto lhs = resolve((*it)[1].str(), variables);
        auto rhs = resolve((*it)[3].str(), variables);
        auto op = parse_op((*it)[2].str());
        if (lhs && rhs && op && (std::holds_alternative<std::string>(*lhs) || std::holds_alternative<std::string>(*rhs))) {
            add_unique(out, ComparePredicate{*lhs, *op, *rhs});
        }
    }
    return out;
}

std::vector<VariableConstraint> parse_constraints(std::string_view text, const std::vector<std::string>& parameters,
                                                  const std::map<std::string, Number>& originals) {
    static const std::regex kLine(
        R"(^\s*([A-Za-z_]\w*)\s*:\s*(int|integer|float|real|number|decimal)\s+in\s+\[\s*([^,\]]+?)\s*,\s*([^\]]+?)\s*\](?:\s*(?:step|by)\s+([^\s;]+))?\s*(?:;\s*(.*?))?\s*$)",
        std::regex::icase);
    std::map<std::string, VariableConstraint> found;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '-' || t.front() == '*') t = trim(t.substr(1));
        std::smatch m;
        if (!std::regex_match(t, m, kLine)) throw Error(ErrorCode::MalformedLine, t);
        VariableConstraint c;
        c.name = m[1].str();
        if (std::find(parameters.begin(), parameters.end(), c.name) == parameters.end()) {
            throw Error(ErrorCode::MalformedLine, "unknown variable '" + c.name + "'");
        }
        if (found.contains(c.name)) throw Error(ErrorCode::MalformedLine, "duplicate constraint for " + c.name);
        std::string type = m[2].str();
        std::transform(type.begin(), type.end(), type.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        c.type = (type == "int" || type == "integer") ? ValueType::Int : ValueType::Float;
        auto lo = parse_bound(m[3].str());
        auto hi = parse_bound(m[4].str());
        if (!lo || !hi) throw Error(ErrorCode::MalformedLine, "bad bounds in: " + t);
        c.min = *lo;
        c.max = *hi;
        if (c.max < c.min) throw Error(ErrorCode::MalformedLine, "min > max in: " + t);
        if (m[5].matched) {
            auto step = parse_bound(m[5].str());
            if (!step || !(*step > Number::integer(0))) throw Error(ErrorCode::MalformedLine, "bad step in: " + t);
            c.step = *step;
        }
        if (c.type == ValueType::Int &&
            (!c.min.is_integer() || !c.max.is_integer() || (c.step && !c.step->is_integer()))) {
            throw Error(ErrorCode::MalformedLine, "int constraint with fractional bounds: " + t);
        }
        c.criteria = m[6].matched ? m[6].str() : std::string();
        c.predicates = parse_predicates(c.criteria, c.name, parameters);
        if (auto it = originals.find(c.name); it != originals.end()) c.original = it->second;
        found.emplace(c.name, std::move(c));
    }
    std::vector<VariableConstraint> out;
    for (const auto& p : parameters) {
        auto it = found.find(p);
        if (it == found.end()) throw Error(ErrorCode::MissingConstraint, p);
        out.push_back(it->second);
    }
    for (const auto& c : out) {
        if (!c.original) continue;
        if (!within_domain(c, *c.original)) {
            throw Error(ErrorCode::OriginalValueViolates, c.name + "=" + c.original->to_string());
        }
        for (const auto& p : c.predicates) {
            if (!holds(p, originals)) {
                throw Error(ErrorCode::OriginalValueViolates, c.name + ": " + describe(p));
            }
        }
    }
    return out;
}

bool within_domain(const VariableConstraint& c, const Number& value) {
    if (value < c.min || value > c.max) return false;
    if (c.type == ValueType::Int && !value.is_integer()) return false;
    if (c.step) {
        Number offset = (value - c.min) / *c.step;
        if (!offset.is_integer()) return false;
    }
    return true;
}

bool holds(const Predicate& p, const std::map<std::string, Number>& values) {
    return std::visit(
        [&](const auto& pred) -> bool {
            using T = std::decay_t<decltype(pred)>;
            if constexpr (std::is_same_v<T, ComparePredicate>) {
                auto a = value_of(pred.lhs, values);
                auto b = value_of(pred.rhs, values);
                if (!a || !b) return true;
                switch (pred.op) {
                case CompareOp::Less: return *a < *b;
                case CompareOp::LessEqual: return *a <= *b;
                case CompareOp::Greater: return *a > *b;
                case CompareOp::GreaterEqual: return *a >= *b;
                case CompareOp::Equal: return *a == *b;
                case CompareOp::NotEqual: return !(*a == *b);
                }
                return true;
            } else if constexpr (std::is_same_v<T, IntegralPredicate>) {
                auto it = values.find(pred.variable);
                return it == values.end() || it->second.is_integer();
            } else {
                auto it = values.find(pred.variable);
                auto d = value_of(pred.divisor, values);
                if (it == values.end() || !d) return true;
                if (*d == Number::integer(0)) return false;
                return (it->second / *d).is_integer();
            }
        },
        p);
}

bool satisfies(const std::vector<VariableConstraint>& constraints, const std::map<std::string, Number>& values) {
    for (const auto& c : constraints) {
        auto it = values.find(c.name);
        if (it == values.end() || !within_domain(c, it->second)) return false;
        for (const auto& p : c.predicates) {
            if (!holds(p, values)) return false;
        }
    }
    return true;
}

} // namespace mathforge
