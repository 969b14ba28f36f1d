#pragma once

#include "mathforge/number.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mathforge {

enum class ValueType { Int, Float };

std::string_view value_type_name(ValueType type);

/// A variable reference or a numeric constant inside a predicate.
using Operand = std::variant<std::string, Number>;

enum class CompareOp { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };

struct ComparePredicate {
    Operand lhs;
    CompareOp op = CompareOp::Less;
    Operand rhs;
    friend bool operator==(const ComparePredicate&, const ComparePredicate&) = default;
};

struct IntegralPredicate {
    std::string variable;
    friend bool operator==(const IntegralPredicate&, const IntegralPredicate&) = default;
};

struct DivisiblePredicate {
    std::string variable;
    Operand divisor;
    friend bool operator==(const DivisiblePredicate&, const DivisiblePredicate&) = default;
};

using Predicate = std::variant<ComparePredicate, IntegralPredicate, DivisiblePredicate>;

std::string describe(const Predicate& predicate);

/// One `name: type in [lo, hi] [step s]; criteria` line. Predicates are the
/// parts of the criteria text that match the small grammar (integrality,
/// positivity, divisibility, ordering); anything else stays advisory.
struct VariableConstraint {
    std::string name;
    ValueType type = ValueType::Int;
    Number min;
    Number max;
    std::optional<Number> step;
    std::string criteria;
    std::vector<Predicate> predicates;
    /// The value the variable had in the source problem, when known.
    std::optional<Number> original;

    friend bool operator==(const VariableConstraint&, const VariableConstraint&) = default;
};

/// Parses a Constraints section against the template parameters and their
/// original values. Throws Error with MalformedLine, MissingConstraint or
/// OriginalValueViolates.
std::vector<VariableConstraint> parse_constraints(std::string_view text, const std::vector<std::string>& parameters,
                                                  const std::map<std::string, Number>& originals);

/// Extracts structured predicates for `self_name` from free criteria text;
/// only references to known variables are accepted.
std::vector<Predicate> parse_predicates(std::string_view criteria, const std::string& self_name,
                                        const std::vector<std::string>& variables);

bool within_domain(const VariableConstraint& c, const Number& value);
bool holds(const Predicate& p, const std::map<std::string, Number>& values);
/// Bounds, step grid, type and every predicate that can be evaluated.
bool satisfies(const std::vector<VariableConstraint>& constraints, const std::map<std::string, Number>& values);

} // namespace mathforge
