#pragma once

#include "mathforge/corpus.hpp"
#include "mathforge/lexer.hpp"
#include "mathforge/masking.hpp"
#include "mathforge/number.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mathforge {

inline constexpr std::string_view kSolutionFunction = "solution";

struct TemplateOptions {
    /// Modules a template may import (top level or inside the function).
    std::set<std::string> allowed_imports{"math", "fractions", "decimal", "statistics", "itertools",
                                          "functools", "cmath", "sympy", "numpy"};
    /// Identifiers that make execution nondeterministic or escape the sandbox.
    std::set<std::string> denied_identifiers{
        "random",  "time",       "datetime", "os",       "sys",     "subprocess", "socket",   "open",
        "eval",    "exec",       "compile",  "__import__", "input", "globals",    "locals",   "breakpoint",
        "exit",    "quit",       "urllib",   "requests", "shutil",  "pathlib",    "threading", "multiprocessing",
        "secrets", "uuid",       "signal",   "ctypes",   "importlib", "builtins", "http",     "asyncio",
    };
};

/// A validated number-independent program: one top-level
/// `def solution(<params>):` whose docstring has one `:param name:` line per
/// parameter (in order) and one `:return:` line.
struct UnifiedProgram {
    std::string function_name{kSolutionFunction};
    std::vector<std::string> parameters;
    std::string docstring;
    std::string source;
    std::vector<std::string> imports;
    bool returns_integer = false;
    bool returns_nonnegative = false;

    /// SHA-256 (hex) of the UTF-8 source text.
    std::string digest() const;

    friend bool operator==(const UnifiedProgram&, const UnifiedProgram&) = default;
};

/// Throws Error with NotFunctionForm, DocstringParamMissing, DocstringInvalid,
/// UnusedParameter, ParameterRebound, DeniedIdentifier or LexError.
UnifiedProgram validate_program(std::string_view source, const TemplateOptions& options = {});

/// A set of parameter positions (bit i = parameter i) to inline with numbers.
class SelectorMask {
public:
    constexpr SelectorMask() = default;
    constexpr explicit SelectorMask(std::uint64_t bits) : bits_(bits) {}

    constexpr std::uint64_t bits() const { return bits_; }
    bool contains(std::size_t index) const { return (bits_ >> index) & 1U; }
    std::size_t count() const;
    std::set<std::string> names(const std::vector<std::string>& parameters) const;

    static SelectorMask full(std::size_t k) { return SelectorMask(k >= 64 ? ~0ULL : (1ULL << k) - 1); }

    friend constexpr auto operator<=>(SelectorMask, SelectorMask) = default;

private:
    std::uint64_t bits_ = 0;
};

/// All 2^k - 1 non-empty subsets in binary counting order.
/// Throws Error(KOutOfRange) unless 1 <= k <= cap.
std::vector<SelectorMask> enumerate_selectors(std::size_t k, std::size_t cap = 16);

/// The literal that replaces a parameter inside the program:
/// INT "5"; FLOAT shortest decimal "2.5"; PERCENT value/100 ("20" -> "0.2");
/// FRACTION "(3/4)". Throws Error(FormatMismatch).
std::string format_number(const Number& value, NumberKind kind);

struct SampleProvenance {
    std::string problem_id;
    std::string template_digest;
    /// Selected parameter names in parameter order.
    std::vector<std::string> selector;
    /// Canonical value text per selected parameter.
    std::map<std::string, std::string> assignment;

    friend bool operator==(const SampleProvenance&, const SampleProvenance&) = default;
};

struct InstantiatedSample {
    std::string question;
    std::string program;
    std::optional<GroundTruthAnswer> expected_answer;
    SampleProvenance provenance;
    bool full = false;

    friend bool operator==(const InstantiatedSample&, const InstantiatedSample&) = default;
};

/// Inlines the selected parameters: drops them from the signature and their
/// `:param` docstring lines, replaces their IDENT tokens with literals (string
/// and comment tokens are never touched) and, for the full selector, appends
/// `print(solution())`. The question keeps the complement as variable names.
/// Throws Error with SelectorNotSubset, MissingValue, FormatMismatch or
/// SubstitutionCollision.
InstantiatedSample instantiate(const UnifiedProgram& program, const MaskedQuestion& masked,
                               const std::map<std::string, Number>& assignment,
                               const std::set<std::string>& selector, std::string_view problem_id = {});

/// Kind used to format a parameter: the binding's span kind, else INT for
/// integers and FLOAT otherwise.
NumberKind parameter_kind(const MaskedQuestion& masked, const std::string& name, const Number& value);

/// Removes docstrings (statement position string literals), keeping
/// comments. Idempotent.
std::string strip_docstring(std::string_view source);
UnifiedProgram strip_docstring(const UnifiedProgram& program);
InstantiatedSample strip_docstring(const InstantiatedSample& sample);

} // namespace mathforge
