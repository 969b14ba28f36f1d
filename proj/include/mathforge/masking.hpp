#pragma once

#include "mathforge/number.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace mathforge {

enum class NumberKind { Int, Float, Percent, Fraction };

std::string_view number_kind_name(NumberKind kind);
std::optional<NumberKind> parse_number_kind(std::string_view text);

/// A numeral found in question text. Offsets are UTF-8 byte offsets,
/// half-open. For PERCENT the value is the number before "%" (20 for "20%").
struct NumberSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string surface;
    Number value;
    NumberKind kind = NumberKind::Int;

    friend bool operator==(const NumberSpan&, const NumberSpan&) = default;
};

/// Parses a numeral as written in a question or an "Extracted Numbers" line:
/// "1,200", "2.5", "20%", "3/4". Returns the value and the inferred kind.
std::optional<std::pair<Number, NumberKind>> parse_number_literal(std::string_view literal);

struct ExtractOptions {
    /// Skip numerals inside $...$, $$...$$, \(...\) and \[...\].
    bool skip_math_markup = true;
    /// Extra skip regions (ECMAScript regex). When a pattern has a capture
    /// group, only group 1 is skipped; otherwise the whole match.
    std::vector<std::string> skip_patterns = default_skip_patterns();

    static std::vector<std::string> default_skip_patterns();
};

/// Left-to-right scan for digit-based integers, decimals, percents and simple
/// fractions. Ordinals ("2nd"), digits glued to identifiers ("x2", "H2O"),
/// dates ("1/2/2020") and anything in a skip region are not extracted.
std::vector<NumberSpan> extract_numbers(std::string_view text, const ExtractOptions& options = {});

struct Binding {
    std::string name;
    NumberSpan span;

    friend bool operator==(const Binding&, const Binding&) = default;
};

struct MaskedQuestion {
    std::string template_text;
    std::vector<Binding> bindings;

    std::size_t k() const { return bindings.size(); }
    bool synthesizable() const { return !bindings.empty(); }
    const Binding* find(std::string_view name) const;
    /// Renders with every original value; equals the source question.
    std::string original_text() const;

    friend bool operator==(const MaskedQuestion&, const MaskedQuestion&) = default;
};

/// Positional names n1, n2, ... unless overrides are supplied (one per span).
struct NamingPolicy {
    std::vector<std::string> overrides;
};

bool is_identifier(std::string_view name);

/// Replaces each span's full surface with "{name}". Zero spans yields a
/// MaskedQuestion with k() == 0 that is not synthesizable.
/// Throws Error(OverlappingSpans) or Error(NameCollision).
MaskedQuestion mask_question(std::string_view text, const std::vector<NumberSpan>& spans,
                             const NamingPolicy& naming = {});

struct Keep {
    friend bool operator==(Keep, Keep) = default;
};
/// A binding either receives a number or keeps its variable name.
using Slot = std::variant<Keep, Number>;
using Assignment = std::map<std::string, Slot>;

/// Question-side text of a value for a span kind ("50%", "3/4", "12").
/// A value equal to the original renders as the original surface.
std::string format_question_value(const NumberSpan& original, const Number& value);

/// Throws Error(MissingAssignment) or Error(FormatMismatch).
std::string render_question(const MaskedQuestion& masked, const Assignment& assignment);

/// Builds a MaskedQuestion from a general question whose "{name}" placeholders
/// are filled by the given literals. Whitespace differences against the
/// original are tolerated; spans always index into the original text.
/// Returns nullopt if the rendering does not reproduce the original.
std::optional<MaskedQuestion> mask_from_placeholders(
    std::string_view original, std::string_view general_question,
    const std::vector<std::pair<std::string, std::string>>& numbers);

/// Placeholder names ("{name}" with a valid identifier) in order of appearance.
std::vector<std::string> placeholder_names(std::string_view text);

enum class CrosscheckWarning { MissedConstant, ExtraConstant };
std::string_view crosscheck_warning_name(CrosscheckWarning w);

struct CrosscheckReport {
    bool pass = false;
    /// ROUNDTRIP_MISMATCH when pass is false.
    std::string failure;
    std::string rendered;
    std::vector<std::pair<CrosscheckWarning, std::string>> warnings;
};

CrosscheckReport crosscheck_masking(const MaskedQuestion& local, std::string_view llm_general_question,
                                    const std::vector<std::pair<std::string, std::string>>& llm_numbers);

} // namespace mathforge
