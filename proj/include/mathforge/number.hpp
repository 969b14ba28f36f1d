#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mathforge {

/// A finite number kept as an exact rational whenever the source text allows
/// it (integers, terminating decimals, "a/b" fractions), otherwise as a
/// double. Exact values never go through binary floating point, so decimal
/// answers like "0.1" compare without rounding noise.
class Number {
public:
    Number() = default;

    static Number integer(std::int64_t value);
    /// Normalizes sign and common factors. Throws std::domain_error on a zero
    /// denominator.
    static Number rational(std::int64_t numerator, std::int64_t denominator);
    /// Non-finite input throws std::domain_error.
    static Number real(double value);

    /// Accepts "-12", "3.50", ".5", "1e-3", "3/4". Rejects anything else,
    /// including inf/nan and trailing garbage.
    static std::optional<Number> parse(std::string_view text);

    bool is_exact() const noexcept { return exact_; }
    bool is_integer() const noexcept;
    bool is_negative() const noexcept;
    /// True when exact and the reduced denominator has only factors 2 and 5.
    bool is_terminating_decimal() const noexcept;

    std::int64_t numerator() const noexcept { return num_; }
    std::int64_t denominator() const noexcept { return den_; }
    double to_double() const noexcept;

    /// Canonical text: integers without a point, terminating decimals in
    /// plain positional form, other rationals as "a/b", inexact values as the
    /// shortest round-trip decimal. parse(to_string()) reproduces the value.
    std::string to_string() const;
    /// Decimal text of value / 100, exact when the value is a terminating
    /// decimal.
    std::string to_percent_fraction_string() const;

    Number operator+(const Number& other) const;
    Number operator-(const Number& other) const;
    Number operator*(const Number& other) const;
    Number operator/(const Number& other) const;
    Number abs() const;

    friend bool operator==(const Number& a, const Number& b) noexcept;
    friend std::partial_ordering operator<=>(const Number& a, const Number& b) noexcept;

private:
    bool exact_ = true;
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
    double approx_ = 0.0;
};

/// Shortest round-trip decimal for a double, e.g. 0.1 -> "0.1", 1e21 -> "1e+21".
std::string shortest_decimal(double value);

} // namespace mathforge
