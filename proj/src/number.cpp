#include "mathforge/number.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <system_error>

namespace mathforge {

namespace {

using i128 = __int128;

constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();

bool fits(i128 v) {
    return v <= static_cast<i128>(kMax) && v >= -static_cast<i128>(kMax);
}

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

std::optional<Number> make_exact(i128 num, i128 den) {
    if (den == 0) return std::nullopt;
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (!fits(num) || !fits(den)) return std::nullopt;
    return Number::rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

std::string i128_to_string(i128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    if (neg) v = -v;
    std::string out;
    while (v > 0) {
        out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    if (neg) out.push_back('-');
    return {out.rbegin(), out.rend()};
}

std::optional<double> parse_double(std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

// Decimal or scientific literal; exact when the digits fit in 64 bits.
std::optional<Number> parse_decimal(std::string_view text) {
    std::size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
        neg = text[i] == '-';
        ++i;
    }
    i128 mantissa = 0;
    int scale = 0;
    int digits = 0;
    bool overflow = false;
    bool seen_point = false;
    bool any_digit = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c >= '0' && c <= '9') {
            any_digit = true;
            if (mantissa == 0 && c == '0') {
                if (seen_point) ++scale;
                continue;
            }
            if (digits >= 30) {
                overflow = true;
                if (!seen_point) --scale;
                continue;
            }
            mantissa = mantissa * 10 + (c - '0');
            ++digits;
            if (seen_point) ++scale;
        } else if (c == '.' && !seen_point) {
            seen_point = true;
        } else {
            break;
        }
    }
    if (!any_digit) return std::nullopt;
    int exponent = 0;
    if (i < text.size()) {
        if (text[i] != 'e' && text[i] != 'E') return std::nullopt;
        ++i;
        std::string_view rest = text.substr(i);
        if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), exponent);
        if (ec != std::errc() || ptr != rest.data() + rest.size() || rest.empty()) {
            return std::nullopt;
        }
    }
    int power = exponent - scale;
    if (!overflow && power > -19 && power < 19) {
        i128 num = mantissa;
        i128 den = 1;
        bool ok = true;
        for (int p = 0; p < std::abs(power) && ok; ++p) {
            if (power > 0) {
                num *= 10;
                ok = fits(num);
            } else {
                den *= 10;
            }
        }
        if (ok) {
            if (neg) num = -num;
            if (auto exact = make_exact(num, den)) return exact;
        }
    }
    std::string_view numeric = text;
    if (!numeric.empty() && numeric.front() == '+') numeric.remove_prefix(1);
    auto value = parse_double(numeric);
    if (!value) return std::nullopt;
    return Number::real(*value);
}

int count_factor(std::int64_t& n, int f) {
    int count = 0;
    while (n % f == 0) {
        n /= f;
        ++count;
    }
    return count;
}

} // namespace

Number Number::integer(std::int64_t value) {
    Number n;
    n.num_ = value;
    n.den_ = 1;
    n.approx_ = static_cast<double>(value);
    return n;
}

Number Number::rational(std::int64_t numerator, std::int64_t denominator) {
    if (denominator == 0) throw std::domain_error("zero denominator");
    i128 num = numerator;
    i128 den = denominator;
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    Number n;
    n.num_ = static_cast<std::int64_t>(num);
    n.den_ = static_cast<std::int64_t>(den);
    constexpr std::int64_t kExactDouble = std::int64_t{1} << 53;
    if ((n.num_ > -kExactDouble && n.num_ < kExactDouble && n.den_ < kExactDouble) || !n.is_terminating_decimal()) {
        n.approx_ = static_cast<double>(n.num_) / static_cast<double>(n.den_);
    } else {
        // correctly rounded through the exact decimal text
        std::string text = n.to_string();
        std::from_chars(text.data(), text.data() + text.size(), n.approx_);
    }
    return n;
}

Number Number::real(double value) {
    if (!std::isfinite(value)) throw std::domain_error("non-finite number");
    Number n;
    n.exact_ = false;
    n.approx_ = value;
    n.num_ = 0;
    n.den_ = 1;
    return n;
}

std::optional<Number> Number::parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    auto slash = text.find('/');
    if (slash != std::string_view::npos) {
        auto lhs = text.substr(0, slash);
        auto rhs = text.substr(slash + 1);
        std::int64_t a = 0;
        std::int64_t b = 0;
        std::string_view l = lhs;
        if (!l.empty() && l.front() == '+') l.remove_prefix(1);
        auto r1 = std::from_chars(l.data(), l.data() + l.size(), a);
        auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), b);
        if (l.empty() || rhs.empty() || r1.ec != std::errc() || r1.ptr != l.data() + l.size() ||
            r2.ec != std::errc() || r2.ptr != rhs.data() + rhs.size() || b <= 0) {
            return std::nullopt;
        }
        return rational(a, b);
    }
    return parse_decimal(text);
}

bool Number::is_integer() const noexcept {
    if (exact_) return den_ == 1;
    return std::floor(approx_) == approx_;
}

bool Number::is_negative() const noexcept {
    return exact_ ? num_ < 0 : approx_ < 0.0;
}

bool Number::is_terminating_decimal() const noexcept {
    if (!exact_) return false;
    std::int64_t d = den_;
    count_factor(d, 2);
    count_factor(d, 5);
    return d == 1;
}

double Number::to_double() const noexcept {
    return approx_;
}

std::string Number::to_string() const {
    if (!exact_) return shortest_decimal(approx_);
    if (den_ == 1) return std::to_string(num_);
    if (!is_terminating_decimal()) return std::to_string(num_) + "/" + std::to_string(den_);
    std::int64_t d = den_;
    int twos = count_factor(d, 2);
    int fives = count_factor(d, 5);
    int places = std::max(twos, fives);
    i128 scaled = num_;
    // num/den = num * (10^places / den) / 10^places
    i128 pow10 = 1;
    for (int p = 0; p < places; ++p) pow10 *= 10;
    scaled = scaled * (pow10 / den_);
    bool neg = scaled < 0;
    std::string digits = i128_to_string(neg ? -scaled : scaled);
    if (static_cast<int>(digits.size()) <= places) {
        digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
    return neg ? "-" + digits : digits;
}

std::string Number::to_percent_fraction_string() const {
    Number hundred = integer(100);
    Number scaled = *this / hundred;
    if (scaled.is_exact() && !scaled.is_terminating_decimal()) {
        return shortest_decimal(scaled.to_double());
    }
    return scaled.to_string();
}

namespace {

template <typename ExactOp, typename RealOp>
Number combine(const Number& a, const Number& b, ExactOp exact, RealOp real) {
    if (a.is_exact() && b.is_exact()) {
        if (auto r = exact(a, b)) return *r;
    }
    return Number::real(real(a.to_double(), b.to_double()));
}

} // namespace

Number Number::operator+(const Number& other) const {
    return combine(
        *this, other,
        [](const Number& a, const Number& b) {
            return make_exact(static_cast<i128>(a.numerator()) * b.denominator() +
                                  static_cast<i128>(b.numerator()) * a.denominator(),
                              static_cast<i128>(a.denominator()) * b.denominator());
        },
        [](double x, double y) { return x + y; });
}

Number Number::operator-(const Number& other) const {
    return *this + (other * integer(-1));
}

Number Number::operator*(const Number& other) const {
    return combine(
        *this, other,
        [](const Number& a, const Number& b) {
            return make_exact(static_cast<i128>(a.numerator()) * b.numerator(),
                              static_cast<i128>(a.denominator()) * b.denominator());
        },
        [](double x, double y) { return x * y; });
}

Number Number::operator/(const Number& other) const {
    if ((other.is_exact() && other.numerator() == 0) || other.to_double() == 0.0) {
        throw std::domain_error("division by zero");
    }
    return combine(
        *this, other,
        [](const Number& a, const Number& b) {
            return make_exact(static_cast<i128>(a.numerator()) * b.denominator(),
                              static_cast<i128>(a.denominator()) * b.numerator());
        },
        [](double x, double y) { return x / y; });
}

Number Number::abs() const {
    return is_negative() ? *this * integer(-1) : *this;
}

bool operator==(const Number& a, const Number& b) noexcept {
    if (a.exact_ && b.exact_) return a.num_ == b.num_ && a.den_ == b.den_;
    return a.approx_ == b.approx_;
}

std::partial_ordering operator<=>(const Number& a, const Number& b) noexcept {
    if (a.exact_ && b.exact_) {
        i128 lhs = static_cast<i128>(a.num_) * b.den_;
        i128 rhs = static_cast<i128>(b.num_) * a.den_;
        if (lhs < rhs) return std::partial_ordering::less;
        if (lhs > rhs) return std::partial_ordering::greater;
        return std::partial_ordering::equivalent;
    }
    return a.approx_ <=> b.approx_;
}

std::string shortest_decimal(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) return std::to_string(value);
    return {buf, ptr};
}

} // namespace mathforge
