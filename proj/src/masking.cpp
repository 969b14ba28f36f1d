#include "mathforge/masking.hpp"

#include "mathforge/corpus.hpp"
#include "mathforge/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>

namespace mathforge {

namespace {

bool is_digit(char c) {
    return c >= '0' && c <= '9';
}

bool is_ascii_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_word_char(char c) {
    return is_ascii_alpha(c) || is_digit(c) || c == '_';
}

// Byte ranges the extractor must not look into.
std::vector<std::pair<std::size_t, std::size_t>> skip_regions(std::string_view text, const ExtractOptions& opt) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (opt.skip_math_markup) {
        std::size_t i = 0;
        while (i < text.size()) {
            std::string_view close;
            std::size_t open_len = 0;
            if (text.compare(i, 2, "$$") == 0) {
                close = "$$";
                open_len = 2;
            } else if (text[i] == '$' && (i == 0 || text[i - 1] != '\\')) {
                close = "$";
                open_len = 1;
            } else if (text.compare(i, 2, "\\(") == 0) {
                close = "\\)";
                open_len = 2;
            } else if (text.compare(i, 2, "\\[") == 0) {
                close = "\\]";
                open_len = 2;
            }
            if (open_len == 0) {
                ++i;
                continue;
            }
            auto end = text.find(close, i + open_len);
            if (close == "$") {
                // A lone "$" followed by a digit is currency, not markup.
                while (end != std::string_view::npos && end > 0 && text[end - 1] == '\\') {
                    end = text.find(close, end + 1);
                }
                if (end == std::string_view::npos || (i + 1 < text.size() && is_digit(text[i + 1]) &&
                                                      text.substr(i + 1, end - i - 1).find_first_of(
                                                          "\\^_{}=") == std::string_view::npos)) {
                    ++i;
                    continue;
                }
            }
            if (end == std::string_view::npos) {
                out.emplace_back(i, text.size());
                break;
            }
            out.emplace_back(i, end + close.size());
            i = end + close.size();
        }
    }
    std::string owned(text);
    for (const auto& pattern : opt.skip_patterns) {
        std::regex re(pattern, std::regex::ECMAScript | std::regex::multiline);
        for (auto it = std::sregex_iterator(owned.begin(), owned.end(), re); it != std::sregex_iterator(); ++it) {
            const auto& m = *it;
            if (m.size() > 1 && m[1].matched) {
                out.emplace_back(static_cast<std::size_t>(m.position(1)),
                                 static_cast<std::size_t>(m.position(1) + m.length(1)));
            } else if (m.length(0) > 0) {
                out.emplace_back(static_cast<std::size_t>(m.position(0)),
                                 static_cast<std::size_t>(m.position(0) + m.length(0)));
            }
        }
    }
    return out;
}

bool inside(const std::vector<std::pair<std::size_t, std::size_t>>& regions, std::size_t pos) {
    return std::any_of(regions.begin(), regions.end(),
                       [&](const auto& r) { return pos >= r.first && pos < r.second; });
}

std::size_t digit_run(std::string_view text, std::size_t i) {
    while (i < text.size() && is_digit(text[i])) ++i;
    return i;
}

bool is_ordinal_suffix(std::string_view text, std::size_t pos) {
    static constexpr std::string_view kSuffixes[] = {"st", "nd", "rd", "th"};
    for (auto s : kSuffixes) {
        if (text.size() >= pos + 2 && std::tolower(static_cast<unsigned char>(text[pos])) == s[0] &&
            std::tolower(static_cast<unsigned char>(text[pos + 1])) == s[1] &&
            (pos + 2 == text.size() || !is_word_char(text[pos + 2]))) {
            return true;
        }
    }
    return false;
}

std::string integer_text(const Number& value) {
    if (value.is_exact()) return std::to_string(value.numerator());
    return std::to_string(std::llround(value.to_double()));
}

} // namespace

std::string_view number_kind_name(NumberKind kind) {
    switch (kind) {
    case NumberKind::Int: return "INT";
    case NumberKind::Float: return "FLOAT";
    case NumberKind::Percent: return "PERCENT";
    case NumberKind::Fraction: return "FRACTION";
    }
    return "INT";
}

std::optional<NumberKind> parse_number_kind(std::string_view text) {
    if (text == "INT") return NumberKind::Int;
    if (text == "FLOAT") return NumberKind::Float;
    if (text == "PERCENT") return NumberKind::Percent;
    if (text == "FRACTION") return NumberKind::Fraction;
    return std::nullopt;
}

std::optional<std::pair<Number, NumberKind>> parse_number_literal(std::string_view literal) {
    std::string s(literal);
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    if (s.empty()) return std::nullopt;
    NumberKind kind = NumberKind::Int;
    if (s.back() == '%') {
        kind = NumberKind::Percent;
        s.pop_back();
    }
    std::string digits;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',' && i > 0 && is_digit(s[i - 1]) && i + 3 < s.size() + 1 && digit_run(s, i + 1) == i + 4) {
            continue;
        }
        digits.push_back(s[i]);
    }
    if (digits.find_first_of("eE") != std::string::npos) return std::nullopt;
    auto value = Number::parse(digits);
    if (!value) return std::nullopt;
    if (kind != NumberKind::Percent) {
        if (digits.find('/') != std::string::npos) {
            kind = NumberKind::Fraction;
        } else if (digits.find('.') != std::string::npos) {
            kind = NumberKind::Float;
        }
    }
    return std::make_pair(*value, kind);
}

std::vector<std::string> ExtractOptions::default_skip_patterns() {
    return {
        // enumeration labels at line start: "1. ", "2) "
        R"(^[ \t]*(\d+)[.)][ \t])",
        // years inside proper nouns: "World Cup 2018", "Expo 2020"
        R"([A-Z][A-Za-z]+ ((?:1[5-9]|20)\d\d)\b)",
    };
}

std::vector<NumberSpan> extract_numbers(std::string_view text, const ExtractOptions& options) {
    auto regions = skip_regions(text, options);
    std::vector<NumberSpan> spans;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_digit(text[i])) {
            ++i;
            continue;
        }
        std::size_t start = i;
        // Glued to an identifier on the left: skip the whole word.
        if (start > 0 && (is_ascii_alpha(text[start - 1]) || text[start - 1] == '_')) {
            while (i < text.size() && is_word_char(text[i])) ++i;
            continue;
        }
        std::size_t end = digit_run(text, i);
        // Thousands groups: ",ddd" with nothing numeric after.
        while (end + 4 <= text.size() && text[end] == ',' && digit_run(text, end + 1) == end + 4) {
            end += 4;
        }
        NumberKind kind = NumberKind::Int;
        if (end + 1 < text.size() && text[end] == '.' && is_digit(text[end + 1])) {
            end = digit_run(text, end + 1);
            kind = NumberKind::Float;
        }
        if (kind == NumberKind::Int && end + 1 < text.size() && text[end] == '/' && is_digit(text[end + 1]) &&
            text.substr(start, end - start).find(',') == std::string_view::npos) {
            std::size_t den_end = digit_run(text, end + 1);
            if (den_end < text.size() && (text[den_end] == '/' || (text[den_end] == '.' && den_end + 1 < text.size() &&
                                                                     is_digit(text[den_end + 1])))) {
                // date-like "1/2/2020": consume and skip
                i = den_end + 1;
                while (i < text.size() && (is_digit(text[i]) || text[i] == '/')) ++i;
                continue;
            }
            end = den_end;
            kind = NumberKind::Fraction;
        } else if (end < text.size() && text[end] == '%') {
            ++end;
            kind = NumberKind::Percent;
        }
        i = end;
        if (kind == NumberKind::Int && is_ordinal_suffix(text, end)) continue;
        if (inside(regions, start)) continue;
        std::string surface(text.substr(start, end - start));
        auto parsed = parse_number_literal(surface);
        if (!parsed) continue;
        spans.push_back({start, end, surface, parsed->first, kind});
    }
    return spans;
}

bool is_identifier(std::string_view name) {
    if (name.empty() || is_digit(name[0])) return false;
    return std::all_of(name.begin(), name.end(), [](char c) { return is_word_char(c); });
}

const Binding* MaskedQuestion::find(std::string_view name) const {
    for (const auto& b : bindings) {
        if (b.name == name) return &b;
    }
    return nullptr;
}

std::string MaskedQuestion::original_text() const {
    Assignment a;
    for (const auto& b : bindings) a[b.name] = b.span.value;
    return render_question(*this, a);
}

MaskedQuestion mask_question(std::string_view text, const std::vector<NumberSpan>& spans, const NamingPolicy& naming) {
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto& s = spans[i];
        if (s.start >= s.end || s.end > text.size() || text.substr(s.start, s.end - s.start) != s.surface) {
            throw Error(ErrorCode::OverlappingSpans, "span " + std::to_string(i) + " does not match the text");
        }
        if (i > 0 && spans[i - 1].end > s.start) {
            throw Error(ErrorCode::OverlappingSpans,
                        "spans " + std::to_string(i - 1) + " and " + std::to_string(i) + " overlap or are unsorted");
        }
    }
    if (!naming.overrides.empty() && naming.overrides.size() != spans.size()) {
        throw Error(ErrorCode::NameCollision, "name override count differs from span count");
    }
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        std::string name = naming.overrides.empty() ? "n" + std::to_string(i + 1) : naming.overrides[i];
        if (!is_identifier(name)) throw Error(ErrorCode::NameCollision, "invalid placeholder name '" + name + "'");
        if (!seen.insert(name).second) throw Error(ErrorCode::NameCollision, "duplicate placeholder name '" + name + "'");
        if (text.find("{" + name + "}") != std::string_view::npos) {
            throw Error(ErrorCode::NameCollision, "text already contains {" + name + "}");
        }
        names.push_back(std::move(name));
    }
    MaskedQuestion m;
    m.template_text = std::string(text);
    for (std::size_t i = spans.size(); i-- > 0;) {
        m.template_text.replace(spans[i].start, spans[i].end - spans[i].start, "{" + names[i] + "}");
    }
    for (std::size_t i = 0; i < spans.size(); ++i) m.bindings.push_back({names[i], spans[i]});
    return m;
}

std::string format_question_value(const NumberSpan& original, const Number& value) {
    if (value == original.value) return original.surface;
    switch (original.kind) {
    case NumberKind::Int:
        if (!value.is_integer()) {
            throw Error(ErrorCode::FormatMismatch, "non-integer " + value.to_string() + " for INT placeholder");
        }
        return integer_text(value);
    case NumberKind::Float:
        return value.to_string().find('/') == std::string::npos ? value.to_string()
                                                                : shortest_decimal(value.to_double());
    case NumberKind::Percent: {
        std::string t = value.to_string();
        if (t.find('/') != std::string::npos) t = shortest_decimal(value.to_double());
        return t + "%";
    }
    case NumberKind::Fraction:
        if (!value.is_exact()) {
            throw Error(ErrorCode::FormatMismatch, "inexact value " + value.to_string() + " for FRACTION placeholder");
        }
        return std::to_string(value.numerator()) + "/" + std::to_string(value.denominator());
    }
    return value.to_string();
}

namespace {

// Calls on_placeholder(name) for each "{identifier}" and on_text(chunk) for the rest.
template <typename OnText, typename OnPlaceholder>
void walk_template(std::string_view tmpl, OnText on_text, OnPlaceholder on_placeholder) {
    std::size_t i = 0;
    std::size_t literal_start = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto name = tmpl.substr(i + 1, close - i - 1);
                if (is_identifier(name) && on_placeholder(name, /*dry_run=*/true)) {
                    on_text(tmpl.substr(literal_start, i - literal_start));
                    on_placeholder(name, false);
                    i = close + 1;
                    literal_start = i;
                    continue;
                }
            }
        }
        ++i;
    }
    on_text(tmpl.substr(literal_start));
}

} // namespace

std::string render_question(const MaskedQuestion& masked, const Assignment& assignment) {
    for (const auto& b : masked.bindings) {
        if (!assignment.contains(b.name)) throw Error(ErrorCode::MissingAssignment, b.name);
    }
    std::string out;
    walk_template(
        masked.template_text, [&](std::string_view t) { out.append(t); },
        [&](std::string_view name, bool dry_run) {
            const Binding* b = masked.find(name);
            if (dry_run || !b) return b != nullptr;
            const Slot& slot = assignment.at(b->name);
            if (std::holds_alternative<Keep>(slot)) {
                out.append(b->name);
            } else {
                out.append(format_question_value(b->span, std::get<Number>(slot)));
            }
            return true;
        });
    return out;
}

std::vector<std::string> placeholder_names(std::string_view text) {
    std::vector<std::string> out;
    walk_template(
        text, [](std::string_view) {},
        [&](std::string_view name, bool dry_run) {
            if (!dry_run) out.emplace_back(name);
            return true;
        });
    return out;
}

std::optional<MaskedQuestion> mask_from_placeholders(std::string_view original, std::string_view general_question,
                                                     const std::vector<std::pair<std::string, std::string>>& numbers) {
    auto literal_of = [&](std::string_view name) -> const std::string* {
        for (const auto& [n, lit] : numbers) {
            if (n == name) return &lit;
        }
        return nullptr;
    };
    auto escape = [](std::string_view s) {
        static const std::string kSpecial = R"(\^$.|?*+()[]{}/)";
        std::string out;
        bool in_space = false;
        for (char c : s) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!in_space) out += "\\s*";
                in_space = true;
                continue;
            }
            in_space = false;
            if (kSpecial.find(c) != std::string::npos) out.push_back('\\');
            out.push_back(c);
        }
        return out;
    };
    std::string pattern = "^\\s*";
    std::vector<std::string> order;
    walk_template(
        general_question, [&](std::string_view t) { pattern += escape(t); },
        [&](std::string_view name, bool dry_run) {
            const std::string* lit = literal_of(name);
            if (dry_run || !lit) return lit != nullptr;
            pattern += "(" + escape(*lit) + ")";
            order.emplace_back(name);
            return true;
        });
    pattern += "\\s*$";
    std::set<std::string> unique(order.begin(), order.end());
    if (unique.size() != order.size()) return std::nullopt;
    std::string subject(original);
    std::smatch m;
    try {
        if (!std::regex_match(subject, m, std::regex(pattern))) return std::nullopt;
    } catch (const std::regex_error&) {
        return std::nullopt;
    }
    std::vector<NumberSpan> spans;
    for (std::size_t g = 0; g < order.size(); ++g) {
        auto lit = parse_number_literal(*literal_of(order[g]));
        if (!lit) return std::nullopt;
        auto start = static_cast<std::size_t>(m.position(static_cast<int>(g + 1)));
        auto len = static_cast<std::size_t>(m.length(static_cast<int>(g + 1)));
        spans.push_back({start, start + len, subject.substr(start, len), lit->first, lit->second});
    }
    try {
        return mask_question(original, spans, NamingPolicy{order});
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::string_view crosscheck_warning_name(CrosscheckWarning w) {
    return w == CrosscheckWarning::MissedConstant ? "MISSED_CONSTANT" : "EXTRA_CONSTANT";
}

CrosscheckReport crosscheck_masking(const MaskedQuestion& local, std::string_view llm_general_question,
                                    const std::vector<std::pair<std::string, std::string>>& llm_numbers) {
    CrosscheckReport report;
    std::string rendered;
    walk_template(
        llm_general_question, [&](std::string_view t) { rendered.append(t); },
        [&](std::string_view name, bool dry_run) {
            for (const auto& [n, lit] : llm_numbers) {
                if (n == name) {
                    if (!dry_run) rendered.append(lit);
                    return true;
                }
            }
            return false;
        });
    report.rendered = rendered;
    report.pass = normalize_whitespace(rendered) == normalize_whitespace(local.original_text());
    if (!report.pass) report.failure = "ROUNDTRIP_MISMATCH";

    std::vector<Number> llm_values;
    for (const auto& [name, lit] : llm_numbers) {
        if (auto v = parse_number_literal(lit)) llm_values.push_back(v->first);
    }
    std::vector<bool> matched(llm_values.size(), false);
    for (const auto& b : local.bindings) {
        bool found = false;
        for (std::size_t i = 0; i < llm_values.size(); ++i) {
            if (!matched[i] && llm_values[i] == b.span.value) {
                matched[i] = true;
                found = true;
                break;
            }
        }
        if (!found) report.warnings.emplace_back(CrosscheckWarning::MissedConstant, b.span.surface);
    }
    for (std::size_t i = 0; i < llm_values.size(); ++i) {
        if (!matched[i]) report.warnings.emplace_back(CrosscheckWarning::ExtraConstant, llm_values[i].to_string());
    }
    return report;
}

} // namespace mathforge
