#include "mathforge/template.hpp"

#include "mathforge/digest.hpp"
#include "mathforge/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <regex>

namespace mathforge {

namespace {

bool significant(const Token& t) {
    return t.kind != TokenKind::Other && t.kind != TokenKind::Comment;
}

bool is_op(const Token& t, std::string_view text) {
    return t.kind == TokenKind::Op && t.text == text;
}

bool is_ident(const Token& t, std::string_view text) {
    return t.kind == TokenKind::Ident && t.text == text;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<Token> lex_or_throw(std::string_view source) {
    try {
        return tokenize_source(source);
    } catch (const Error& e) {
        throw Error(ErrorCode::LexError, e.what());
    }
}

std::string where(const Token& t) {
    return "line " + std::to_string(t.line);
}

// Next significant token index at or after i, or tokens.size().
std::size_t next_sig(const std::vector<Token>& toks, std::size_t i) {
    while (i < toks.size() && !significant(toks[i])) ++i;
    return i;
}

std::size_t prev_sig(const std::vector<Token>& toks, std::size_t i) {
    while (i-- > 0) {
        if (significant(toks[i])) return i;
    }
    return toks.size();
}

struct Header {
    std::size_t def = 0;
    std::size_t lparen = 0;
    std::size_t rparen = 0;
    std::size_t colon = 0;
    std::size_t body_begin = 0;  // the Indent token
    std::size_t body_end = 0;    // the matching Dedent (or tokens.size())
    // Token ranges [first, last) of each parameter segment between the parens.
    std::vector<std::pair<std::size_t, std::size_t>> segments;
};

// Locates `def solution(...)` at indentation level 0.
std::optional<Header> find_header(const std::vector<Token>& toks) {
    int level = 0;
    bool stmt_start = true;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const Token& t = toks[i];
        if (!significant(t)) continue;
        if (t.kind == TokenKind::Indent) {
            ++level;
            continue;
        }
        if (t.kind == TokenKind::Dedent) {
            --level;
            continue;
        }
        if (t.kind == TokenKind::Newline) {
            stmt_start = true;
            continue;
        }
        if (stmt_start && level == 0 && is_ident(t, "def")) {
            std::size_t name = next_sig(toks, i + 1);
            if (name < toks.size() && is_ident(toks[name], kSolutionFunction)) {
                Header h;
                h.def = i;
                h.lparen = next_sig(toks, name + 1);
                if (h.lparen >= toks.size() || !is_op(toks[h.lparen], "(")) return std::nullopt;
                int depth = 0;
                std::size_t seg_begin = h.lparen + 1;
                for (std::size_t j = h.lparen; j < toks.size(); ++j) {
                    if (toks[j].kind != TokenKind::Op) continue;
                    if (toks[j].text == "(" || toks[j].text == "[" || toks[j].text == "{") ++depth;
                    if (toks[j].text == ")" || toks[j].text == "]" || toks[j].text == "}") {
                        if (--depth == 0) {
                            h.rparen = j;
                            h.segments.emplace_back(seg_begin, j);
                            break;
                        }
                    }
                    if (depth == 1 && toks[j].text == ",") {
                        h.segments.emplace_back(seg_begin, j);
                        seg_begin = j + 1;
                    }
                }
                if (h.rparen == 0) return std::nullopt;
                // Drop a trailing empty segment ("a, b,").
                if (!h.segments.empty()) {
                    auto [b, e] = h.segments.back();
                    if (next_sig(toks, b) >= e) h.segments.pop_back();
                }
                std::size_t j = next_sig(toks, h.rparen + 1);
                if (j < toks.size() && is_op(toks[j], "->")) {
                    while (j < toks.size() && !is_op(toks[j], ":") && toks[j].kind != TokenKind::Newline) ++j;
                }
                if (j >= toks.size() || !is_op(toks[j], ":")) return std::nullopt;
                h.colon = j;
                std::size_t nl = next_sig(toks, j + 1);
                if (nl >= toks.size() || toks[nl].kind != TokenKind::Newline) return std::nullopt;
                std::size_t ind = next_sig(toks, nl + 1);
                if (ind >= toks.size() || toks[ind].kind != TokenKind::Indent) return std::nullopt;
                h.body_begin = ind;
                int lvl = 0;
                h.body_end = toks.size();
                for (std::size_t k = ind; k < toks.size(); ++k) {
                    if (toks[k].kind == TokenKind::Indent) ++lvl;
                    if (toks[k].kind == TokenKind::Dedent && --lvl == 0) {
                        h.body_end = k;
                        break;
                    }
                }
                return h;
            }
        }
        stmt_start = false;
    }
    return std::nullopt;
}

struct DocParts {
    std::string prefix;  // string prefix letters + opening quotes
    std::string inner;
    std::string suffix;  // closing quotes
};

DocParts split_docstring(const std::string& text) {
    std::size_t q = text.find_first_of("\"'");
    std::size_t qlen = text.compare(q, 3, std::string(3, text[q])) == 0 && text.size() >= q + 6 ? 3 : 1;
    DocParts d;
    d.prefix = text.substr(0, q + qlen);
    d.suffix = text.substr(text.size() - qlen);
    d.inner = text.substr(q + qlen, text.size() - qlen - (q + qlen));
    return d;
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    std::size_t b = 0;
    while (true) {
        auto e = s.find('\n', b);
        if (e == std::string::npos) {
            out.push_back(s.substr(b));
            break;
        }
        out.push_back(s.substr(b, e - b));
        b = e + 1;
    }
    return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out.push_back('\n');
        out += lines[i];
    }
    return out;
}

// ":param n1: ..." / ":param int n1: ..." -> "n1"
std::optional<std::string> param_field_name(std::string_view trimmed, std::string_view field) {
    std::string head = ":" + std::string(field) + " ";
    if (trimmed.substr(0, head.size()) != head) return std::nullopt;
    auto colon = trimmed.find(':', head.size());
    if (colon == std::string_view::npos) return std::nullopt;
    std::string words = trim(trimmed.substr(head.size(), colon - head.size()));
    auto sp = words.find_last_of(" \t");
    return sp == std::string::npos ? words : words.substr(sp + 1);
}

std::size_t indent_width(std::string_view line) {
    std::size_t n = 0;
    while (n < line.size() && (line[n] == ' ' || line[n] == '\t')) ++n;
    return n;
}

void check_imports(const std::vector<Token>& toks, std::size_t first, const TemplateOptions& options,
                   std::vector<std::string>& imports) {
    // first is the index of "import" or "from".
    bool from = toks[first].text == "from";
    std::size_t i = next_sig(toks, first + 1);
    auto take_root = [&](std::size_t at) {
        if (at >= toks.size() || toks[at].kind != TokenKind::Ident) {
            throw Error(ErrorCode::NotFunctionForm, "malformed import on " + where(toks[first]));
        }
        const std::string& root = toks[at].text;
        if (!options.allowed_imports.contains(root)) {
            throw Error(ErrorCode::DeniedIdentifier, "import of '" + root + "' on " + where(toks[at]));
        }
        if (std::find(imports.begin(), imports.end(), root) == imports.end()) imports.push_back(root);
    };
    if (from) {
        take_root(i);
        return;
    }
    bool expect_module = true;
    for (; i < toks.size() && toks[i].kind != TokenKind::Newline; i = next_sig(toks, i + 1)) {
        if (expect_module) {
            take_root(i);
            expect_module = false;
        } else if (is_op(toks[i], ",")) {
            expect_module = true;
        }
    }
}

// Assignment targets, loop variables, and other rebinding sites in the body.
void check_rebinding(const std::vector<Token>& toks, const Header& h, const std::vector<std::string>& params) {
    auto is_param = [&](const Token& t) {
        return t.kind == TokenKind::Ident && std::find(params.begin(), params.end(), t.text) != params.end();
    };
    auto fail = [&](const Token& t) {
        throw Error(ErrorCode::ParameterRebound, "'" + t.text + "' reassigned on " + where(t));
    };
    std::vector<std::size_t> stmt;
    auto flush = [&] {
        if (stmt.empty()) return;
        int depth = 0;
        std::optional<std::size_t> last_assign;
        for (std::size_t k = 0; k < stmt.size(); ++k) {
            const Token& t = toks[stmt[k]];
            if (t.kind == TokenKind::Op) {
                if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
                if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
                static const std::set<std::string> kAssignOps{"=",  "+=", "-=", "*=", "/=",  "//=", "%=",
                                                              "**=", "&=", "|=", "^=", ">>=", "<<=", "@="};
                if (depth == 0 && kAssignOps.contains(t.text)) last_assign = k;
                if (t.text == ":=" && k > 0 && is_param(toks[stmt[k - 1]])) fail(toks[stmt[k - 1]]);
            }
        }
        if (last_assign) {
            int d = 0;
            for (std::size_t k = 0; k < *last_assign; ++k) {
                const Token& t = toks[stmt[k]];
                if (t.kind == TokenKind::Op) {
                    if (t.text == "(" || t.text == "[" || t.text == "{") ++d;
                    if (t.text == ")" || t.text == "]" || t.text == "}") --d;
                }
                bool attribute = k > 0 && is_op(toks[stmt[k - 1]], ".");
                bool subscript_or_call = k + 1 < stmt.size() && (is_op(toks[stmt[k + 1]], "[") || is_op(toks[stmt[k + 1]], "("));
                if (d == 0 && is_param(t) && !attribute && !subscript_or_call) fail(t);
            }
        }
        for (std::size_t k = 0; k < stmt.size(); ++k) {
            const Token& t = toks[stmt[k]];
            if (t.kind != TokenKind::Ident) continue;
            if (t.text == "for") {
                for (std::size_t m = k + 1; m < stmt.size() && !is_ident(toks[stmt[m]], "in"); ++m) {
                    if (is_param(toks[stmt[m]])) fail(toks[stmt[m]]);
                }
            } else if (t.text == "as" || t.text == "global" || t.text == "nonlocal" || t.text == "del" ||
                       t.text == "def" || t.text == "class") {
                if (k + 1 < stmt.size() && is_param(toks[stmt[k + 1]])) fail(toks[stmt[k + 1]]);
                if (t.text == "def") {
                    // inner function parameters shadow the template's
                    int d = 0;
                    bool seg_start = false;
                    for (std::size_t m = k + 2; m < stmt.size(); ++m) {
                        const Token& u = toks[stmt[m]];
                        if (is_op(u, "(")) {
                            if (++d == 1) seg_start = true;
                            continue;
                        }
                        if (is_op(u, ")") && --d == 0) break;
                        if (d == 1 && is_op(u, ",")) {
                            seg_start = true;
                            continue;
                        }
                        if (d == 1 && seg_start && is_param(u)) fail(u);
                        seg_start = false;
                    }
                }
            } else if (t.text == "lambda") {
                for (std::size_t m = k + 1; m < stmt.size() && !is_op(toks[stmt[m]], ":"); ++m) {
                    if (is_param(toks[stmt[m]])) fail(toks[stmt[m]]);
                }
            }
        }
        stmt.clear();
    };
    for (std::size_t i = h.body_begin; i < h.body_end; ++i) {
        const Token& t = toks[i];
        if (!significant(t)) continue;
        if (t.kind == TokenKind::Newline || t.kind == TokenKind::Indent || t.kind == TokenKind::Dedent) {
            flush();
            continue;
        }
        // A block header's ':' ends a compound-statement head ("for x in y: z = 1").
        stmt.push_back(i);
    }
    flush();
}

bool mentions(std::string_view text, const std::regex& re) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return std::regex_search(s, re);
}

std::string wrap_if_needed(std::string literal) {
    if (!literal.empty() && literal.front() == '-') return "(" + literal + ")";
    return literal;
}

void append_significant(std::vector<std::pair<TokenKind, std::string>>& out, std::string_view text) {
    for (const auto& t : tokenize_source(text)) {
        if (t.kind != TokenKind::Other && t.kind != TokenKind::Newline && t.kind != TokenKind::Indent &&
            t.kind != TokenKind::Dedent) {
            out.emplace_back(t.kind, t.text);
        }
    }
}

} // namespace

std::string UnifiedProgram::digest() const {
    return sha256_hex(source);
}

UnifiedProgram validate_program(std::string_view source, const TemplateOptions& options) {
    if (trim(source).empty()) throw Error(ErrorCode::NotFunctionForm, "empty program");
    auto toks = lex_or_throw(source);

    UnifiedProgram prog;
    prog.source = std::string(source);

    // Top level: allow-listed imports and exactly one def solution.
    int level = 0;
    bool stmt_start = true;
    int defs = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const Token& t = toks[i];
        if (!significant(t)) continue;
        if (t.kind == TokenKind::Indent) {
            ++level;
            continue;
        }
        if (t.kind == TokenKind::Dedent) {
            --level;
            continue;
        }
        if (t.kind == TokenKind::Newline) {
            stmt_start = true;
            continue;
        }
        if (stmt_start) {
            if (t.kind == TokenKind::Ident && (t.text == "import" || t.text == "from")) {
                check_imports(toks, i, options, prog.imports);
            } else if (level == 0) {
                if (!is_ident(t, "def")) {
                    throw Error(ErrorCode::NotFunctionForm, "top-level statement '" + t.text + "' on " + where(t));
                }
                if (++defs > 1) throw Error(ErrorCode::NotFunctionForm, "more than one top-level function");
                std::size_t name = next_sig(toks, i + 1);
                if (name >= toks.size() || !is_ident(toks[name], kSolutionFunction)) {
                    throw Error(ErrorCode::NotFunctionForm, "the function must be named 'solution'");
                }
            }
        }
        stmt_start = false;
    }
    if (defs == 0) throw Error(ErrorCode::NotFunctionForm, "no 'def solution(...)' found");

    auto header = find_header(toks);
    if (!header) throw Error(ErrorCode::NotFunctionForm, "malformed 'def solution' header or missing indented body");
    const Header& h = *header;

    for (auto [b, e] : h.segments) {
        std::size_t first = next_sig(toks, b);
        if (first >= e || toks[first].kind != TokenKind::Ident || is_python_keyword(toks[first].text)) {
            throw Error(ErrorCode::NotFunctionForm, "unsupported parameter syntax on " + where(toks[h.lparen]));
        }
        for (std::size_t j = first; j < e; ++j) {
            if (is_op(toks[j], "=")) {
                throw Error(ErrorCode::NotFunctionForm, "parameter defaults are not allowed: " + toks[first].text);
            }
        }
        if (std::find(prog.parameters.begin(), prog.parameters.end(), toks[first].text) != prog.parameters.end()) {
            throw Error(ErrorCode::NotFunctionForm, "duplicate parameter " + toks[first].text);
        }
        prog.parameters.push_back(toks[first].text);
    }
    if (prog.parameters.empty()) throw Error(ErrorCode::NotFunctionForm, "solution() takes no parameters");

    for (const auto& t : toks) {
        if (t.kind == TokenKind::Ident && options.denied_identifiers.contains(t.text)) {
            throw Error(ErrorCode::DeniedIdentifier, "'" + t.text + "' on " + where(t));
        }
    }

    // Docstring: first statement of the body.
    std::size_t doc = next_sig(toks, h.body_begin + 1);
    auto docs = docstring_token_indices(toks);
    if (doc >= h.body_end || toks[doc].kind != TokenKind::String ||
        std::find(docs.begin(), docs.end(), doc) == docs.end()) {
        throw Error(ErrorCode::DocstringInvalid, "solution() has no docstring");
    }
    prog.docstring = toks[doc].text;
    auto parts = split_docstring(prog.docstring);
    std::vector<std::string> documented;
    int returns = 0;
    bool purpose = false;
    std::string return_text;
    for (const auto& raw_line : split_lines(parts.inner)) {
        std::string line = trim(raw_line);
        if (line.empty()) continue;
        if (auto name = param_field_name(line, "param")) {
            documented.push_back(*name);
        } else if (line.rfind(":return:", 0) == 0 || line.rfind(":returns:", 0) == 0) {
            ++returns;
            return_text = line;
        } else if (line.front() != ':' && documented.empty() && returns == 0) {
            purpose = true;
        }
    }
    for (const auto& p : prog.parameters) {
        if (std::find(documented.begin(), documented.end(), p) == documented.end()) {
            throw Error(ErrorCode::DocstringParamMissing, p);
        }
    }
    if (documented != prog.parameters) {
        throw Error(ErrorCode::DocstringInvalid, ":param lines must match the parameters one-to-one, in order");
    }
    if (returns != 1) throw Error(ErrorCode::DocstringInvalid, "expected exactly one :return: line");
    if (!purpose) throw Error(ErrorCode::DocstringInvalid, "docstring has no purpose line");

    for (const auto& p : prog.parameters) {
        bool used = false;
        for (std::size_t i = h.body_begin; i < h.body_end && !used; ++i) used = is_ident(toks[i], p);
        if (!used) throw Error(ErrorCode::UnusedParameter, p);
    }
    check_rebinding(toks, h, prog.parameters);

    static const std::regex kInteger(R"(\b(int|integer|integers|whole number)\b)");
    static const std::regex kNonNegative(R"(non-?negative|\bpositive\b)");
    prog.returns_integer = mentions(return_text, kInteger);
    prog.returns_nonnegative = mentions(return_text, kNonNegative);
    return prog;
}

std::size_t SelectorMask::count() const {
    return static_cast<std::size_t>(std::popcount(bits_));
}

std::set<std::string> SelectorMask::names(const std::vector<std::string>& parameters) const {
    std::set<std::string> out;
    for (std::size_t i = 0; i < parameters.size() && i < 64; ++i) {
        if (contains(i)) out.insert(parameters[i]);
    }
    return out;
}

std::vector<SelectorMask> enumerate_selectors(std::size_t k, std::size_t cap) {
    if (k < 1 || k > cap || k > 63) {
        throw Error(ErrorCode::KOutOfRange, "k=" + std::to_string(k) + " (cap " + std::to_string(cap) + ")");
    }
    std::vector<SelectorMask> out;
    const std::uint64_t n = (1ULL << k);
    out.reserve(n - 1);
    for (std::uint64_t m = 1; m < n; ++m) out.emplace_back(m);
    return out;
}

std::string format_number(const Number& value, NumberKind kind) {
    switch (kind) {
    case NumberKind::Int:
        if (!value.is_integer()) {
            throw Error(ErrorCode::FormatMismatch, value.to_string() + " is not an integer");
        }
        if (value.is_exact()) return std::to_string(value.numerator());
        if (std::fabs(value.to_double()) < 9e15) return std::to_string(std::llround(value.to_double()));
        return shortest_decimal(value.to_double());
    case NumberKind::Float:
        if (value.is_exact() && value.is_terminating_decimal()) return value.to_string();
        return shortest_decimal(value.to_double());
    case NumberKind::Percent: return value.to_percent_fraction_string();
    case NumberKind::Fraction:
        if (!value.is_exact()) throw Error(ErrorCode::FormatMismatch, value.to_string() + " is not a fraction");
        return "(" + std::to_string(value.numerator()) + "/" + std::to_string(value.denominator()) + ")";
    }
    return value.to_string();
}

NumberKind parameter_kind(const MaskedQuestion& masked, const std::string& name, const Number& value) {
    if (const Binding* b = masked.find(name)) return b->span.kind;
    return value.is_integer() && value.is_exact() ? NumberKind::Int : NumberKind::Float;
}

InstantiatedSample instantiate(const UnifiedProgram& program, const MaskedQuestion& masked,
                               const std::map<std::string, Number>& assignment, const std::set<std::string>& selector,
                               std::string_view problem_id) {
    if (selector.empty()) throw Error(ErrorCode::SelectorNotSubset, "empty selector");
    for (const auto& name : selector) {
        if (std::find(program.parameters.begin(), program.parameters.end(), name) == program.parameters.end()) {
            throw Error(ErrorCode::SelectorNotSubset, name + " is not a parameter");
        }
        if (!assignment.contains(name)) throw Error(ErrorCode::MissingValue, name);
    }
    std::map<std::string, std::string> literals;
    for (const auto& name : selector) {
        const Number& v = assignment.at(name);
        literals[name] = wrap_if_needed(format_number(v, parameter_kind(masked, name, v)));
    }

    auto toks = lex_or_throw(program.source);
    auto header = find_header(toks);
    if (!header) throw Error(ErrorCode::NotFunctionForm, "template has no 'def solution' header");
    const Header& h = *header;
    std::size_t doc = next_sig(toks, h.body_begin + 1);

    std::string out;
    std::vector<std::pair<TokenKind, std::string>> expected;
    auto emit_token = [&](const Token& t) {
        out += t.text;
        if (t.kind != TokenKind::Other && t.kind != TokenKind::Newline && t.kind != TokenKind::Indent &&
            t.kind != TokenKind::Dedent) {
            expected.emplace_back(t.kind, t.text);
        }
    };
    for (std::size_t i = 0; i <= h.lparen; ++i) emit_token(toks[i]);

    std::vector<std::string> kept;
    for (std::size_t s = 0; s < h.segments.size(); ++s) {
        if (selector.contains(program.parameters[s])) continue;
        std::string seg;
        for (std::size_t j = h.segments[s].first; j < h.segments[s].second; ++j) seg += toks[j].text;
        kept.push_back(trim(seg));
    }
    std::string params;
    for (std::size_t s = 0; s < kept.size(); ++s) params += (s ? ", " : "") + kept[s];
    out += params;
    append_significant(expected, params);

    for (std::size_t i = h.rparen; i < toks.size(); ++i) {
        const Token& t = toks[i];
        if (i == doc && t.kind == TokenKind::String) {
            auto parts = split_docstring(t.text);
            auto lines = split_lines(parts.inner);
            std::vector<std::string> kept_lines;
            std::optional<std::size_t> dropping_indent;
            for (const auto& line : lines) {
                std::string tl = trim(line);
                if (dropping_indent) {
                    bool continuation = !tl.empty() && indent_width(line) > *dropping_indent && tl.front() != ':';
                    if (continuation) continue;
                    dropping_indent.reset();
                }
                auto pname = param_field_name(tl, "param");
                if (!pname) pname = param_field_name(tl, "type");
                if (pname && selector.contains(*pname)) {
                    dropping_indent = indent_width(line);
                    continue;
                }
                kept_lines.push_back(line);
            }
            Token edited = t;
            edited.text = parts.prefix + join_lines(kept_lines) + parts.suffix;
            emit_token(edited);
            continue;
        }
        if (i > h.colon && t.kind == TokenKind::Ident && selector.contains(t.text)) {
            std::size_t p = prev_sig(toks, i);
            bool attribute = p < toks.size() && is_op(toks[p], ".");
            if (!attribute) {
                std::string lit = literals.at(t.text);
                std::size_t n = next_sig(toks, i + 1);
                if (n < toks.size() && is_op(toks[n], ".") && lit.front() != '(') lit = "(" + lit + ")";
                out += lit;
                append_significant(expected, lit);
                continue;
            }
        }
        emit_token(t);
    }

    bool full = selector.size() == program.parameters.size();
    if (full) {
        if (!out.empty() && out.back() != '\n') out.push_back('\n');
        std::string driver = "\nprint(" + std::string(kSolutionFunction) + "())\n";
        out += driver;
        append_significant(expected, driver);
    }

    std::vector<std::pair<TokenKind, std::string>> actual;
    try {
        append_significant(actual, out);
    } catch (const Error& e) {
        throw Error(ErrorCode::SubstitutionCollision, e.what());
    }
    if (actual != expected) {
        throw Error(ErrorCode::SubstitutionCollision, "substituted literals merged with neighbouring tokens");
    }

    InstantiatedSample sample;
    sample.program = std::move(out);
    sample.full = full;
    Assignment question_assignment;
    for (const auto& b : masked.bindings) {
        if (selector.contains(b.name)) {
            question_assignment[b.name] = assignment.at(b.name);
        } else {
            question_assignment[b.name] = Keep{};
        }
    }
    sample.question = render_question(masked, question_assignment);
    sample.provenance.problem_id = std::string(problem_id);
    sample.provenance.template_digest = program.digest();
    for (const auto& p : program.parameters) {
        if (selector.contains(p)) {
            sample.provenance.selector.push_back(p);
            sample.provenance.assignment[p] = assignment.at(p).to_string();
        }
    }
    return sample;
}

std::string strip_docstring(std::string_view source) {
    std::vector<Token> toks;
    try {
        toks = tokenize_source(source);
    } catch (const Error&) {
        return std::string(source);
    }
    auto docs = docstring_token_indices(toks);
    if (docs.empty()) return std::string(source);
    std::vector<bool> drop(toks.size(), false);
    std::vector<std::optional<std::string>> replace(toks.size());
    for (std::size_t d : docs) {
        std::size_t after = next_sig(toks, d + 1);
        std::size_t after_next = after < toks.size() ? next_sig(toks, after + 1) : toks.size();
        bool only_statement = after < toks.size() && toks[after].kind == TokenKind::Newline &&
                              (after_next >= toks.size() || toks[after_next].kind == TokenKind::Dedent) &&
                              d > 0 && toks[prev_sig(toks, d)].kind == TokenKind::Indent;
        if (only_statement) {
            replace[d] = "pass";
            continue;
        }
        bool trailing_comment = false;
        for (std::size_t j = d + 1; j < toks.size() && toks[j].kind != TokenKind::Newline; ++j) {
            if (toks[j].kind == TokenKind::Comment) trailing_comment = true;
        }
        drop[d] = true;
        if (trailing_comment) {
            for (std::size_t j = d + 1; j < toks.size() && toks[j].kind == TokenKind::Other; ++j) drop[j] = true;
            continue;
        }
        // Whole line: leading whitespace, the literal, trailing blanks, newline.
        for (std::size_t j = d; j-- > 0;) {
            if (toks[j].kind == TokenKind::Indent || toks[j].kind == TokenKind::Dedent) continue;
            if (toks[j].kind == TokenKind::Other && toks[j].text.find('\n') == std::string::npos) {
                drop[j] = true;
                continue;
            }
            break;
        }
        for (std::size_t j = d + 1; j < toks.size(); ++j) {
            drop[j] = true;
            if (toks[j].kind == TokenKind::Newline) break;
        }
    }
    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (replace[i]) {
            out += *replace[i];
        } else if (!drop[i]) {
            out += toks[i].text;
        }
    }
    return out;
}

UnifiedProgram strip_docstring(const UnifiedProgram& program) {
    UnifiedProgram out = program;
    out.source = strip_docstring(program.source);
    out.docstring.clear();
    return out;
}

InstantiatedSample strip_docstring(const InstantiatedSample& sample) {
    InstantiatedSample out = sample;
    out.program = strip_docstring(sample.program);
    return out;
}

} // namespace mathforge
