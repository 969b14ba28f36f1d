#include "mathforge/lexer.hpp"

#include "mathforge/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace mathforge {

namespace {

bool ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

bool ident_char(unsigned char c) {
    return ident_start(c) || (c >= '0' && c <= '9');
}

bool digit(char c) {
    return c >= '0' && c <= '9';
}

// Longest first.
constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=",
    "%=",  "&=",  "|=",  "^=",  "@=",  ":=", "<<", ">>", "(",  ")",  "[",  "]",  "{",  "}",  ",",  ":",
    ";",   ".",   "+",   "-",   "*",   "/",  "%",  "<",  ">",  "=",  "&",  "|",  "^",  "~",  "@",
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        indents_.push_back(0);
        while (pos_ < src_.size()) {
            if (at_line_start_ && depth_ == 0) {
                handle_line_start();
                if (pos_ >= src_.size()) break;
            }
            lex_one();
        }
        while (indents_.size() > 1) {
            indents_.pop_back();
            push(TokenKind::Dedent, pos_, pos_);
        }
        return std::move(tokens_);
    }

private:
    void push(TokenKind kind, std::size_t begin, std::size_t end) {
        tokens_.push_back({kind, std::string(src_.substr(begin, end - begin)), line_, static_cast<int>(begin - line_begin_)});
    }

    void advance_lines(std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (src_[i] == '\n') {
                ++line_;
                line_begin_ = i + 1;
            }
        }
    }

    void handle_line_start() {
        at_line_start_ = false;
        std::size_t i = pos_;
        while (i < src_.size() && (src_[i] == ' ' || src_[i] == '\t' || src_[i] == '\f')) ++i;
        bool blank = i >= src_.size() || src_[i] == '\n' || src_[i] == '\r' || src_[i] == '#';
        if (i > pos_) {
            push(TokenKind::Other, pos_, i);
        }
        std::size_t width = 0;
        for (std::size_t j = pos_; j < i; ++j) width = src_[j] == '\t' ? (width / 8 + 1) * 8 : width + 1;
        pos_ = i;
        if (blank) {
            blank_line_ = true;
            return;
        }
        blank_line_ = false;
        if (width > indents_.back()) {
            indents_.push_back(width);
            push(TokenKind::Indent, pos_, pos_);
        } else {
            while (width < indents_.back()) {
                indents_.pop_back();
                push(TokenKind::Dedent, pos_, pos_);
            }
            if (width != indents_.back()) {
                throw Error(ErrorCode::BadIndent, "line " + std::to_string(line_) + ": dedent to unknown level");
            }
        }
    }

    void lex_one() {
        const char c = src_[pos_];
        const std::size_t begin = pos_;
        if (c == '\n' || (c == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n')) {
            pos_ += c == '\r' ? 2 : 1;
            bool logical = depth_ == 0 && !blank_line_ && !tokens_.empty() && last_significant_on_line();
            push(logical ? TokenKind::Newline : TokenKind::Other, begin, pos_);
            advance_lines(begin, pos_);
            at_line_start_ = true;
            return;
        }
        if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
            while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\f' ||
                                          (src_[pos_] == '\r' && !(pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n')))) {
                ++pos_;
            }
            push(TokenKind::Other, begin, pos_);
            return;
        }
        if (c == '\\' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
            pos_ += src_[pos_ + 1] == '\r' ? 3 : 2;
            pos_ = std::min(pos_, src_.size());
            push(TokenKind::Other, begin, pos_);
            advance_lines(begin, pos_);
            return;
        }
        if (c == '#') {
            while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
            push(TokenKind::Comment, begin, pos_);
            return;
        }
        if (std::size_t quote = string_start(pos_); quote != std::string_view::npos) {
            lex_string(begin, quote);
            return;
        }
        if (ident_start(static_cast<unsigned char>(c))) {
            while (pos_ < src_.size() && ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            push(TokenKind::Ident, begin, pos_);
            return;
        }
        if (digit(c) || (c == '.' && pos_ + 1 < src_.size() && digit(src_[pos_ + 1]))) {
            lex_number();
            push(TokenKind::Number, begin, pos_);
            return;
        }
        for (auto op : kOperators) {
            if (src_.compare(pos_, op.size(), op) == 0) {
                pos_ += op.size();
                if (op == "(" || op == "[" || op == "{") ++depth_;
                if ((op == ")" || op == "]" || op == "}") && depth_ > 0) --depth_;
                push(TokenKind::Op, begin, pos_);
                return;
            }
        }
        // Unknown byte (e.g. '$', '?', '!'): keep it so reconstruction stays exact.
        ++pos_;
        push(TokenKind::Other, begin, pos_);
    }

    bool last_significant_on_line() const {
        for (auto it = tokens_.rbegin(); it != tokens_.rend(); ++it) {
            switch (it->kind) {
            case TokenKind::Other:
            case TokenKind::Comment:
                if (it->text.find('\n') != std::string::npos) return false;
                continue;
            case TokenKind::Newline: return false;
            default: return true;
            }
        }
        return false;
    }

    // Position of the opening quote if a string literal (with optional
    // prefix) starts at i.
    std::size_t string_start(std::size_t i) const {
        std::size_t j = i;
        while (j < src_.size() && j - i < 2 && std::string_view("rRbBuUfF").find(src_[j]) != std::string_view::npos) ++j;
        if (j < src_.size() && (src_[j] == '"' || src_[j] == '\'')) {
            if (j == i) return j;
            // A prefix must not be the tail of a longer identifier.
            if (i > 0 && ident_char(static_cast<unsigned char>(src_[i - 1]))) return std::string_view::npos;
            return j;
        }
        return std::string_view::npos;
    }

    void lex_string(std::size_t begin, std::size_t quote_pos) {
        const char q = src_[quote_pos];
        bool triple = src_.compare(quote_pos, 3, std::string(3, q)) == 0;
        pos_ = quote_pos + (triple ? 3 : 1);
        const int start_line = line_;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\') {
                pos_ += 2;
                continue;
            }
            if (triple) {
                if (src_.compare(pos_, 3, std::string(3, q)) == 0) {
                    pos_ += 3;
                    push_string(begin);
                    return;
                }
            } else {
                if (c == q) {
                    ++pos_;
                    push_string(begin);
                    return;
                }
                if (c == '\n') break;
            }
            ++pos_;
        }
        throw Error(ErrorCode::UnterminatedString, "string starting on line " + std::to_string(start_line));
    }

    void push_string(std::size_t begin) {
        pos_ = std::min(pos_, src_.size());
        push(TokenKind::String, begin, pos_);
        advance_lines(begin, pos_);
    }

    void lex_number() {
        if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
            std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
            pos_ += 2;
            while (pos_ < src_.size() && (std::isxdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
            return;
        }
        auto digits = [&] {
            while (pos_ < src_.size() && (digit(src_[pos_]) || src_[pos_] == '_')) ++pos_;
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && digit(src_[pos_])) {
                digits();
            } else {
                pos_ = save;
            }
        }
        if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) ++pos_;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::size_t line_begin_ = 0;
    int depth_ = 0;
    bool at_line_start_ = true;
    bool blank_line_ = false;
    std::vector<std::size_t> indents_;
    std::vector<Token> tokens_;
};

} // namespace

std::string_view token_kind_name(TokenKind kind) {
    switch (kind) {
    case TokenKind::Ident: return "IDENT";
    case TokenKind::Number: return "NUMBER";
    case TokenKind::String: return "STRING";
    case TokenKind::Comment: return "COMMENT";
    case TokenKind::Op: return "OP";
    case TokenKind::Newline: return "NEWLINE";
    case TokenKind::Indent: return "INDENT";
    case TokenKind::Dedent: return "DEDENT";
    case TokenKind::Other: return "OTHER";
    }
    return "OTHER";
}

std::vector<Token> tokenize_source(std::string_view source) {
    return Lexer(source).run();
}

std::string reconstruct(const std::vector<Token>& tokens) {
    std::string out;
    for (const auto& t : tokens) out += t.text;
    return out;
}

std::vector<std::size_t> docstring_token_indices(const std::vector<Token>& tokens) {
    auto significant = [&](std::size_t i) {
        auto k = tokens[i].kind;
        return k != TokenKind::Other && k != TokenKind::Comment;
    };
    std::vector<std::size_t> out;
    // A block opener is "def"/"class" at statement start; the first statement
    // after its ':' NEWLINE INDENT is the body's first statement.
    bool expect_doc = true;  // module docstring position
    bool pending_block = false;
    bool statement_start = true;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!significant(i)) continue;
        const Token& t = tokens[i];
        if (t.kind == TokenKind::Indent) {
            expect_doc = pending_block;
            pending_block = false;
            statement_start = true;
            continue;
        }
        if (t.kind == TokenKind::Dedent) {
            statement_start = true;
            continue;
        }
        if (t.kind == TokenKind::Newline) {
            statement_start = true;
            continue;
        }
        if (statement_start) {
            if (expect_doc && t.kind == TokenKind::String) {
                // Only a bare string statement: next significant token ends the line.
                std::size_t j = i + 1;
                while (j < tokens.size() && !significant(j)) ++j;
                if (j == tokens.size() || tokens[j].kind == TokenKind::Newline || tokens[j].kind == TokenKind::Dedent) {
                    out.push_back(i);
                }
            }
            expect_doc = false;
            pending_block = t.kind == TokenKind::Ident && (t.text == "def" || t.text == "class");
            if (t.kind == TokenKind::Ident && t.text == "async") pending_block = false;
        }
        statement_start = false;
    }
    return out;
}

bool is_python_keyword(std::string_view word) {
    static constexpr std::array<std::string_view, 35> kKeywords = {
        "False", "None",   "True",    "and",      "as",     "assert", "async", "await", "break",
        "class", "continue", "def",   "del",      "elif",   "else",   "except", "finally", "for",
        "from",  "global", "if",      "import",   "in",     "is",     "lambda", "nonlocal", "not",
        "or",    "pass",   "raise",   "return",   "try",    "while",  "with",  "yield",
    };
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

} // namespace mathforge
