#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mathforge {

enum class TokenKind { Ident, Number, String, Comment, Op, Newline, Indent, Dedent, Other };

std::string_view token_kind_name(TokenKind kind);

/// One lexeme of the Python subset templates are written in. The lexer is
/// lossless: concatenating every token's text reproduces the source byte for
/// byte. Indent/Dedent carry empty text; leading whitespace is an Other token.
/// Newline marks the end of a logical line; newlines inside brackets and on
/// blank or comment-only lines are Other.
struct Token {
    TokenKind kind = TokenKind::Other;
    std::string text;
    int line = 1;
    int col = 0;

    friend bool operator==(const Token&, const Token&) = default;
};

/// Throws Error(UnterminatedString) or Error(BadIndent).
std::vector<Token> tokenize_source(std::string_view source);

std::string reconstruct(const std::vector<Token>& tokens);

/// True for string literals in docstring position: the first statement of a
/// module or of a def/class body.
std::vector<std::size_t> docstring_token_indices(const std::vector<Token>& tokens);

bool is_python_keyword(std::string_view word);

} // namespace mathforge
