#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "clavir/common.hpp"

namespace clavir::text {

enum class Tok {
    End,
    Ident,
    String,
    Number,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Semicolon,
    Equals,
    Dot,
    DotDot,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
};

std::string_view spelling(Tok kind);

struct Token {
    Tok kind = Tok::End;
    std::string text;  // identifier name, unescaped string, or number spelling
    double number = 0.0;
    bool integral = false;  // number spelled without fraction or exponent
    SourcePos pos;
};

/// Tokenizes the whole input up front. `#` starts a comment to end of line.
/// Throws Error(ParseError) on malformed input.
std::vector<Token> tokenize(std::string_view source);

/// Cursor over a token vector with the usual recursive-descent helpers.
class TokenStream {
public:
    explicit TokenStream(std::string_view source);

    const Token& peek(std::size_t ahead = 0) const;
    Token next();
    bool at(Tok kind) const { return peek().kind == kind; }
    bool at_keyword(std::string_view word) const;
    bool accept(Tok kind);
    bool accept_keyword(std::string_view word);

    Token expect(Tok kind, std::string_view what = {});
    void expect_keyword(std::string_view word);
    std::string expect_ident(std::string_view what = "identifier");
    std::string expect_string(std::string_view what = "string");
    /// NUMBER with an optional leading '-'.
    Token expect_signed_number(std::string_view what = "number");

    [[noreturn]] void fail(std::string_view expected) const;
    [[noreturn]] void fail_at(SourcePos pos, ErrorKind kind, const std::string& message) const;

private:
    std::vector<Token> tokens_;
    std::size_t index_ = 0;
};

std::string describe(const Token& tok);

/// Parses a literal value: optional '-' NUMBER, STRING, `true`, `false`.
Scalar parse_literal(TokenStream& ts);

std::int64_t to_int(const Token& tok);

}  // namespace clavir::text
