#include "clavir/lexer.hpp"

#include <charconv>
#include <cstdlib>

namespace clavir::text {

std::string_view spelling(Tok kind) {
    switch (kind) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier";
    case Tok::String: return "string";
    case Tok::Number: return "number";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Colon: return "':'";
    case Tok::Comma: return "','";
    case Tok::Semicolon: return "';'";
    case Tok::Equals: return "'='";
    case Tok::Dot: return "'.'";
    case Tok::DotDot: return "'..'";
    case Tok::Arrow: return "'->'";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Caret: return "'^'";
    }
    return "token";
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token tok;
            tok.pos = {line_, col_};
            if (i_ >= src_.size()) {
                out.push_back(tok);
                return out;
            }
            char c = src_[i_];
            if (is_ident_start(c)) {
                std::size_t start = i_;
                while (i_ < src_.size() && (is_ident_start(src_[i_]) || is_digit(src_[i_]))) advance();
                tok.kind = Tok::Ident;
                tok.text = std::string(src_.substr(start, i_ - start));
            } else if (is_digit(c)) {
                lex_number(tok);
            } else if (c == '"') {
                lex_string(tok);
            } else {
                lex_punct(tok);
            }
            out.push_back(std::move(tok));
        }
    }

private:
    void advance() {
        if (src_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    char look(std::size_t ahead = 0) const {
        return i_ + ahead < src_.size() ? src_[i_ + ahead] : '\0';
    }

    void skip_space() {
        while (i_ < src_.size()) {
            char c = src_[i_];
            if (c == '#') {
                while (i_ < src_.size() && src_[i_] != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                break;
            }
        }
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorKind::ParseError, msg, {line_, col_});
    }

    void lex_number(Token& tok) {
        std::size_t start = i_;
        bool integral = true;
        while (is_digit(look())) advance();
        // "1..5" is a range, so a fraction needs a digit after the dot.
        if (look() == '.' && is_digit(look(1))) {
            integral = false;
            advance();
            while (is_digit(look())) advance();
        }
        if (look() == 'e' || look() == 'E') {
            std::size_t k = 1;
            if (look(1) == '+' || look(1) == '-') k = 2;
            if (is_digit(look(k))) {
                integral = false;
                for (std::size_t j = 0; j < k; ++j) advance();
                while (is_digit(look())) advance();
            }
        }
        tok.kind = Tok::Number;
        tok.text = std::string(src_.substr(start, i_ - start));
        tok.integral = integral;
        auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), tok.number);
        if (ec != std::errc() || ptr != tok.text.data() + tok.text.size()) {
            throw Error(ErrorKind::ParseError, "malformed number '" + tok.text + "'", tok.pos);
        }
    }

    void lex_string(Token& tok) {
        advance();  // opening quote
        std::string value;
        for (;;) {
            if (i_ >= src_.size() || src_[i_] == '\n') fail("unterminated string");
            char c = src_[i_];
            if (c == '"') {
                advance();
                break;
            }
            if (c == '\\') {
                advance();
                if (i_ >= src_.size()) fail("unterminated string");
                char e = src_[i_];
                switch (e) {
                case 'n': value += '\n'; break;
                case 't': value += '\t'; break;
                case '"': value += '"'; break;
                case '\\': value += '\\'; break;
                default: fail(std::string("unknown escape '\\") + e + "'");
                }
                advance();
                continue;
            }
            value += c;
            advance();
        }
        tok.kind = Tok::String;
        tok.text = std::move(value);
    }

    void lex_punct(Token& tok) {
        char c = src_[i_];
        auto single = [&](Tok kind) {
            tok.kind = kind;
            tok.text = std::string(1, c);
            advance();
        };
        switch (c) {
        case '{': single(Tok::LBrace); return;
        case '}': single(Tok::RBrace); return;
        case '(': single(Tok::LParen); return;
        case ')': single(Tok::RParen); return;
        case ':': single(Tok::Colon); return;
        case ',': single(Tok::Comma); return;
        case ';': single(Tok::Semicolon); return;
        case '=': single(Tok::Equals); return;
        case '+': single(Tok::Plus); return;
        case '*': single(Tok::Star); return;
        case '/': single(Tok::Slash); return;
        case '^': single(Tok::Caret); return;
        case '.':
            if (look(1) == '.') {
                tok.kind = Tok::DotDot;
                tok.text = "..";
                advance();
                advance();
            } else {
                single(Tok::Dot);
            }
            return;
        case '-':
            if (look(1) == '>') {
                tok.kind = Tok::Arrow;
                tok.text = "->";
                advance();
                advance();
            } else {
                single(Tok::Minus);
            }
            return;
        default:
            fail(std::string("unexpected character '") + c + "'");
        }
    }

    std::string_view src_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

std::string describe(const Token& tok) {
    switch (tok.kind) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "'" + tok.text + "'";
    case Tok::String: return "string " + quote(tok.text);
    case Tok::Number: return "number " + tok.text;
    default: return std::string(spelling(tok.kind));
    }
}

TokenStream::TokenStream(std::string_view source) : tokens_(tokenize(source)) {}

const Token& TokenStream::peek(std::size_t ahead) const {
    std::size_t k = index_ + ahead;
    return k < tokens_.size() ? tokens_[k] : tokens_.back();
}

Token TokenStream::next() {
    Token tok = peek();
    if (index_ + 1 < tokens_.size()) ++index_;
    return tok;
}

bool TokenStream::at_keyword(std::string_view word) const {
    return peek().kind == Tok::Ident && peek().text == word;
}

bool TokenStream::accept(Tok kind) {
    if (!at(kind)) return false;
    next();
    return true;
}

bool TokenStream::accept_keyword(std::string_view word) {
    if (!at_keyword(word)) return false;
    next();
    return true;
}

Token TokenStream::expect(Tok kind, std::string_view what) {
    if (!at(kind)) fail(what.empty() ? spelling(kind) : what);
    return next();
}

void TokenStream::expect_keyword(std::string_view word) {
    if (!at_keyword(word)) fail("'" + std::string(word) + "'");
    next();
}

std::string TokenStream::expect_ident(std::string_view what) { return expect(Tok::Ident, what).text; }

std::string TokenStream::expect_string(std::string_view what) { return expect(Tok::String, what).text; }

Token TokenStream::expect_signed_number(std::string_view what) {
    bool negative = accept(Tok::Minus);
    Token tok = expect(Tok::Number, what);
    if (negative) {
        tok.number = -tok.number;
        tok.text = "-" + tok.text;
    }
    return tok;
}

void TokenStream::fail(std::string_view expected) const {
    throw Error(ErrorKind::ParseError,
                "expected " + std::string(expected) + ", found " + describe(peek()), peek().pos);
}

void TokenStream::fail_at(SourcePos pos, ErrorKind kind, const std::string& message) const {
    throw Error(kind, message, pos);
}

std::int64_t to_int(const Token& tok) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), value);
    if (ec != std::errc() || ptr != tok.text.data() + tok.text.size()) {
        throw Error(ErrorKind::ParseError, "integer out of range: " + tok.text, tok.pos);
    }
    return value;
}

Scalar parse_literal(TokenStream& ts) {
    if (ts.at(Tok::String)) return ts.next().text;
    if (ts.at_keyword("true")) {
        ts.next();
        return true;
    }
    if (ts.at_keyword("false")) {
        ts.next();
        return false;
    }
    if (ts.at(Tok::Minus) || ts.at(Tok::Number)) {
        Token num = ts.expect_signed_number("literal");
        if (num.integral) return to_int(num);
        return num.number;
    }
    ts.fail("literal");
}

}  // namespace clavir::text
