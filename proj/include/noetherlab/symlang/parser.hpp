#pragma once

#include "noetherlab/symlang/expr.hpp"

#include <cctype>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nlab::sym {

/// Names the parser may resolve. Field and parameter names share one
/// namespace; declaring a name twice is rejected.
struct SymbolTable {
    std::vector<std::string> fields;
    std::vector<std::string> params;

    bool is_field(std::string_view n) const
    {
        return std::find(fields.begin(), fields.end(), n) != fields.end();
    }
    bool is_param(std::string_view n) const
    {
        return std::find(params.begin(), params.end(), n) != params.end();
    }
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int column)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"),
          line_(line),
          column_(column)
    {
    }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

namespace detail {

// Recursive-descent parser for
//   expr   := term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := '-' factor | atom ('^' ['-'] int)?
//   atom   := number ['i'] | ident | 'conj(' expr ')' | 'mean(' expr ')'
//           | 'd(' ident ',' int ')' | 'x(' int ')' | '(' expr ')'
class Parser {
public:
    Parser(std::string_view text, const SymbolTable& symbols) : text_(text), symbols_(symbols) {}

    Expr parse_all()
    {
        skip_space();
        if (at_end()) fail("empty expression");
        Expr e = parse_expr();
        skip_space();
        if (!at_end()) fail(std::string("unexpected character '") + peek() + "'");
        return e;
    }

private:
    Expr parse_expr()
    {
        std::vector<Expr> terms;
        terms.push_back(parse_term());
        for (;;) {
            skip_space();
            if (accept('+')) {
                terms.push_back(parse_term());
            } else if (accept('-')) {
                terms.push_back(negate(parse_term()));
            } else {
                break;
            }
        }
        return terms.size() == 1 ? terms.front() : Expr::sum(std::move(terms));
    }

    Expr parse_term()
    {
        std::vector<Expr> factors;
        factors.push_back(parse_factor());
        for (;;) {
            skip_space();
            if (!accept('*')) break;
            factors.push_back(parse_factor());
        }
        return factors.size() == 1 ? factors.front() : Expr::product(std::move(factors));
    }

    Expr parse_factor()
    {
        skip_space();
        if (accept('-')) return negate(parse_factor());
        Expr base = parse_atom();
        skip_space();
        if (accept('^')) {
            skip_space();
            const int line = line_, col = column_;
            bool neg = accept('-');
            long v = parse_int();
            if (v == 0) throw ParseError("power exponent must be nonzero", line, col);
            return Expr::power(base, static_cast<int>(neg ? -v : v));
        }
        return base;
    }

    Expr parse_atom()
    {
        skip_space();
        if (at_end()) fail("unexpected end of input");
        const char c = peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (accept('(')) {
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const int line = line_, col = column_;
            std::string id = parse_ident();
            skip_space();
            if (peek_is('(')) {
                if (id == "conj") {
                    advance();
                    Expr e = parse_expr();
                    expect(')');
                    return Expr::conj(e);
                }
                if (id == "mean") {
                    advance();
                    ++mean_depth_;
                    Expr e = parse_expr();
                    --mean_depth_;
                    expect(')');
                    if (e.contains_mean()) throw ParseError("mean() nested inside mean()", line, col);
                    return Expr::mean(e);
                }
                if (id == "d") {
                    advance();
                    skip_space();
                    const int fl = line_, fc = column_;
                    std::string f = parse_ident();
                    if (!symbols_.is_field(f)) throw ParseError("unknown field '" + f + "'", fl, fc);
                    skip_space();
                    expect(',');
                    skip_space();
                    long axis = parse_int();
                    expect(')');
                    return Expr::field_deriv(f, static_cast<int>(axis));
                }
                if (id == "x") {
                    advance();
                    skip_space();
                    long axis = parse_int();
                    expect(')');
                    return Expr::coord(static_cast<int>(axis));
                }
                if (!symbols_.is_field(id) && !symbols_.is_param(id))
                    throw ParseError("unknown function '" + id + "'", line, col);
            }
            if (symbols_.is_field(id)) return Expr::field(id);
            if (symbols_.is_param(id)) return Expr::param(id);
            throw ParseError("unknown identifier '" + id + "'", line, col);
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    Expr parse_number()
    {
        const int line = line_, col = column_;
        std::size_t start = pos_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) advance();
        if (!at_end() && (peek() == 'e' || peek() == 'E')) {
            std::size_t save = pos_;
            int sl = line_, sc = column_;
            advance();
            if (!at_end() && (peek() == '+' || peek() == '-')) advance();
            if (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
                while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) advance();
            } else {
                pos_ = save;
                line_ = sl;
                column_ = sc;
            }
        }
        double v = 0.0;
        auto sv = text_.substr(start, pos_ - start);
        auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
        if (res.ec != std::errc() || res.ptr != sv.data() + sv.size())
            throw ParseError("malformed number '" + std::string(sv) + "'", line, col);
        if (!at_end() && peek() == 'i' &&
            (pos_ + 1 >= text_.size() || !is_ident_char(text_[pos_ + 1]))) {
            advance();
            return Expr::constant(complex(0.0, v));
        }
        if (!at_end() && is_ident_char(peek()) && !std::isdigit(static_cast<unsigned char>(peek())))
            fail("identifier immediately after number");
        return Expr::constant(v);
    }

    long parse_int()
    {
        const int line = line_, col = column_;
        std::size_t start = pos_;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) advance();
        if (start == pos_) throw ParseError("expected integer", line, col);
        long v = 0;
        auto sv = text_.substr(start, pos_ - start);
        auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
        if (res.ec != std::errc() || v > 1'000'000) throw ParseError("integer out of range", line, col);
        return v;
    }

    std::string parse_ident()
    {
        if (at_end() || !(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_'))
            fail("expected identifier");
        std::size_t start = pos_;
        while (!at_end() && is_ident_char(peek())) advance();
        return std::string(text_.substr(start, pos_ - start));
    }

    static Expr negate(const Expr& e)
    {
        if (e.is_const()) return Expr::constant(-e.value());
        return Expr::product({Expr::constant(-1.0), e});
    }

    static bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    bool peek_is(char c) const { return !at_end() && peek() == c; }

    void advance()
    {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip_space()
    {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }

    bool accept(char c)
    {
        skip_space();
        if (peek_is(c)) {
            advance();
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            if (at_end()) fail(std::string("expected '") + c + "' before end of input");
            fail(std::string("expected '") + c + "' but found '" + peek() + "'");
        }
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, column_); }

    std::string_view text_;
    const SymbolTable& symbols_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
    int mean_depth_ = 0;
};

}  // namespace detail

inline Expr parse(std::string_view text, const SymbolTable& symbols)
{
    return detail::Parser(text, symbols).parse_all();
}

}  // namespace nlab::sym
