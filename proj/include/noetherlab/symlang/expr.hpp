#pragma once

#include <algorithm>
#include <charconv>
#include <complex>
#include <compare>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nlab::sym {

using complex = std::complex<double>;

enum class Kind : std::uint8_t {
    Const,
    Param,
    Coord,
    Field,
    FieldDeriv,
    Conj,
    Sum,
    Product,
    Power,
    Mean,
};

class Expr;

namespace detail {

struct Node {
    Kind kind = Kind::Const;
    complex value{};          // Const
    std::string name;         // Param, Field, FieldDeriv
    int axis = 0;             // Coord, FieldDeriv
    int exponent = 1;         // Power
    std::vector<Expr> children;
};

}  // namespace detail

/// Immutable expression tree. Copies share nodes; nothing is ever mutated
/// after construction, so an Expr may be read from any number of threads.
class Expr {
public:
    Expr() : Expr(constant(0.0)) {}

    static Expr constant(complex c)
    {
        auto n = std::make_shared<detail::Node>();
        n->kind = Kind::Const;
        n->value = c;
        return Expr(std::move(n));
    }
    static Expr constant(double c) { return constant(complex(c, 0.0)); }

    static Expr param(std::string name) { return leaf(Kind::Param, std::move(name), 0); }
    static Expr coord(int axis) { return leaf(Kind::Coord, {}, axis); }
    static Expr field(std::string name) { return leaf(Kind::Field, std::move(name), 0); }
    static Expr field_deriv(std::string name, int axis)
    {
        return leaf(Kind::FieldDeriv, std::move(name), axis);
    }

    static Expr conj(Expr child) { return unary(Kind::Conj, std::move(child)); }

    static Expr mean(Expr child)
    {
        if (child.contains_mean())
            throw std::invalid_argument("mean() may not be nested inside another mean()");
        return unary(Kind::Mean, std::move(child));
    }

    static Expr power(Expr base, int exponent)
    {
        if (exponent == 0) throw std::invalid_argument("power exponent must be a nonzero integer");
        auto n = std::make_shared<detail::Node>();
        n->kind = Kind::Power;
        n->exponent = exponent;
        n->children.push_back(std::move(base));
        return Expr(std::move(n));
    }

    static Expr sum(std::vector<Expr> terms) { return nary(Kind::Sum, std::move(terms)); }
    static Expr product(std::vector<Expr> factors) { return nary(Kind::Product, std::move(factors)); }

    Kind kind() const noexcept { return node_->kind; }
    complex value() const noexcept { return node_->value; }
    const std::string& name() const noexcept { return node_->name; }
    int axis() const noexcept { return node_->axis; }
    int exponent() const noexcept { return node_->exponent; }
    const std::vector<Expr>& children() const noexcept { return node_->children; }
    const Expr& child() const { return node_->children.at(0); }

    bool is_const() const noexcept { return kind() == Kind::Const; }
    bool is_zero() const noexcept { return is_const() && value() == complex(0.0, 0.0); }
    bool is_one() const noexcept { return is_const() && value() == complex(1.0, 0.0); }

    bool contains_mean() const
    {
        if (kind() == Kind::Mean) return true;
        return std::any_of(children().begin(), children().end(),
                           [](const Expr& c) { return c.contains_mean(); });
    }

    /// True when the value can vary from site to site (fields or coordinates).
    bool depends_on_site() const
    {
        switch (kind()) {
            case Kind::Coord:
            case Kind::Field:
            case Kind::FieldDeriv:
                return true;
            case Kind::Const:
            case Kind::Param:
            case Kind::Mean:
                return false;
            default:
                return std::any_of(children().begin(), children().end(),
                                   [](const Expr& c) { return c.depends_on_site(); });
        }
    }

    bool depends_on_fields() const
    {
        switch (kind()) {
            case Kind::Field:
            case Kind::FieldDeriv:
                return true;
            case Kind::Const:
            case Kind::Param:
            case Kind::Coord:
                return false;
            default:
                return std::any_of(children().begin(), children().end(),
                                   [](const Expr& c) { return c.depends_on_fields(); });
        }
    }

    friend std::strong_ordering compare(const Expr& a, const Expr& b);
    friend bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }
    friend std::strong_ordering operator<=>(const Expr& a, const Expr& b) { return compare(a, b); }

private:
    explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}

    static Expr leaf(Kind k, std::string name, int axis)
    {
        auto n = std::make_shared<detail::Node>();
        n->kind = k;
        n->name = std::move(name);
        n->axis = axis;
        return Expr(std::move(n));
    }
    static Expr unary(Kind k, Expr child)
    {
        auto n = std::make_shared<detail::Node>();
        n->kind = k;
        n->children.push_back(std::move(child));
        return Expr(std::move(n));
    }
    static Expr nary(Kind k, std::vector<Expr> children)
    {
        if (children.empty())
            throw std::invalid_argument(k == Kind::Sum ? "empty sum" : "empty product");
        auto n = std::make_shared<detail::Node>();
        n->kind = k;
        n->children = std::move(children);
        return Expr(std::move(n));
    }

    std::shared_ptr<const detail::Node> node_;
};

namespace detail {

inline std::strong_ordering compare_double(double a, double b)
{
    if (a < b) return std::strong_ordering::less;
    if (a > b) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

}  // namespace detail

/// Total structural order: kind first, then payload, then children
/// lexicographically. Used for canonical term ordering and equality.
inline std::strong_ordering compare(const Expr& a, const Expr& b)
{
    if (a.node_ == b.node_) return std::strong_ordering::equal;
    if (auto c = a.kind() <=> b.kind(); c != 0) return c;
    switch (a.kind()) {
        case Kind::Const:
            if (auto c = detail::compare_double(a.value().real(), b.value().real()); c != 0) return c;
            return detail::compare_double(a.value().imag(), b.value().imag());
        case Kind::Param:
        case Kind::Field:
            return a.name() <=> b.name();
        case Kind::Coord:
            return a.axis() <=> b.axis();
        case Kind::FieldDeriv:
            if (auto c = a.name() <=> b.name(); c != 0) return c;
            return a.axis() <=> b.axis();
        case Kind::Power:
            if (auto c = a.exponent() <=> b.exponent(); c != 0) return c;
            break;
        default:
            break;
    }
    const auto& ca = a.children();
    const auto& cb = b.children();
    const std::size_t n = std::min(ca.size(), cb.size());
    for (std::size_t i = 0; i < n; ++i)
        if (auto c = compare(ca[i], cb[i]); c != 0) return c;
    return ca.size() <=> cb.size();
}

// ---------------------------------------------------------------------------
// Printing. The output is valid DSL text; parse(print(e)) == e for any tree
// the parser can produce.

namespace detail {

inline std::string format_real(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    // Keep the literal a number token even for "inf"/"nan" (never produced by
    // the parser; printing is best-effort there).
    return s;
}

inline std::string format_const(complex c)
{
    if (c.imag() == 0.0) return format_real(c.real());
    if (c.real() == 0.0) return format_real(c.imag()) + "i";
    return "(" + format_real(c.real()) + " + " + format_real(c.imag()) + "i)";
}

// precedence: 0 = sum level, 1 = product level, 2 = power base / atom
inline void print_to(std::string& out, const Expr& e, int context);

inline bool is_negative_const(const Expr& e)
{
    return e.is_const() && (std::signbit(e.value().real()) || std::signbit(e.value().imag()));
}

inline void print_to(std::string& out, const Expr& e, int context)
{
    switch (e.kind()) {
        case Kind::Const: {
            std::string s = format_const(e.value());
            const bool bare_negative = is_negative_const(e) && s.front() != '(';
            if (context >= 2 && bare_negative) out += "(" + s + ")";
            else out += s;
            return;
        }
        case Kind::Param:
        case Kind::Field:
            out += e.name();
            return;
        case Kind::Coord:
            out += "x(" + std::to_string(e.axis()) + ")";
            return;
        case Kind::FieldDeriv:
            out += "d(" + e.name() + "," + std::to_string(e.axis()) + ")";
            return;
        case Kind::Conj:
            out += "conj(";
            print_to(out, e.child(), 0);
            out += ")";
            return;
        case Kind::Mean:
            out += "mean(";
            print_to(out, e.child(), 0);
            out += ")";
            return;
        case Kind::Power: {
            const bool paren = context >= 3;
            if (paren) out += "(";
            print_to(out, e.child(), 3);
            out += "^" + std::to_string(e.exponent());
            if (paren) out += ")";
            return;
        }
        case Kind::Sum: {
            const bool paren = context >= 1;
            if (paren) out += "(";
            for (std::size_t i = 0; i < e.children().size(); ++i) {
                if (i) out += " + ";
                print_to(out, e.children()[i], 1);
            }
            if (paren) out += ")";
            return;
        }
        case Kind::Product: {
            const bool paren = context >= 2;
            if (paren) out += "(";
            for (std::size_t i = 0; i < e.children().size(); ++i) {
                if (i) out += "*";
                // A leading negative literal is re-read by the unary-minus
                // rule; anywhere else it needs parentheses.
                const auto& c = e.children()[i];
                if (i == 0 && c.kind() == Kind::Const) print_to(out, c, 1);
                else print_to(out, c, 2);
            }
            if (paren) out += ")";
            return;
        }
    }
}

}  // namespace detail

inline std::string to_string(const Expr& e)
{
    std::string out;
    detail::print_to(out, e, 0);
    return out;
}

// Small construction helpers used by the derivation code.
inline Expr operator+(const Expr& a, const Expr& b) { return Expr::sum({a, b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::product({a, b}); }
inline Expr operator-(const Expr& a) { return Expr::product({Expr::constant(-1.0), a}); }
inline Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

}  // namespace nlab::sym
