#pragma once

#include "noetherlab/symlang/expr.hpp"

#include <map>
#include <utility>
#include <vector>

namespace nlab::sym {

// simplify() rewrites an expression into canonical polynomial form:
//
//   * Conj is pushed down to leaves (Conj of a Coord is the Coord itself).
//   * Products are expanded over sums; positive integer powers of sums are
//     expanded; a negative power of a multi-term sum stays an opaque atom.
//   * Like monomials are merged and zero coefficients dropped.
//   * mean(g) is kept as an atom with canonical g, except that a g which
//     does not vary over the lattice collapses to g itself.
//
// Terms and factors are emitted in the structural order of compare(), so two
// polynomially equal inputs simplify to structurally equal trees.

namespace detail {

// A factor list sorted by atom with nonzero integer exponents.
using Monomial = std::vector<std::pair<Expr, int>>;

struct MonomialLess {
    bool operator()(const Monomial& a, const Monomial& b) const
    {
        const std::size_t n = std::min(a.size(), b.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (auto c = compare(a[i].first, b[i].first); c != 0) return c < 0;
            if (a[i].second != b[i].second) return a[i].second < b[i].second;
        }
        return a.size() < b.size();
    }
};

using Poly = std::map<Monomial, complex, MonomialLess>;

inline Poly poly_const(complex c)
{
    Poly p;
    if (c != complex(0.0, 0.0)) p[{}] = c;
    return p;
}

inline Poly poly_atom(const Expr& atom, int exponent = 1)
{
    Poly p;
    p[{{atom, exponent}}] = complex(1.0, 0.0);
    return p;
}

inline void poly_add_into(Poly& acc, const Poly& rhs)
{
    for (const auto& [m, c] : rhs) {
        auto [it, inserted] = acc.emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == complex(0.0, 0.0)) acc.erase(it);
        }
    }
}

inline Monomial monomial_mul(const Monomial& a, const Monomial& b)
{
    Monomial out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && compare(a[i].first, b[j].first) < 0)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || compare(b[j].first, a[i].first) < 0) {
            out.push_back(b[j++]);
        } else {
            int e = a[i].second + b[j].second;
            if (e != 0) out.emplace_back(a[i].first, e);
            ++i;
            ++j;
        }
    }
    return out;
}

inline Poly poly_mul(const Poly& a, const Poly& b)
{
    Poly out;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) poly_add_into(out, Poly{{monomial_mul(ma, mb), ca * cb}});
    return out;
}

inline complex int_pow(complex base, int n)
{
    complex r(1.0, 0.0);
    const bool inv = n < 0;
    for (int k = 0; k < (inv ? -n : n); ++k) r *= base;
    return inv ? complex(1.0, 0.0) / r : r;
}

Expr simplify_impl(const Expr& e);
Poly to_poly(const Expr& e);
Expr from_poly(const Poly& p);

inline Expr conj_atom(const Expr& atom);

inline Poly poly_conj(const Poly& p)
{
    Poly out;
    for (const auto& [m, c] : p) {
        Poly term = poly_const(std::conj(c));
        for (const auto& [atom, e] : m) {
            Expr ca = conj_atom(atom);
            term = poly_mul(term, to_poly(Expr::power(ca, e)));
        }
        poly_add_into(out, term);
    }
    return out;
}

// Conjugate of an atom, returned in simplified form.
inline Expr conj_atom(const Expr& atom)
{
    switch (atom.kind()) {
        case Kind::Coord:
            return atom;
        case Kind::Param:
        case Kind::Field:
        case Kind::FieldDeriv:
            return Expr::conj(atom);
        case Kind::Conj:
            return atom.child();
        case Kind::Mean:
            return simplify_impl(Expr::mean(Expr::conj(atom.child())));
        case Kind::Power:
            return simplify_impl(Expr::power(Expr::conj(atom.child()), atom.exponent()));
        default:
            return simplify_impl(Expr::conj(atom));
    }
}

inline Poly to_poly(const Expr& e)
{
    switch (e.kind()) {
        case Kind::Const:
            return poly_const(e.value());
        case Kind::Param:
        case Kind::Coord:
        case Kind::Field:
        case Kind::FieldDeriv:
            return poly_atom(e);
        case Kind::Conj: {
            const Expr& c = e.child();
            if (c.kind() == Kind::Param || c.kind() == Kind::Field || c.kind() == Kind::FieldDeriv)
                return poly_atom(e);
            return poly_conj(to_poly(c));
        }
        case Kind::Sum: {
            Poly acc;
            for (const auto& c : e.children()) poly_add_into(acc, to_poly(c));
            return acc;
        }
        case Kind::Product: {
            Poly acc = poly_const(1.0);
            for (const auto& c : e.children()) {
                acc = poly_mul(acc, to_poly(c));
                if (acc.empty()) break;
            }
            return acc;
        }
        case Kind::Power: {
            Poly base = to_poly(e.child());
            const int n = e.exponent();
            if (n > 0) {
                Poly acc = poly_const(1.0);
                for (int k = 0; k < n; ++k) acc = poly_mul(acc, base);
                return acc;
            }
            if (base.size() == 1) {
                const auto& [m, c] = *base.begin();
                if (c != complex(0.0, 0.0)) {
                    Monomial inv;
                    for (const auto& [atom, k] : m) inv.emplace_back(atom, k * n);
                    return Poly{{inv, int_pow(c, n)}};
                }
            }
            // 1/(a+b) or 1/0: keep the reciprocal as an atom.
            Expr canon = from_poly(base);
            return poly_atom(Expr::power(canon, -1), -n);
        }
        case Kind::Mean: {
            Expr inner = simplify_impl(e.child());
            if (!inner.depends_on_site()) return to_poly(inner);
            return poly_atom(Expr::mean(inner));
        }
    }
    return {};
}

inline Expr from_poly(const Poly& p)
{
    if (p.empty()) return Expr::constant(0.0);
    std::vector<Expr> terms;
    terms.reserve(p.size());
    for (const auto& [m, c] : p) {
        std::vector<Expr> factors;
        if (c != complex(1.0, 0.0) || m.empty()) factors.push_back(Expr::constant(c));
        for (const auto& [atom, k] : m) factors.push_back(k == 1 ? atom : Expr::power(atom, k));
        terms.push_back(factors.size() == 1 ? factors.front() : Expr::product(std::move(factors)));
    }
    return terms.size() == 1 ? terms.front() : Expr::sum(std::move(terms));
}

inline Expr simplify_impl(const Expr& e) { return from_poly(to_poly(e)); }

}  // namespace detail

inline Expr simplify(const Expr& e) { return detail::simplify_impl(e); }

}  // namespace nlab::sym
