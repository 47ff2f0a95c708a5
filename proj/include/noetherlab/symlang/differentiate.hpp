#pragma once

#include "noetherlab/symlang/expr.hpp"
#include "noetherlab/symlang/simplify.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nlab::sym {

/// A differentiation variable under the Wirtinger convention: phi, conj(phi),
/// d(phi,nu) and conj(d(phi,nu)) are four independent symbols.
struct Symbol {
    std::string field;
    std::optional<int> axis;  // set for a first derivative d(field, axis)
    bool conjugate = false;

    static Symbol value(std::string f, bool conj = false) { return {std::move(f), std::nullopt, conj}; }
    static Symbol deriv(std::string f, int axis, bool conj = false) { return {std::move(f), axis, conj}; }

    Symbol conjugated() const { return {field, axis, !conjugate}; }

    Expr as_expr() const
    {
        Expr e = axis ? Expr::field_deriv(field, *axis) : Expr::field(field);
        return conjugate ? Expr::conj(e) : e;
    }

    friend bool operator==(const Symbol&, const Symbol&) = default;
};

/// One contribution of a mean(g) node to a derivative: the cofactor that
/// multiplied the mean, and the pointwise derivative of g.
struct NonlocalTerm {
    Expr weight;
    Expr integrand;
};

/// Derivative of an expression that may contain domain means. The local part
/// is the ordinary partial derivative. Each nonlocal term (w, h) stands for
/// the pair "weight w at this site, integrand h averaged over the domain".
///
/// Two readings of the nonlocal terms are useful:
///   pointwise()   -> local + sum w * mean(h)   (derivative of the density
///                    with the domain integral differentiated as a whole)
///   variational() -> local + sum mean(w) * h   (functional derivative of
///                    the action; what enters the Euler-Lagrange equations)
struct DerivResult {
    Expr local;
    std::vector<NonlocalTerm> nonlocal;

    Expr pointwise() const
    {
        std::vector<Expr> terms{local};
        for (const auto& t : nonlocal) terms.push_back(t.weight * Expr::mean(t.integrand));
        return simplify(Expr::sum(std::move(terms)));
    }

    Expr variational() const
    {
        std::vector<Expr> terms{local};
        for (const auto& t : nonlocal) terms.push_back(domain_mean(t.weight) * t.integrand);
        return simplify(Expr::sum(std::move(terms)));
    }

    /// mean(w) with factors that are constant over the domain (parameters,
    /// other means) pulled outside, so the result never nests means.
    static Expr domain_mean(const Expr& w)
    {
        std::vector<Expr> terms;
        for (const auto& [m, c] : detail::to_poly(w)) {
            std::vector<Expr> outside{Expr::constant(c)};
            std::vector<Expr> inside;
            for (const auto& [atom, k] : m) {
                Expr f = k == 1 ? atom : Expr::power(atom, k);
                (atom.depends_on_site() ? inside : outside).push_back(f);
            }
            if (!inside.empty()) outside.push_back(Expr::mean(Expr::product(std::move(inside))));
            terms.push_back(Expr::product(std::move(outside)));
        }
        if (terms.empty()) return Expr::constant(0.0);
        return simplify(Expr::sum(std::move(terms)));
    }
};

namespace detail {

inline bool leaf_matches(const Expr& e, const Symbol& s)
{
    if (e.name() != s.field || s.conjugate) return false;
    if (e.kind() == Kind::Field) return !s.axis.has_value();
    return s.axis.has_value() && *s.axis == e.axis();
}

inline DerivResult conj_result(const DerivResult& r)
{
    DerivResult out{Expr::conj(r.local), {}};
    for (const auto& t : r.nonlocal) out.nonlocal.push_back({Expr::conj(t.weight), Expr::conj(t.integrand)});
    return out;
}

inline DerivResult scale_result(const Expr& factor, const DerivResult& r)
{
    DerivResult out{factor * r.local, {}};
    for (const auto& t : r.nonlocal) out.nonlocal.push_back({factor * t.weight, t.integrand});
    return out;
}

inline DerivResult diff_raw(const Expr& e, const Symbol& s)
{
    const Expr zero = Expr::constant(0.0);
    switch (e.kind()) {
        case Kind::Const:
        case Kind::Param:
        case Kind::Coord:
            return {zero, {}};
        case Kind::Field:
        case Kind::FieldDeriv:
            return {leaf_matches(e, s) ? Expr::constant(1.0) : zero, {}};
        case Kind::Conj:
            // d conj(g) / ds = conj( d g / d conj(s) )
            return conj_result(diff_raw(e.child(), s.conjugated()));
        case Kind::Sum: {
            DerivResult out{zero, {}};
            std::vector<Expr> locals;
            for (const auto& c : e.children()) {
                DerivResult r = diff_raw(c, s);
                locals.push_back(r.local);
                out.nonlocal.insert(out.nonlocal.end(), r.nonlocal.begin(), r.nonlocal.end());
            }
            out.local = Expr::sum(std::move(locals));
            return out;
        }
        case Kind::Product: {
            DerivResult out{zero, {}};
            std::vector<Expr> locals;
            const auto& ch = e.children();
            for (std::size_t i = 0; i < ch.size(); ++i) {
                DerivResult r = diff_raw(ch[i], s);
                if (r.local.is_zero() && r.nonlocal.empty()) continue;
                std::vector<Expr> others;
                for (std::size_t j = 0; j < ch.size(); ++j)
                    if (j != i) others.push_back(ch[j]);
                Expr cofactor = others.empty() ? Expr::constant(1.0) : Expr::product(std::move(others));
                DerivResult scaled = scale_result(cofactor, r);
                locals.push_back(scaled.local);
                out.nonlocal.insert(out.nonlocal.end(), scaled.nonlocal.begin(), scaled.nonlocal.end());
            }
            if (!locals.empty()) out.local = Expr::sum(std::move(locals));
            return out;
        }
        case Kind::Power: {
            const int n = e.exponent();
            DerivResult r = diff_raw(e.child(), s);
            Expr factor = (n == 1) ? Expr::constant(1.0)
                                   : Expr::constant(static_cast<double>(n)) * Expr::power(e.child(), n - 1);
            return scale_result(factor, r);
        }
        case Kind::Mean: {
            DerivResult inner = diff_raw(e.child(), s);
            return {zero, {{Expr::constant(1.0), inner.local}}};
        }
    }
    return {zero, {}};
}

}  // namespace detail

/// Partial derivative of `e` with respect to `wrt`, with every mean(g)
/// contributing a nonlocal term. All parts are returned simplified; nonlocal
/// terms whose weight or integrand vanishes are dropped.
inline DerivResult differentiate(const Expr& e, const Symbol& wrt)
{
    DerivResult raw = detail::diff_raw(e, wrt);
    DerivResult out{simplify(raw.local), {}};
    for (const auto& t : raw.nonlocal) {
        Expr w = simplify(t.weight);
        Expr h = simplify(t.integrand);
        if (w.is_zero() || h.is_zero()) continue;
        out.nonlocal.push_back({w, h});
    }
    return out;
}

/// Replace every mean(g) by g. The result has the same Euler-Lagrange
/// equations as the input whenever the mean terms enter linearly with
/// site-independent coefficients.
inline Expr localize(const Expr& e)
{
    switch (e.kind()) {
        case Kind::Mean:
            return e.child();
        case Kind::Conj:
            return Expr::conj(localize(e.child()));
        case Kind::Power:
            return Expr::power(localize(e.child()), e.exponent());
        case Kind::Sum:
        case Kind::Product: {
            std::vector<Expr> ch;
            for (const auto& c : e.children()) ch.push_back(localize(c));
            return e.kind() == Kind::Sum ? Expr::sum(std::move(ch)) : Expr::product(std::move(ch));
        }
        default:
            return e;
    }
}

}  // namespace nlab::sym
