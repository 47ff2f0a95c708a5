#pragma once

#include "noetherlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlab {

/// One-parameter transformation phi_a -> phi_a + eps * Phi_a. The generator
/// of conj(phi_a) is conj(Phi_a).
struct TransformationSpec {
    std::string name;
    std::vector<std::string> fields;
    std::vector<Expr> generators;  // parallel to fields
    double epsilon = 1e-3;

    const Expr& generator(const std::string& f) const
    {
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (fields[i] == f) return generators[i];
        throw std::invalid_argument("transformation has no generator for '" + f + "'");
    }
};

/// U(1) phase rotation: Phi_phi = -i phi, Phi_phi* = +i phi*.
inline TransformationSpec u1_transformation(const std::vector<std::string>& fields = {"phi"}, double epsilon = 1e-3)
{
    TransformationSpec t{"u1", fields, {}, epsilon};
    for (const auto& f : fields) t.generators.push_back(Expr::product({Expr::constant(complex(0.0, -1.0)), Expr::field(f)}));
    return t;
}

/// Generators given as DSL text, checked against the Lagrangian's symbols.
inline TransformationSpec custom_transformation(const LagrangianSpec& spec,
                                                const std::vector<std::pair<std::string, std::string>>& generators,
                                                double epsilon = 1e-3)
{
    TransformationSpec t{"custom", {}, {}, epsilon};
    for (const auto& [f, text] : generators) {
        if (!spec.symbols.is_field(f)) throw std::invalid_argument("generator for undeclared field '" + f + "'");
        t.fields.push_back(f);
        t.generators.push_back(sym::parse(text, spec.symbols));
    }
    return t;
}

/// Symbolic flux components J^nu = sum_a dL/dphi_{a,nu} Phi_a + dL/dphi*_{a,nu} conj(Phi_a),
/// with nonlocal derivative terms kept in their pointwise form w * mean(h).
inline std::vector<Expr> flux_expressions(const LagrangianSpec& spec, const TransformationSpec& t)
{
    std::vector<Expr> out;
    for (std::size_t nu = 0; nu < spec.signature.size(); ++nu) {
        std::vector<Expr> terms;
        for (std::size_t a = 0; a < t.fields.size(); ++a) {
            const auto& f = t.fields[a];
            const Expr& g = t.generators[a];
            terms.push_back(Expr::product(
                {sym::differentiate(spec.lagrangian, sym::Symbol::deriv(f, int(nu))).pointwise(), g}));
            terms.push_back(Expr::product(
                {sym::differentiate(spec.lagrangian, sym::Symbol::deriv(f, int(nu), true)).pointwise(),
                 Expr::conj(g)}));
        }
        out.push_back(terms.empty() ? Expr::constant(0.0) : sym::simplify(Expr::sum(std::move(terms))));
    }
    return out;
}

struct FluxField {
    std::vector<Expr> expressions;
    std::vector<LatticeField> components;
};

using ResidualField = LatticeField;

inline FluxField noether_flux(const LagrangianSpec& spec, const TransformationSpec& t, const FieldSystemState& state)
{
    FluxField J;
    J.expressions = flux_expressions(spec, t);
    LatticeEvaluator ev(state, spec.params);
    for (const auto& e : J.expressions) J.components.push_back(ev.evaluate(e));
    return J;
}

inline ResidualField measured_residual(const FluxField& J) { return divergence(J.components); }

/// I^mu = g^{mu mu} * integral of d_mu phi over the domain.
inline std::vector<complex> raised_gradient_integrals(const LatticeField& phi)
{
    const Lattice& l = phi.lattice();
    std::vector<complex> out;
    for (std::size_t mu = 0; mu < l.dims(); ++mu) out.push_back(double(l.metric(mu)) * integrate(gradient(phi, mu)));
    return out;
}

/// F = (i lambda / V) sum_mu (d_mu phi* I^mu - d_mu phi conj(I^mu)).
/// Each term is z - conj(z) for a single product z, so the result is real
/// in floating point.
inline ResidualField closed_form_residual(const LatticeField& phi, double lambda)
{
    const Lattice& l = phi.lattice();
    const auto I = raised_gradient_integrals(phi);
    std::vector<LatticeField> grads;
    for (std::size_t mu = 0; mu < l.dims(); ++mu) grads.push_back(gradient(phi, mu));
    const complex pre = complex(0.0, lambda / l.volume());
    return LatticeField::generate(phi.lattice_ptr(), [&](std::size_t s) {
        complex acc(0.0, 0.0);
        for (std::size_t mu = 0; mu < grads.size(); ++mu) {
            const complex z = std::conj(grads[mu][s]) * I[mu];
            acc += z - std::conj(z);
        }
        return pre * acc;
    });
}

inline bool has_closed_form_residual(const LagrangianSpec& spec)
{
    return spec.preset == presets::complex_scalar_nonlocal || spec.preset == presets::complex_scalar_local;
}

inline ResidualField closed_form_residual(const LagrangianSpec& spec, const FieldSystemState& state)
{
    if (!has_closed_form_residual(spec))
        throw std::invalid_argument("closed-form residual is only defined for the complex scalar presets");
    const double lambda = spec.preset == presets::complex_scalar_nonlocal ? spec.param("lambda") : 0.0;
    return closed_form_residual(state.field(spec.fields().front()), lambda);
}

inline complex region_residual(const ResidualField& F, const SubRegion& region)
{
    region.validate(F.lattice());
    if (region.count() == 0) throw std::invalid_argument("region residual over an empty region");
    return integrate(F, region);
}

// ---------------------------------------------------------------------------
// Diagnostics

struct ZeroMeanRecord {
    complex integral{};
    double abs_integral = 0.0;  // integral of |F|
    double relative = 0.0;      // |integral| / abs_integral, 0 when F vanishes
    double threshold = 1e-10;
    bool pass = true;
};

inline ZeroMeanRecord zero_mean_check(const ResidualField& F, double threshold = 1e-10)
{
    ZeroMeanRecord r;
    r.threshold = threshold;
    r.integral = integrate(F);
    r.abs_integral = integrate(F.map([](complex z) { return complex(std::abs(z), 0.0); })).real();
    r.relative = r.abs_integral > 0.0 ? std::abs(r.integral) / r.abs_integral : 0.0;
    r.pass = r.relative <= threshold;
    return r;
}

/// Largest interior |div J| of the localized system (every mean(g) replaced by
/// g). For an on-shell state this is the size of pure discretization error in
/// a divergence that vanishes in the continuum.
inline double discretization_floor(const LagrangianSpec& spec, const TransformationSpec& t,
                                   const FieldSystemState& state, std::size_t margin = 2)
{
    const auto J = noether_flux(localized(spec), t, state);
    return measured_residual(J).max_abs(SubRegion::interior(*state.lattice, margin));
}

struct ContradictionReport {
    double integral_divergence = 0.0;  // |integral of div J|
    double mean_divergence = 0.0;      // |integral of div J| / V
    double max_divergence = 0.0;       // interior max |div J|
    double floor = 0.0;
    double raw_ratio = 0.0;            // max / mean
    double ratio = 0.0;                // max / max(mean, floor)
    double balance_rms = 0.0;          // interior RMS(div J - F_closed)
    double threshold = 100.0;
    bool localized_assumption_fails = false;
};

inline double safe_ratio(double num, double den)
{
    if (den > 0.0) return num / den;
    return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

inline ContradictionReport localization_contradiction_report(const FluxField& J, const ResidualField& F_closed,
                                                             double floor = 0.0, double threshold = 100.0,
                                                             std::size_t margin = 2)
{
    const auto divJ = measured_residual(J);
    const Lattice& l = divJ.lattice();
    const auto interior = SubRegion::interior(l, margin);
    ContradictionReport r;
    r.threshold = threshold;
    r.floor = floor;
    r.integral_divergence = std::abs(integrate(divJ));
    r.mean_divergence = r.integral_divergence / l.volume();
    r.max_divergence = divJ.max_abs(interior);
    r.raw_ratio = safe_ratio(r.max_divergence, r.mean_divergence);
    r.ratio = safe_ratio(r.max_divergence, std::max(r.mean_divergence, floor));
    r.balance_rms = (divJ - F_closed).rms(interior);
    r.localized_assumption_fails = r.ratio > threshold;
    return r;
}

/// phi_a -> phi_a + eps * Phi_a evaluated on the lattice.
inline FieldSystemState apply_transformation(const LagrangianSpec& spec, const TransformationSpec& t,
                                             const FieldSystemState& state, double eps)
{
    LatticeEvaluator ev(state, spec.params);
    FieldSystemState out = state;
    for (std::size_t i = 0; i < state.names.size(); ++i) {
        const auto it = std::find(t.fields.begin(), t.fields.end(), state.names[i]);
        if (it == t.fields.end()) continue;
        const auto gen = ev.evaluate(t.generators[std::size_t(it - t.fields.begin())]);
        out.fields[i] = state.fields[i] + complex(eps, 0.0) * gen;
    }
    return out;
}

/// Exact global phase rotation phi -> exp(-i phi0) phi.
inline FieldSystemState phase_rotate(const FieldSystemState& state, double phi0)
{
    FieldSystemState out = state;
    const complex u = std::polar(1.0, -phi0);
    for (auto& f : out.fields) f = u * f;
    return out;
}

struct InvarianceRecord {
    double epsilon = 0.0;
    complex action{};
    complex delta{};
    double abs_delta = 0.0;
    double per_epsilon = 0.0;
    double per_epsilon_sq = 0.0;
};

/// Change of the action under the first-order transformation with constant eps.
inline InvarianceRecord first_order_invariance_check(const LagrangianSpec& spec, const TransformationSpec& t,
                                                     const FieldSystemState& state, double eps)
{
    if (!(eps >= 0.0 && eps <= 1e-2)) throw std::invalid_argument("invariance check needs 0 <= eps <= 1e-2");
    InvarianceRecord r;
    r.epsilon = eps;
    r.action = action(spec, state);
    r.delta = action(spec, apply_transformation(spec, t, state, eps)) - r.action;
    r.abs_delta = std::abs(r.delta);
    if (eps > 0.0) {
        r.per_epsilon = r.abs_delta / eps;
        r.per_epsilon_sq = r.abs_delta / (eps * eps);
    }
    return r;
}

struct PhaseInvarianceRecord {
    double phi0 = 0.0;
    complex action{};
    complex transformed{};
    double abs_delta = 0.0;
    double tolerance = 0.0;  // 1e-12 * (1 + |action|) by default
    bool pass = true;
};

inline PhaseInvarianceRecord global_phase_invariance(const LagrangianSpec& spec, const FieldSystemState& state,
                                                     double phi0, double rel_tol = 1e-12)
{
    PhaseInvarianceRecord r;
    r.phi0 = phi0;
    r.action = action(spec, state);
    r.transformed = action(spec, phase_rotate(state, phi0));
    r.abs_delta = std::abs(r.transformed - r.action);
    r.tolerance = rel_tol * (1.0 + std::abs(r.action));
    r.pass = r.abs_delta <= r.tolerance;
    return r;
}

}  // namespace nlab
