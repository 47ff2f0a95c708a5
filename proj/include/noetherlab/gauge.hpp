#pragma once

#include "noetherlab/noether.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

namespace nlab {

class GaugeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Abelian potential A_nu, one component per axis, with coupling e.
struct GaugePotential {
    std::vector<LatticeField> components;
    double coupling = 1.0;

    void validate() const
    {
        if (coupling == 0.0 || !std::isfinite(coupling)) throw GaugeError("gauge coupling e must be finite and nonzero");
        for (const auto& c : components)
            if (!c.all_finite()) throw GaugeError("gauge potential has non-finite values");
    }

    static GaugePotential zero(LatticePtr l, double e)
    {
        GaugePotential A;
        A.coupling = e;
        for (std::size_t nu = 0; nu < l->dims(); ++nu) A.components.emplace_back(l);
        A.validate();
        return A;
    }
};

/// Products A_nu phi and A_nu phi*, one field per axis each.
struct GaugeProductField {
    std::vector<LatticeField> a_phi;
    std::vector<LatticeField> a_phi_conj;
};

/// U(1) generator acting on phi. The conjugate field transforms with +i.
inline constexpr complex u1_generator{0.0, -1.0};

/// D_nu phi = d_nu phi + e A_nu phi.
inline LatticeField covariant_derivative(const LatticeField& phi, const GaugePotential& A, std::size_t nu)
{
    A.validate();
    if (nu >= A.components.size()) throw GaugeError("covariant derivative axis out of range");
    phi.require_same(A.components[nu]);
    return gradient(phi, nu) + complex(A.coupling, 0.0) * (A.components[nu] * phi);
}

inline LatticeField covariant_derivative(const FieldSystemState& state, const GaugePotential& A, std::size_t nu,
                                         const std::string& field = "phi")
{
    return covariant_derivative(state.field(field), A, nu);
}

/// Gauge parameter: a constant or a real field.
using GaugeParameter = std::variant<double, LatticeField>;

namespace detail {

inline void check_gauge_parameter(const GaugeParameter& eps)
{
    constexpr double limit = 0.1;
    if (const double* c = std::get_if<double>(&eps)) {
        if (!(std::abs(*c) <= limit)) throw GaugeError("gauge parameter must satisfy |eps| <= 0.1");
        return;
    }
    const auto& f = std::get<LatticeField>(eps);
    if (f.max_abs_imag() != 0.0) throw GaugeError("gauge parameter field must be real");
    if (!(f.max_abs() <= limit)) throw GaugeError("gauge parameter must satisfy |eps| <= 0.1");
}

inline LatticeField as_field(const GaugeParameter& eps, const LatticePtr& l)
{
    if (const double* c = std::get_if<double>(&eps)) return constant_field(l, *c);
    return std::get<LatticeField>(eps);
}

}  // namespace detail

/// phi -> (1 + eps Phi) phi with Phi = -i. Derivatives of the result are
/// taken on the lattice afterwards, never transformed analytically.
inline FieldSystemState gauge_transform_fields(const FieldSystemState& state, const GaugeParameter& eps)
{
    detail::check_gauge_parameter(eps);
    FieldSystemState out = state;
    for (auto& f : out.fields) {
        const LatticeField e = detail::as_field(eps, f.lattice_ptr());
        f = f.zip(e, [](complex z, complex ep) { return z + ep * u1_generator * z; });
    }
    return out;
}

/// [Phi, A_nu] for abelian generators: identically zero.
inline LatticeField abelian_commutator(const GaugePotential& A, std::size_t nu)
{
    return LatticeField(A.components.at(nu).lattice_ptr());
}

/// A_nu -> A_nu + eps [Phi, A_nu] - (1/e) d_nu(eps Phi). A constant eps
/// returns A unchanged.
inline GaugePotential gauge_transform_potential(const GaugePotential& A, const GaugeParameter& eps)
{
    A.validate();
    detail::check_gauge_parameter(eps);
    if (std::holds_alternative<double>(eps)) return A;
    const auto& e = std::get<LatticeField>(eps);
    GaugePotential out = A;
    for (std::size_t nu = 0; nu < A.components.size(); ++nu) {
        e.require_same(A.components[nu]);
        const LatticeField shift = complex(-1.0 / A.coupling, 0.0) * (u1_generator * gradient(e, nu));
        out.components[nu] = A.components[nu] + e * abelian_commutator(A, nu) + shift;
    }
    return out;
}

/// A_mu phi = -lambda / (e V f) * integral of d_mu phi, and likewise for
/// phi*. Both are constants broadcast to every site; with this convention
/// A_mu phi* = conj(A_mu phi).
inline GaugeProductField reconstruct_gauge_field(const LatticeField& phi, double lambda, double e, double local_factor)
{
    if (e == 0.0) throw GaugeError("gauge coupling e must be nonzero");
    if (local_factor == 0.0) throw GaugeError("local_factor must be nonzero");
    const Lattice& l = phi.lattice();
    const double c = -lambda / (e * l.volume() * local_factor);
    GaugeProductField G;
    for (std::size_t mu = 0; mu < l.dims(); ++mu) {
        const complex I = integrate(gradient(phi, mu));
        G.a_phi.push_back(constant_field(phi.lattice_ptr(), c * I));
        G.a_phi_conj.push_back(constant_field(phi.lattice_ptr(), c * std::conj(I)));
    }
    return G;
}

/// F = i e f sum_mu g^{mu mu} [ (d_mu phi) A_mu phi* - (d_mu phi*) A_mu phi ].
inline ResidualField residual_from_gauge(const LatticeField& phi, const GaugeProductField& G, double e,
                                         double local_factor)
{
    const Lattice& l = phi.lattice();
    if (G.a_phi.size() != l.dims() || G.a_phi_conj.size() != l.dims())
        throw GaugeError("gauge product field has the wrong number of axes");
    std::vector<LatticeField> grads;
    for (std::size_t mu = 0; mu < l.dims(); ++mu) {
        phi.require_same(G.a_phi[mu]);
        grads.push_back(gradient(phi, mu));
    }
    const complex pre(0.0, e * local_factor);
    return LatticeField::generate(phi.lattice_ptr(), [&](std::size_t s) {
        complex acc(0.0, 0.0);
        for (std::size_t mu = 0; mu < grads.size(); ++mu)
            acc += double(l.metric(mu)) *
                   (grads[mu][s] * G.a_phi_conj[mu][s] - std::conj(grads[mu][s]) * G.a_phi[mu][s]);
        return pre * acc;
    });
}

/// Relative RMS difference |a - b| / |b|, 0 when both vanish.
inline double relative_rms(const LatticeField& a, const LatticeField& b)
{
    const double diff = (a - b).rms();
    const double ref = b.rms();
    if (ref == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / ref;
}

/// A_nu recovered as (A_nu phi) / phi where |phi| > rel_cut * max|phi|.
struct MaskedPotential {
    std::vector<LatticeField> components;
    std::vector<bool> mask;
    std::size_t masked_sites = 0;
};

inline MaskedPotential recover_potential(const GaugeProductField& G, const LatticeField& phi, double rel_cut = 1e-8)
{
    MaskedPotential out;
    const double cut = rel_cut * phi.max_abs();
    out.mask.resize(phi.size());
    for (std::size_t s = 0; s < phi.size(); ++s) {
        out.mask[s] = std::abs(phi[s]) > cut;
        if (!out.mask[s]) ++out.masked_sites;
    }
    for (const auto& ap : G.a_phi)
        out.components.push_back(LatticeField::generate(phi.lattice_ptr(), [&](std::size_t s) {
            return out.mask[s] ? ap[s] / phi[s] : complex(0.0, 0.0);
        }));
    return out;
}

// ---------------------------------------------------------------------------
// Local covariance

/// Smooth real field with max |eps| = amplitude: a few random Fourier modes
/// that are periodic on periodic axes.
inline LatticeField smooth_gauge_parameter(const LatticePtr& l, double amplitude, std::uint64_t seed = 20240607)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    struct Mode {
        std::vector<double> k;
        std::vector<double> phase;
        double weight;
    };
    std::vector<Mode> modes(3);
    for (auto& m : modes) {
        for (std::size_t mu = 0; mu < l->dims(); ++mu) {
            const double wn = 1.0 + std::floor(2.0 * U(rng));
            const double len = l->boundary(mu) == Boundary::periodic ? l->extent(mu) : 2.0 * l->extent(mu);
            m.k.push_back(2.0 * std::numbers::pi * wn / len);
            m.phase.push_back(2.0 * std::numbers::pi * U(rng));
        }
        m.weight = 0.5 + U(rng);
    }
    LatticeField f = LatticeField::generate(l, [&](std::size_t s) {
        double v = 0.0;
        for (const auto& m : modes) {
            double term = m.weight;
            for (std::size_t mu = 0; mu < l->dims(); ++mu) term *= std::cos(m.k[mu] * l->coordinate(s, mu) + m.phase[mu]);
            v += term;
        }
        return complex(v, 0.0);
    });
    const double peak = f.max_abs();
    return f.map([&](complex z) { return complex(amplitude * z.real() / peak, 0.0); });
}

/// Norm over interior sites and all axes: sqrt(sum_nu rms_nu^2).
inline double axis_norm(const std::vector<LatticeField>& parts, std::size_t margin = 2)
{
    double acc = 0.0;
    for (const auto& p : parts) {
        const double r = p.rms(SubRegion::interior(p.lattice(), margin));
        acc += r * r;
    }
    return std::sqrt(acc);
}

/// D'phi' - (1 + eps Phi) D phi per axis.
inline std::vector<LatticeField> covariance_defect_fields(const LatticeField& phi, const GaugePotential& A,
                                                          const LatticeField& eps)
{
    const auto state = FieldSystemState::single("phi", phi);
    const auto phi_t = gauge_transform_fields(state, eps).fields[0];
    const auto A_t = gauge_transform_potential(A, eps);
    std::vector<LatticeField> out;
    for (std::size_t nu = 0; nu < A.components.size(); ++nu) {
        const auto D = covariant_derivative(phi, A, nu);
        const auto rotated = D.zip(eps, [](complex d, complex ep) { return d + ep * u1_generator * d; });
        out.push_back(covariant_derivative(phi_t, A_t, nu) - rotated);
    }
    return out;
}

struct CovarianceSample {
    double amplitude = 0.0;
    double raw = 0.0;   // norm of the defect
    double even = 0.0;  // norm of (defect(eps) + defect(-eps)) / 2
    double odd = 0.0;   // norm of (defect(eps) - defect(-eps)) / 2, the discretization floor
};

struct CovarianceRecord {
    std::vector<CovarianceSample> samples;
    double fitted_exponent = 0.0;      // from the even part
    double raw_fitted_exponent = 0.0;  // from the raw defect
    double tolerance = 0.3;
    bool pass = false;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= double(n);
    my /= double(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

/// Covariance defect for eps = amplitude * shape over several amplitudes.
/// The exponent is fitted on the part even in eps; the odd part is the
/// O(h^2) product-rule error of the lattice derivative.
inline CovarianceRecord covariance_check(const LatticeField& phi, const GaugePotential& A,
                                         const LatticeField& shape, const std::vector<double>& amplitudes,
                                         double tolerance = 0.3)
{
    CovarianceRecord r;
    r.tolerance = tolerance;
    const double peak = shape.max_abs();
    if (!(peak > 0.0)) throw GaugeError("covariance check needs a nonzero gauge parameter shape");
    std::vector<double> xs, even, raw;
    for (double a : amplitudes) {
        const LatticeField ep = shape.map([&](complex z) { return complex(a * z.real() / peak, 0.0); });
        const LatticeField em = shape.map([&](complex z) { return complex(-a * z.real() / peak, 0.0); });
        const auto dp = covariance_defect_fields(phi, A, ep);
        const auto dm = covariance_defect_fields(phi, A, em);
        std::vector<LatticeField> ev, od;
        for (std::size_t nu = 0; nu < dp.size(); ++nu) {
            ev.push_back(complex(0.5, 0.0) * (dp[nu] + dm[nu]));
            od.push_back(complex(0.5, 0.0) * (dp[nu] - dm[nu]));
        }
        CovarianceSample s{a, axis_norm(dp), axis_norm(ev), axis_norm(od)};
        r.samples.push_back(s);
        xs.push_back(a);
        even.push_back(s.even);
        raw.push_back(s.raw);
    }
    r.fitted_exponent = loglog_slope(xs, even);
    r.raw_fitted_exponent = loglog_slope(xs, raw);
    r.pass = std::abs(r.fitted_exponent - 2.0) <= tolerance;
    return r;
}

}  // namespace nlab
