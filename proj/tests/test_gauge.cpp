#include "noetherlab/gauge.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace nlab;

namespace {

constexpr double pi = std::numbers::pi;
const std::vector<int> minkowski{1, -1};

LatticePtr scenario(std::size_t n)
{
    return make_lattice(Lattice::from_extent({n, n}, {1.5 * pi, 4.0 * pi}, {Boundary::open, Boundary::periodic}, minkowski));
}

LatticeField packet(const LatticePtr& l)
{
    KleinGordonParams p;
    const auto init = make_initial_layers(*l, {"gaussian_packet", 1.0, 1.0, 2.0 * pi, 1.0}, p);
    return solve_klein_gordon(l, init, p).fields[0];
}

LatticeField noise(const LatticePtr& l, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    LatticeField f(l);
    for (auto& z : f.values()) {
        const double re = N(rng);
        z = complex(re, N(rng));
    }
    return f;
}

GaugePotential smooth_potential(const LatticePtr& l, double e)
{
    GaugePotential A;
    A.coupling = e;
    for (std::size_t nu = 0; nu < l->dims(); ++nu)
        A.components.push_back(LatticeField::generate(l, [&](std::size_t s) {
            return complex(0.3 * std::cos(l->coordinate(s, 1) / 2.0 + double(nu)), 0.1 * std::sin(l->coordinate(s, 0)));
        }));
    return A;
}

}  // namespace

// ---------------------------------------------------------------------------
// Covariant derivative

TEST(CovariantDerivative, ZeroPotentialIsTheGradient)
{
    const auto l = scenario(16);
    const auto phi = noise(l, 1);
    const auto A = GaugePotential::zero(l, 0.7);
    for (std::size_t nu = 0; nu < 2; ++nu) EXPECT_EQ((covariant_derivative(phi, A, nu) - gradient(phi, nu)).max_abs(), 0.0);
}

TEST(CovariantDerivative, ConstantFieldAndPotential)
{
    const auto l = scenario(16);
    const complex c(0.4, -0.9), a(0.25, 0.5);
    const double e = 1.5;
    GaugePotential A{{constant_field(l, a), constant_field(l, 2.0 * a)}, e};
    const auto phi = constant_field(l, c);
    EXPECT_LE((covariant_derivative(phi, A, 0) - constant_field(l, e * a * c)).max_abs(), 1e-15);
    EXPECT_LE((covariant_derivative(phi, A, 1) - constant_field(l, 2.0 * e * a * c)).max_abs(), 1e-15);
    const auto state = FieldSystemState::single("phi", phi);
    EXPECT_EQ((covariant_derivative(state, A, 1) - covariant_derivative(phi, A, 1)).max_abs(), 0.0);
}

TEST(CovariantDerivative, Errors)
{
    const auto l = scenario(16);
    const auto phi = noise(l, 2);
    auto A = GaugePotential::zero(l, 1.0);
    EXPECT_THROW(covariant_derivative(phi, A, 2), GaugeError);
    A.coupling = 0.0;
    EXPECT_THROW(covariant_derivative(phi, A, 0), GaugeError);
    EXPECT_THROW(GaugePotential::zero(l, 0.0), GaugeError);
}

TEST(CovariantDerivative, PureGaugeIsCovariant)
{
    const auto l = scenario(64);
    const auto phi = packet(l);
    const auto eps = smooth_gauge_parameter(l, 1e-3, 3);
    const auto defect = covariance_defect_fields(phi, GaugePotential::zero(l, 1.0), eps);
    EXPECT_LE(axis_norm(defect), 1e-5);
}

// ---------------------------------------------------------------------------
// Transformations

TEST(GaugeTransform, ZeroParameterIsIdentity)
{
    const auto l = scenario(16);
    const auto state = FieldSystemState::single("phi", noise(l, 3));
    EXPECT_EQ((gauge_transform_fields(state, 0.0).fields[0] - state.fields[0]).max_abs(), 0.0);
    EXPECT_EQ((gauge_transform_fields(state, LatticeField(l)).fields[0] - state.fields[0]).max_abs(), 0.0);
    const auto A = smooth_potential(l, 1.0);
    const auto At = gauge_transform_potential(A, LatticeField(l));
    for (std::size_t nu = 0; nu < 2; ++nu) EXPECT_EQ((At.components[nu] - A.components[nu]).max_abs(), 0.0);
}

TEST(GaugeTransform, ConstantParameterPreservesModulusToSecondOrder)
{
    const auto l = scenario(16);
    const auto state = FieldSystemState::single("phi", noise(l, 4));
    for (double eps : {1e-3, -0.05, 0.1}) {
        const auto t = gauge_transform_fields(state, eps).fields[0];
        for (std::size_t s = 0; s < t.size(); ++s)
            ASSERT_LE(std::abs(std::abs(t[s]) - std::abs(state.fields[0][s])), eps * eps * std::abs(state.fields[0][s]));
    }
}

TEST(GaugeTransform, LeibnizRuleWithRefinement)
{
    std::vector<double> err;
    for (std::size_t n : {32, 64, 128}) {
        const auto l = scenario(n);
        const auto phi = LatticeField::generate(l, [&](std::size_t s) {
            return std::exp(complex(0.0, l->coordinate(s, 1) / 2.0 - l->coordinate(s, 0)));
        });
        const auto eps = LatticeField::generate(l, [&](std::size_t s) {
            return complex(0.05 * std::sin(l->coordinate(s, 0)) * std::cos(l->coordinate(s, 1) / 2.0), 0.0);
        });
        const auto t = gauge_transform_fields(FieldSystemState::single("phi", phi), eps).fields[0];
        double worst = 0.0;
        for (std::size_t nu = 0; nu < 2; ++nu) {
            const auto dphi = gradient(phi, nu);
            const auto deps = gradient(eps, nu);
            const auto leibniz = LatticeField::generate(l, [&](std::size_t s) {
                return dphi[s] + complex(0.0, -1.0) * (deps[s] * phi[s] + eps[s] * dphi[s]);
            });
            worst = std::max(worst, (gradient(t, nu) - leibniz).max_abs());
        }
        err.push_back(worst);
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 1.8);
    EXPECT_GE(std::log2(err[1] / err[2]), 1.8);
}

TEST(GaugeTransform, ConstantParameterLeavesPotentialUnchanged)
{
    const auto l = scenario(16);
    const auto A = smooth_potential(l, 0.8);
    const auto At = gauge_transform_potential(A, 0.07);
    for (std::size_t nu = 0; nu < 2; ++nu) EXPECT_EQ((At.components[nu] - A.components[nu]).max_abs(), 0.0);
    EXPECT_EQ(At.coupling, A.coupling);
}

TEST(GaugeTransform, LinearParameterShiftsOneComponent)
{
    const auto l = scenario(32);
    const double e = 2.0, c = 0.01;
    const auto A = smooth_potential(l, e);
    const auto eps = LatticeField::generate(l, [&](std::size_t s) { return complex(c * l->coordinate(s, 0), 0.0); });
    const auto At = gauge_transform_potential(A, eps);
    const auto expected = A.components[0] + constant_field(l, complex(0.0, c / e));
    EXPECT_LE((At.components[0] - expected).max_abs(), 1e-15);
    EXPECT_LE((At.components[1] - A.components[1]).max_abs(), 1e-15);
}

TEST(GaugeTransform, CommutatorIsZero)
{
    const auto l = scenario(16);
    const auto A = smooth_potential(l, 1.0);
    for (std::size_t nu = 0; nu < 2; ++nu) EXPECT_EQ(abelian_commutator(A, nu).max_abs(), 0.0);
}

TEST(GaugeTransform, ParameterValidation)
{
    const auto l = scenario(16);
    const auto state = FieldSystemState::single("phi", noise(l, 5));
    EXPECT_THROW(gauge_transform_fields(state, 0.2), GaugeError);
    EXPECT_THROW(gauge_transform_fields(state, constant_field(l, complex(0.01, 0.01))), GaugeError);
    EXPECT_THROW(gauge_transform_fields(state, constant_field(l, 0.5)), GaugeError);
    EXPECT_THROW(gauge_transform_potential(smooth_potential(l, 1.0), -0.11), GaugeError);
}

// ---------------------------------------------------------------------------
// Reconstruction and round trip

TEST(Reconstruction, RoundTripAcrossLambdaAndFactor)
{
    const auto l = scenario(64);
    for (const auto& phi : {packet(l), noise(l, 6)}) {
        for (double lambda : {0.01, 0.1, 0.5, 1.0, 3.0}) {
            for (double f : {1.0 - lambda, 0.5, 2.0, -1.0}) {
                if (f == 0.0) continue;
                for (double e : {1.0, 0.3}) {
                    const auto G = reconstruct_gauge_field(phi, lambda, e, f);
                    const auto F = closed_form_residual(phi, lambda);
                    EXPECT_LE(relative_rms(residual_from_gauge(phi, G, e, f), F), 1e-12)
                        << "lambda=" << lambda << " f=" << f << " e=" << e;
                }
            }
        }
    }
}

TEST(Reconstruction, ZeroLambdaGivesZero)
{
    const auto l = scenario(32);
    const auto phi = noise(l, 7);
    const auto G = reconstruct_gauge_field(phi, 0.0, 1.0, 1.0);
    for (const auto& g : G.a_phi) EXPECT_EQ(g.max_abs(), 0.0);
    EXPECT_EQ(residual_from_gauge(phi, G, 1.0, 1.0).max_abs(), 0.0);
    EXPECT_EQ(relative_rms(residual_from_gauge(phi, G, 1.0, 1.0), closed_form_residual(phi, 0.0)), 0.0);
}

TEST(Reconstruction, TravellingWaveOverWholePeriods)
{
    const double omega = std::sqrt(2.0);
    const auto l = make_lattice(Lattice::from_extent({129, 64}, {2.0 * pi / omega, 2.0 * pi},
                                                     {Boundary::open, Boundary::periodic}, minkowski));
    const auto phi = LatticeField::generate(
        l, [&](std::size_t s) { return std::exp(complex(0.0, l->coordinate(s, 1) - omega * l->coordinate(s, 0))); });
    const auto G = reconstruct_gauge_field(phi, 0.1, 1.0, 0.9);
    for (const auto& g : G.a_phi) EXPECT_LE(g.max_abs(), 1e-12);
    EXPECT_LE(residual_from_gauge(phi, G, 1.0, 0.9).max_abs(), 1e-12);
}

TEST(Reconstruction, HomogeneousModeMatchesContinuum)
{
    const double lambda = 0.1, e = 1.0, f = 0.9, T = 1.5 * pi, Lx = 4.0 * pi;
    const auto l = scenario(256);
    const auto phi = LatticeField::generate(l, [&](std::size_t s) { return std::exp(complex(0.0, -l->coordinate(s, 0))); });
    const auto G = reconstruct_gauge_field(phi, lambda, e, f);
    const complex expected = -lambda / (e * T * Lx * f) * Lx * (std::exp(complex(0.0, -T)) - 1.0);
    EXPECT_LE(std::abs(G.a_phi[0][0] - expected), 1e-3 * std::abs(expected));
    EXPECT_LE(G.a_phi[1].max_abs(), 1e-12);
}

TEST(Reconstruction, ConjugateRelation)
{
    const auto l = scenario(32);
    const auto G = reconstruct_gauge_field(noise(l, 8), 0.3, 1.2, 0.7);
    for (std::size_t mu = 0; mu < 2; ++mu) EXPECT_EQ((G.a_phi_conj[mu] - G.a_phi[mu].conj()).max_abs(), 0.0);
}

TEST(Reconstruction, Errors)
{
    const auto l = scenario(16);
    const auto phi = noise(l, 9);
    EXPECT_THROW(reconstruct_gauge_field(phi, 0.1, 0.0, 1.0), GaugeError);
    EXPECT_THROW(reconstruct_gauge_field(phi, 0.1, 1.0, 0.0), GaugeError);
    GaugeProductField bad;
    EXPECT_THROW(residual_from_gauge(phi, bad, 1.0, 1.0), GaugeError);
}

TEST(Reconstruction, MaskedPotentialRecovery)
{
    const auto l = scenario(32);
    auto phi = noise(l, 10);
    for (std::size_t s = 0; s < phi.size(); s += 17) phi.values()[s] = 0.0;
    const auto G = reconstruct_gauge_field(phi, 0.2, 1.0, 0.8);
    const auto rec = recover_potential(G, phi);
    std::size_t zeros = 0;
    for (std::size_t s = 0; s < phi.size(); ++s) {
        if (phi[s] == complex(0.0, 0.0)) {
            ++zeros;
            EXPECT_FALSE(rec.mask[s]);
            continue;
        }
        ASSERT_TRUE(rec.mask[s]);
        for (std::size_t mu = 0; mu < 2; ++mu)
            EXPECT_LE(std::abs(rec.components[mu][s] * phi[s] - G.a_phi[mu][s]), 1e-14 * (1.0 + std::abs(G.a_phi[mu][s])));
    }
    EXPECT_EQ(rec.masked_sites, zeros);
}

// ---------------------------------------------------------------------------
// Covariance exponent

TEST(Covariance, LogLogSlopeOfExactPowerLaw)
{
    const std::vector<double> x{1e-3, 2e-3, 5e-3, 1e-2};
    std::vector<double> y;
    for (double v : x) y.push_back(7.0 * v * v * v);
    EXPECT_NEAR(loglog_slope(x, y), 3.0, 1e-12);
}

TEST(Covariance, DefectIsSecondOrderInTheParameter)
{
    const auto l = scenario(64);
    const auto phi = packet(l);
    const auto shape = smooth_gauge_parameter(l, 1.0, 11);
    const auto r = covariance_check(phi, smooth_potential(l, 1.0), shape, {1e-3, 3e-3, 1e-2, 3e-2, 0.1});
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.fitted_exponent, 2.0, 0.05);
    std::vector<double> xs, odd;
    for (const auto& s : r.samples) {
        xs.push_back(s.amplitude);
        odd.push_back(s.odd);
    }
    EXPECT_NEAR(loglog_slope(xs, odd), 1.0, 0.05);
}

TEST(Covariance, SmoothParameterShape)
{
    const auto l = scenario(32);
    const auto a = smooth_gauge_parameter(l, 0.05, 1);
    const auto b = smooth_gauge_parameter(l, 0.05, 1);
    EXPECT_EQ((a - b).max_abs(), 0.0);
    EXPECT_NEAR(a.max_abs(), 0.05, 1e-15);
    EXPECT_EQ(a.max_abs_imag(), 0.0);
}
