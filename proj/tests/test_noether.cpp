#include "noetherlab/noether.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace nlab;

namespace {

constexpr double pi = std::numbers::pi;
const std::vector<int> minkowski{1, -1};
const InitialCondition packet{"gaussian_packet", 1.0, 1.0, 2.0 * pi, 1.0};

LatticePtr scenario(std::size_t n)
{
    return make_lattice(Lattice::from_extent({n, n}, {1.5 * pi, 4.0 * pi}, {Boundary::open, Boundary::periodic}, minkowski));
}

FieldSystemState solve(const LatticePtr& l, const InitialCondition& ic, double quartic = 0.0)
{
    KleinGordonParams p{1.0, quartic};
    return solve_klein_gordon(l, make_initial_layers(*l, ic, p), p);
}

FieldSystemState noise(const LatticePtr& l, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    LatticeField f(l);
    for (auto& z : f.values()) {
        const double re = N(rng);
        z = complex(re, N(rng));
    }
    return FieldSystemState::single("phi", f);
}

double max_diff(const LatticeField& a, const LatticeField& b) { return (a - b).max_abs(); }

std::vector<double> orders(const std::vector<double>& e)
{
    std::vector<double> p;
    for (std::size_t i = 1; i < e.size(); ++i) p.push_back(std::log2(e[i - 1] / e[i]));
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Flux

TEST(Flux, LocalFluxMatchesHandFormula)
{
    const auto state = noise(scenario(24), 1);
    const auto& phi = state.fields[0];
    const auto J = noether_flux(complex_scalar_local(minkowski, 1.0, 0.4), u1_transformation(), state);
    ASSERT_EQ(J.components.size(), 2u);
    for (std::size_t nu = 0; nu < 2; ++nu) {
        const auto d = gradient(phi, nu);
        const auto oracle = LatticeField::generate(phi.lattice_ptr(), [&](std::size_t s) {
            return complex(0.0, minkowski[nu]) * (std::conj(phi[s]) * d[s] - phi[s] * std::conj(d[s]));
        });
        EXPECT_LE(max_diff(J.components[nu], oracle), 1e-10 * oracle.max_abs());
        EXPECT_LE(J.components[nu].max_abs_imag(), 1e-12 * oracle.max_abs());
    }
}

TEST(Flux, FluctuationTermAddsMeanSubtractedCurrent)
{
    const double lambda = 0.37;
    const auto state = noise(scenario(24), 2);
    const auto& phi = state.fields[0];
    const auto J = noether_flux(complex_scalar_nonlocal(minkowski, 1.0, lambda), u1_transformation(), state);
    const auto J0 = noether_flux(complex_scalar_local(minkowski, 1.0), u1_transformation(), state);
    for (std::size_t nu = 0; nu < 2; ++nu) {
        const auto d = gradient(phi, nu);
        const complex md = domain_mean(d);
        const auto extra = LatticeField::generate(phi.lattice_ptr(), [&](std::size_t s) {
            const complex a = std::conj(d[s]) - std::conj(md);
            const complex b = d[s] - md;
            return -lambda * minkowski[nu] * (a * complex(0.0, -1.0) * phi[s] + b * complex(0.0, 1.0) * std::conj(phi[s]));
        });
        EXPECT_LE(max_diff(J.components[nu] - J0.components[nu], extra), 1e-10 * (1.0 + extra.max_abs()));
    }
}

TEST(Flux, ConstantFieldCarriesNoCurrent)
{
    const auto l = scenario(16);
    const auto state = FieldSystemState::single("phi", constant_field(l, complex(0.3, -1.2)));
    const auto J = noether_flux(complex_scalar_nonlocal(minkowski, 1.0, 0.1), u1_transformation(), state);
    for (const auto& c : J.components) EXPECT_LE(c.max_abs(), 1e-14);
}

TEST(Flux, CustomGeneratorEqualsPhaseRotation)
{
    const auto spec = complex_scalar_nonlocal(minkowski, 1.0, 0.1);
    const auto t = custom_transformation(spec, {{"phi", "-1i*phi"}});
    EXPECT_EQ(flux_expressions(spec, t), flux_expressions(spec, u1_transformation()));
    EXPECT_THROW(custom_transformation(spec, {{"psi", "psi"}}), std::invalid_argument);
}

TEST(Flux, RealOnSolverOutput)
{
    const auto state = solve(scenario(64), packet);
    const auto J = noether_flux(complex_scalar_nonlocal(minkowski, 1.0, 0.1), u1_transformation(), state);
    for (const auto& c : J.components) EXPECT_LE(c.max_abs_imag(), 1e-12 * c.max_abs());
}

// ---------------------------------------------------------------------------
// Closed-form residual

TEST(ClosedForm, VanishesWithoutFluctuationTerm)
{
    const auto state = noise(scenario(16), 3);
    EXPECT_EQ(closed_form_residual(state.fields[0], 0.0).max_abs(), 0.0);
    EXPECT_EQ(closed_form_residual(complex_scalar_local(minkowski, 1.0), state).max_abs(), 0.0);
}

TEST(ClosedForm, IsRealAndIntegratesToZeroOffShell)
{
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        const auto state = noise(scenario(20), seed);
        const auto F = closed_form_residual(state.fields[0], 0.25);
        EXPECT_EQ(F.max_abs_imag(), 0.0);
        EXPECT_TRUE(zero_mean_check(F, 1e-12).pass) << "seed " << seed;
    }
}

TEST(ClosedForm, HomogeneousModeMatchesContinuumOracle)
{
    const double lambda = 0.1, T = 1.5 * pi, Lx = 4.0 * pi, V = T * Lx;
    std::vector<double> err;
    for (std::size_t n : {32, 64, 128}) {
        const auto l = scenario(n);
        const auto phi = LatticeField::generate(l, [&](std::size_t s) { return std::exp(complex(0.0, -l->coordinate(s, 0))); });
        const auto F = closed_form_residual(phi, lambda);
        // d_0 phi = -i phi, I^0 = L_x (e^{-iT} - 1), I^1 = 0.
        const complex I0 = Lx * (std::exp(complex(0.0, -T)) - 1.0);
        const auto oracle = LatticeField::generate(l, [&](std::size_t s) {
            const complex d0 = complex(0.0, -1.0) * std::exp(complex(0.0, -l->coordinate(s, 0)));
            const complex z = std::conj(d0) * I0;
            return complex(0.0, lambda / V) * (z - std::conj(z));
        });
        err.push_back(max_diff(F, oracle) / oracle.max_abs());
    }
    EXPECT_LE(err.back(), 1e-3);
    for (double p : orders(err)) EXPECT_GE(p, 1.8);
}

TEST(ClosedForm, PeriodicInTimeModeGivesNoResidual)
{
    std::vector<double> err;
    for (std::size_t n : {32, 64, 128}) {
        const auto l = make_lattice(Lattice::from_extent({2 * n + 1, n}, {2.0 * pi, 2.0 * pi},
                                                         {Boundary::open, Boundary::periodic}, minkowski));
        const auto phi = LatticeField::generate(l, [&](std::size_t s) { return std::exp(complex(0.0, -l->coordinate(s, 0))); });
        err.push_back(closed_form_residual(phi, 0.5).max_abs());
    }
    EXPECT_LE(err.back(), 1e-3);
    for (double p : orders(err)) EXPECT_GE(p, 1.8);
}

TEST(ClosedForm, TravellingWaveOverWholePeriodsCancels)
{
    const double omega = std::sqrt(2.0);
    const auto l = make_lattice(Lattice::from_extent({129, 64}, {2.0 * pi / omega, 2.0 * pi},
                                                     {Boundary::open, Boundary::periodic}, minkowski));
    const auto phi = LatticeField::generate(
        l, [&](std::size_t s) { return std::exp(complex(0.0, l->coordinate(s, 1) - omega * l->coordinate(s, 0))); });
    EXPECT_LE(closed_form_residual(phi, 0.5).max_abs(), 1e-12);
}

TEST(ClosedForm, PresetDispatch)
{
    const auto state = noise(scenario(16), 4);
    EXPECT_EQ(max_diff(closed_form_residual(complex_scalar_nonlocal(minkowski, 1.0, 0.3), state),
                       closed_form_residual(state.fields[0], 0.3)),
              0.0);
    const auto custom = make_lagrangian("custom", {"phi"}, {}, minkowski, "d(phi,0)*conj(d(phi,0))");
    EXPECT_FALSE(has_closed_form_residual(custom));
    EXPECT_THROW(closed_form_residual(custom, state), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Region integrals and zero-mean

TEST(RegionResidual, AdditiveOverDisjointSplits)
{
    const auto l = scenario(32);
    const auto F = closed_form_residual(noise(l, 5).fields[0], 0.2);
    const auto whole = SubRegion::whole(*l);
    for (std::size_t k : {1ul, 7ul, 16ul, 31ul}) {
        auto a = whole, b = whole;
        a.hi[0] = k;
        b.lo[0] = k;
        const complex sum = region_residual(F, a) + region_residual(F, b);
        auto c = whole, d = whole;
        c.hi[1] = k;
        d.lo[1] = k;
        const complex sum2 = region_residual(F, c) + region_residual(F, d);
        const double scale = integrate(F.map([](complex z) { return complex(std::abs(z), 0.0); })).real();
        EXPECT_LE(std::abs(sum - region_residual(F, whole)), 1e-13 * scale);
        EXPECT_LE(std::abs(sum2 - region_residual(F, whole)), 1e-13 * scale);
    }
}

TEST(RegionResidual, EmptyRegionIsAnError)
{
    const auto l = scenario(16);
    const auto F = closed_form_residual(noise(l, 6).fields[0], 0.2);
    auto r = SubRegion::whole(*l);
    r.hi[0] = r.lo[0];
    EXPECT_ANY_THROW(region_residual(F, r));
}

TEST(ZeroMean, MeasuredDivergenceOnSolverOutput)
{
    for (double lambda : {0.0, 0.1, 0.5}) {
        const auto state = solve(scenario(64), packet);
        const auto J = noether_flux(complex_scalar_nonlocal(minkowski, 1.0, lambda), u1_transformation(), state);
        const auto rec = zero_mean_check(measured_residual(J));
        EXPECT_TRUE(rec.pass) << "lambda=" << lambda << " relative=" << rec.relative;
    }
}

TEST(ZeroMean, DetectsANonzeroMean)
{
    const auto l = scenario(16);
    const auto rec = zero_mean_check(constant_field(l, 1.0));
    EXPECT_FALSE(rec.pass);
    EXPECT_NEAR(rec.relative, 1.0, 1e-14);
    EXPECT_TRUE(zero_mean_check(LatticeField(l)).pass);
}

// ---------------------------------------------------------------------------
// Balance, conservation and the localization contradiction

TEST(Balance, DivergenceMatchesClosedFormWithRefinement)
{
    for (double quartic : {0.0, 0.5}) {
        std::vector<double> err;
        for (std::size_t n : {64, 128, 256}) {
            const auto l = scenario(n);
            const auto spec = complex_scalar_nonlocal(minkowski, 1.0, 0.1, quartic);
            const auto state = solve(l, packet, quartic);
            const auto J = noether_flux(spec, u1_transformation(), state);
            const auto F = closed_form_residual(spec, state);
            err.push_back((measured_residual(J) - F).rms(SubRegion::interior(*l)));
        }
        for (double p : orders(err)) EXPECT_GE(p, 1.5) << "g=" << quartic;
    }
}

TEST(Balance, LocalCurrentIsConservedWithRefinement)
{
    std::vector<double> err;
    for (std::size_t n : {64, 128, 256}) {
        const auto l = scenario(n);
        const auto J = noether_flux(complex_scalar_local(minkowski, 1.0), u1_transformation(), solve(l, packet));
        err.push_back(measured_residual(J).max_abs(SubRegion::interior(*l)));
    }
    for (double p : orders(err)) EXPECT_GE(p, 1.5);
}

TEST(Contradiction, RaisedForNonzeroLambda)
{
    const auto l = scenario(128);
    const auto state = solve(l, {"k0_mode"});
    const auto spec = complex_scalar_nonlocal(minkowski, 1.0, 0.1);
    const auto t = u1_transformation();
    const auto r = localization_contradiction_report(noether_flux(spec, t, state), closed_form_residual(spec, state),
                                                     discretization_floor(spec, t, state));
    EXPECT_TRUE(r.localized_assumption_fails);
    EXPECT_GE(r.ratio, 100.0);
    EXPECT_GE(r.raw_ratio, r.ratio);
    EXPECT_LE(r.mean_divergence, 1e-10 * r.max_divergence);
}

TEST(Contradiction, NotRaisedWithoutFluctuationTerm)
{
    const auto l = scenario(128);
    const auto state = solve(l, packet);
    const auto spec = complex_scalar_nonlocal(minkowski, 1.0, 0.0);
    const auto t = u1_transformation();
    const auto r = localization_contradiction_report(noether_flux(spec, t, state), closed_form_residual(spec, state),
                                                     discretization_floor(spec, t, state));
    EXPECT_FALSE(r.localized_assumption_fails);
    EXPECT_LT(r.ratio, 10.0);
}

TEST(Contradiction, SafeRatio)
{
    EXPECT_EQ(safe_ratio(0.0, 0.0), 0.0);
    EXPECT_TRUE(std::isinf(safe_ratio(1.0, 0.0)));
    EXPECT_EQ(safe_ratio(6.0, 3.0), 2.0);
}

// ---------------------------------------------------------------------------
// Invariance

TEST(Invariance, ZeroEpsilonIsExact)
{
    const auto state = noise(scenario(16), 7);
    const auto r = first_order_invariance_check(complex_scalar_nonlocal(minkowski, 1.0, 0.1), u1_transformation(), state, 0.0);
    EXPECT_EQ(r.abs_delta, 0.0);
    EXPECT_THROW(first_order_invariance_check(complex_scalar_local(minkowski, 1.0), u1_transformation(), state, 0.5),
                 std::invalid_argument);
}

TEST(Invariance, SecondOrderChangeOfQuadraticAction)
{
    // phi -> (1 - i eps) phi scales |phi|^2 and |d phi|^2 by 1 + eps^2.
    const auto state = noise(scenario(16), 8);
    const auto spec = complex_scalar_nonlocal(minkowski, 1.0, 0.2);
    for (double eps : {1e-2, 1e-3}) {
        const auto r = first_order_invariance_check(spec, u1_transformation(), state, eps);
        EXPECT_LE(std::abs(r.delta - eps * eps * r.action), 1e-8 * eps * eps * std::abs(r.action));
    }
}

TEST(Invariance, NonInvariantProbeChangesAtFirstOrder)
{
    const auto l = scenario(32);
    const auto state = FieldSystemState::single("phi", LatticeField::generate(l, [&](std::size_t s) {
        return complex(0.0, 1.0) + 0.5 * std::exp(complex(0.0, l->coordinate(s, 1)));
    }));
    const auto probe = make_lagrangian("probe", {"phi"}, {{"m", 1.0}, {"g_quartic", 0.0}}, minkowski,
                                       presets::local_text(minkowski) + " + phi + conj(phi)");
    const auto a = first_order_invariance_check(probe, u1_transformation(), state, 1e-4);
    const auto b = first_order_invariance_check(probe, u1_transformation(), state, 1e-5);
    EXPECT_GT(a.per_epsilon, 1e-3);
    EXPECT_NEAR(a.per_epsilon / b.per_epsilon, 1.0, 1e-2);
}

TEST(Invariance, GlobalPhaseRotation)
{
    const auto state = noise(scenario(24), 11);
    const auto spec = complex_scalar_nonlocal(minkowski, 1.0, 0.1, 0.3);
    for (double phi0 : {0.0, 0.1, 1.0, pi, 5.5}) EXPECT_TRUE(global_phase_invariance(spec, state, phi0).pass) << phi0;
    const auto probe = make_lagrangian("probe", {"phi"}, {{"m", 1.0}, {"g_quartic", 0.0}}, minkowski,
                                       presets::local_text(minkowski) + " + phi + conj(phi)");
    EXPECT_FALSE(global_phase_invariance(probe, state, 1.0).pass);
}
