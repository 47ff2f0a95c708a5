#include "noetherlab/dynamics.hpp"

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

FieldSystemState solve(const LatticePtr& l, const InitialCondition& ic, double mass = 1.0, double quartic = 0.0)
{
    KleinGordonParams p{mass, quartic};
    return solve_klein_gordon(l, make_initial_layers(*l, ic, p), p);
}

FieldSystemState noise(const LatticePtr& l, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    LatticeField f(l);
    for (auto& z : f.values()) {
        const double re = U(rng);
        z = complex(re, U(rng));
    }
    return FieldSystemState::single("phi", f);
}

// Lattice with time extent T, dt = 0.5 * h_x or just below, periodic space.
LatticePtr wave_lattice(double T, double L, std::size_t nx)
{
    const double h = L / double(nx);
    const auto steps = std::size_t(std::ceil(T / (0.5 * h)));
    return make_lattice(Lattice::from_extent({steps + 1, nx}, {T, L}, {Boundary::open, Boundary::periodic}, minkowski));
}

}  // namespace

// ---------------------------------------------------------------------------
// Euler-Lagrange derivation

TEST(EulerLagrange, LocalLagrangianGivesKleinGordon)
{
    const auto sys = derive_euler_lagrange(complex_scalar_local(minkowski, 1.0, 0.3));
    EXPECT_EQ(sys, klein_gordon_system(minkowski));
}

TEST(EulerLagrange, FluctuationTermDoesNotChangeTheSystem)
{
    for (double lambda : {0.0, 0.1, 0.5, -2.0}) {
        const auto L = complex_scalar_nonlocal(minkowski, 1.0, lambda, 0.25);
        const auto L0 = complex_scalar_local(minkowski, 1.0, 0.25);
        EXPECT_EQ(derive_euler_lagrange(L), derive_euler_lagrange(L0)) << "lambda=" << lambda;
        EXPECT_EQ(derive_euler_lagrange(L), klein_gordon_system(minkowski));
    }
}

TEST(EulerLagrange, ThreeDimensionalSignature)
{
    const std::vector<int> sig{1, -1, -1};
    EXPECT_EQ(derive_euler_lagrange(complex_scalar_nonlocal(sig, 2.0, 0.1)), klein_gordon_system(sig));
}

TEST(EulerLagrange, MassTermOnly)
{
    const auto spec = make_lagrangian("mass", {"phi"}, {{"m", 1.0}}, minkowski, "m^2*phi*conj(phi)");
    const auto sys = derive_euler_lagrange(spec);
    ASSERT_EQ(sys.equations.size(), 2u);
    const auto& e = sys.equations[1];
    EXPECT_EQ(e.varied, sym::Symbol::value("phi", true));
    EXPECT_EQ(e.source, sym::parse("m^2*phi", spec.symbols));
    for (const auto& f : e.flux) EXPECT_TRUE(f.is_zero());
}

TEST(EulerLagrange, KleinGordonMismatchIsDetected)
{
    const auto spec = make_lagrangian("wrong sign", {"phi"}, {{"m", 1.0}, {"g_quartic", 0.0}}, minkowski,
                                      "d(phi,0)*conj(d(phi,0)) + d(phi,1)*conj(d(phi,1)) - m^2*phi*conj(phi)");
    EXPECT_NE(derive_euler_lagrange(spec), klein_gordon_system(minkowski));
}

TEST(Presets, MeanIntegrandIsTheKineticDensity)
{
    const auto L = complex_scalar_nonlocal(minkowski, 1.0, 0.1);
    const auto means = sym::collect_means(L.lagrangian);
    ASSERT_EQ(means.size(), 1u);
    EXPECT_EQ(means[0], sym::parse(presets::kinetic_text("phi", minkowski), L.symbols));
    EXPECT_TRUE(sym::collect_means(complex_scalar_local(minkowski, 1.0).lagrangian).empty());
}

TEST(Presets, LocalizedNonlocalPresetIsTheLocalOne)
{
    const auto L = localized(complex_scalar_nonlocal(minkowski, 1.0, 0.1, 0.2));
    EXPECT_EQ(L.lagrangian, sym::simplify(complex_scalar_local(minkowski, 1.0, 0.2).lagrangian));
}

// ---------------------------------------------------------------------------
// Lattice evaluation

TEST(LatticeEvaluator, AgreesWithPointwiseEvaluation)
{
    const auto l = scenario(16);
    const auto state = noise(l, 9);
    const auto spec = complex_scalar_nonlocal(minkowski, 1.3, 0.2, 0.7);
    LatticeEvaluator ev(state, spec.params);
    const auto values = ev.evaluate(spec.lagrangian);
    const auto theta = sym::collect_means(spec.lagrangian).front();
    const complex mean_theta = ev.mean_of(theta);
    for (std::size_t s : {0ul, 37ul, 100ul, 255ul}) {
        sym::SymbolBinding b;
        b.fields["phi"] = state.fields[0][s];
        for (int nu = 0; nu < 2; ++nu) b.derivs[{"phi", nu}] = ev.derivative("phi", std::size_t(nu))[s];
        for (const auto& [k, v] : spec.params) b.params[k] = v;
        b.means[sym::mean_key(theta)] = mean_theta;
        EXPECT_LE(std::abs(sym::evaluate(spec.lagrangian, b) - values[s]), 1e-12);
    }
}

TEST(LatticeEvaluator, ConjugateIsExact)
{
    const auto l = scenario(16);
    const auto state = noise(l, 2);
    LatticeEvaluator ev(state, {});
    sym::SymbolTable t{{"phi"}, {}};
    const auto c = ev.evaluate(sym::parse("conj(phi)", t));
    const auto cd = ev.evaluate(sym::parse("conj(d(phi,1))", t));
    for (std::size_t s = 0; s < c.size(); ++s) {
        ASSERT_EQ(c[s], std::conj(state.fields[0][s]));
        ASSERT_EQ(cd[s], std::conj(ev.derivative("phi", 1)[s]));
    }
}

TEST(LatticeEvaluator, MissingParameterIsAnError)
{
    const auto l = scenario(8);
    const auto state = noise(l, 1);
    LatticeEvaluator ev(state, {});
    EXPECT_THROW(ev.evaluate(sym::parse("m*phi", {{"phi"}, {"m"}})), sym::EvaluationError);
}

// ---------------------------------------------------------------------------
// Solver

TEST(Solver, ZeroDataStaysZero)
{
    const auto state = solve(scenario(32), {"zero"});
    EXPECT_EQ(state.fields[0].max_abs(), 0.0);
}

TEST(Solver, PlaneWaveAmplitudeDriftOverTenPeriods)
{
    const double k = 1.0, m = 1.0, omega = std::sqrt(k * k + m * m);
    const auto l = wave_lattice(10.0 * 2.0 * pi / omega, 2.0 * pi, 128);
    const auto state = solve(l, {"plane_wave", 1.0, k}, m);
    double drift = 0.0;
    for (const auto& z : state.fields[0].values()) drift = std::max(drift, std::abs(std::abs(z) - 1.0));
    EXPECT_LE(drift, 1e-3);
}

TEST(Solver, PlaneWaveDispersionConverges)
{
    const double k = 1.0, m = 1.0, omega = std::sqrt(k * k + m * m);
    const double T = 10.0 * 2.0 * pi / omega;
    std::vector<double> err;
    for (std::size_t nx : {64, 128, 256}) {
        const auto l = wave_lattice(T, 2.0 * pi, nx);
        const auto state = solve(l, {"plane_wave", 1.0, k}, m);
        const auto exact = LatticeField::generate(
            l, [&](std::size_t s) { return std::exp(complex(0.0, k * l->coordinate(s, 1) - omega * l->coordinate(s, 0))); });
        err.push_back((state.fields[0] - exact).max_abs());
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 1.8);
    EXPECT_GE(std::log2(err[1] / err[2]), 1.8);
}

TEST(Solver, HomogeneousModePhaseConverges)
{
    std::vector<double> err;
    for (std::size_t n : {64, 128, 256}) {
        const auto l = scenario(n);
        const auto state = solve(l, {"k0_mode"});
        const auto exact = LatticeField::generate(l, [&](std::size_t s) { return std::exp(complex(0.0, -l->coordinate(s, 0))); });
        err.push_back((state.fields[0] - exact).max_abs());
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 1.8);
    EXPECT_GE(std::log2(err[1] / err[2]), 1.8);
}

TEST(Solver, TimeReversal)
{
    const auto l = scenario(96);
    InitialCondition ic{"gaussian_packet", 1.0, 1.0, 2.0 * pi, 1.0};
    const auto fwd = solve(l, ic);
    const std::size_t m = l->layer_size(), nt = l->points(0);
    const auto v = fwd.fields[0].values();
    InitialLayers back{{v.begin() + std::ptrdiff_t((nt - 1) * m), v.end()},
                       {v.begin() + std::ptrdiff_t((nt - 2) * m), v.begin() + std::ptrdiff_t((nt - 1) * m)}};
    const auto rev = solve_klein_gordon(l, back, {1.0, 0.0});
    const auto r = rev.fields[0].values();
    double worst = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        worst = std::max(worst, std::abs(r[(nt - 1) * m + s] - v[s]));
        worst = std::max(worst, std::abs(r[(nt - 2) * m + s] - v[m + s]));
    }
    EXPECT_LE(worst, 1e-10);
}

TEST(Solver, CflViolationIsRejected)
{
    const auto l = make_lattice(Lattice::from_extent({16, 64}, {10.0, 2.0 * pi}, {Boundary::open, Boundary::periodic}, minkowski));
    EXPECT_THROW(solve(l, {"k0_mode"}), SolverError);
}

TEST(Solver, NonFiniteValuesAbortWithStep)
{
    const auto l = scenario(32);
    try {
        solve(l, {"plane_wave", 1e3, 1.0}, 1.0, 1e12);
        FAIL() << "expected the solver to abort";
    } catch (const SolverError& e) {
        EXPECT_GE(e.step(), 2u);
        EXPECT_LT(e.step(), l->points(0));
        EXPECT_NE(std::string(e.what()).find("step " + std::to_string(e.step())), std::string::npos);
    }
}

TEST(Solver, DirichletBoundaryIsHeld)
{
    const auto l = make_lattice(Lattice::from_extent({40, 32}, {1.0, 2.0 * pi}, {Boundary::open, Boundary::open}, minkowski));
    InitialCondition ic{"gaussian_packet", 1.0, 2.0, pi, 0.8};
    const auto state = solve(l, ic);
    const std::size_t m = l->layer_size();
    for (std::size_t n = 0; n < l->points(0); ++n) {
        EXPECT_EQ(state.fields[0][n * m], state.fields[0][0]);
        EXPECT_EQ(state.fields[0][n * m + m - 1], state.fields[0][m - 1]);
    }
}

TEST(Solver, WrongInitialLayerSize)
{
    const auto l = scenario(16);
    EXPECT_THROW(solve_klein_gordon(l, {std::vector<complex>(3), std::vector<complex>(3)}, {}), SolverError);
}

TEST(Solver, QuarticTermBoundsTheFrequencyShift)
{
    // A homogeneous mode with V = g|phi|^4 rotates at m^2 + 2 g |A|^2.
    const double g = 0.2, A = 0.7;
    const auto l = scenario(128);
    const double omega = std::sqrt(1.0 + 2.0 * g * A * A);
    InitialLayers init{std::vector<complex>(l->layer_size(), A),
                       std::vector<complex>(l->layer_size(), A * std::exp(complex(0.0, -omega * l->spacing(0))))};
    const auto state = solve_klein_gordon(l, init, {1.0, g});
    const auto exact = LatticeField::generate(l, [&](std::size_t s) { return A * std::exp(complex(0.0, -omega * l->coordinate(s, 0))); });
    EXPECT_LE((state.fields[0] - exact).max_abs(), 1e-3);
}

// ---------------------------------------------------------------------------
// Action and stationarity

TEST(Action, ZeroFieldGivesZero)
{
    const auto l = scenario(16);
    const auto state = FieldSystemState::single("phi", LatticeField(l));
    EXPECT_EQ(action(complex_scalar_nonlocal(minkowski, 1.0, 0.1), state), complex(0.0, 0.0));
}

TEST(Action, FluctuationTermIntegratesToZero)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto state = noise(scenario(24), seed);
        for (double lambda : {0.1, 0.5, 3.0}) {
            const complex a = action(complex_scalar_nonlocal(minkowski, 1.0, lambda, 0.3), state);
            const complex a0 = action(complex_scalar_local(minkowski, 1.0, 0.3), state);
            EXPECT_LE(std::abs(a - a0), 1e-12 * (1.0 + std::abs(a0)));
        }
    }
}

TEST(Action, RealForConjugateConsistentStates)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto state = noise(scenario(24), 100 + seed);
        const complex a = action(complex_scalar_nonlocal(minkowski, 1.0, 0.1, 0.3), state);
        EXPECT_LE(std::abs(a.imag()), 1e-12 * (1.0 + std::abs(a.real())));
    }
}

TEST(Stationarity, ZeroFieldIsExactlyStationary)
{
    const auto state = FieldSystemState::single("phi", LatticeField(scenario(16)));
    EXPECT_EQ(stationarity_residual(complex_scalar_nonlocal(minkowski, 1.0, 0.1), state), 0.0);
}

TEST(Stationarity, SampledExactSolutionConverges)
{
    std::vector<double> r;
    for (std::size_t n : {32, 64, 128}) {
        const auto l = scenario(n);
        const auto state = FieldSystemState::single(
            "phi", LatticeField::generate(l, [&](std::size_t s) { return std::exp(complex(0.0, -l->coordinate(s, 0))); }));
        r.push_back(stationarity_residual(complex_scalar_nonlocal(minkowski, 1.0, 0.1), state));
    }
    EXPECT_GE(std::log2(r[0] / r[1]), 1.8);
    EXPECT_GE(std::log2(r[1] / r[2]), 1.8);
}

TEST(Stationarity, SolverOutputConverges)
{
    std::vector<double> r;
    const InitialCondition ic{"gaussian_packet", 1.0, 1.0, 2.0 * pi, 1.0};
    for (std::size_t n : {64, 128, 256}) r.push_back(stationarity_residual(complex_scalar_nonlocal(minkowski, 1.0, 0.1), solve(scenario(n), ic)));
    EXPECT_GE(std::log2(r[0] / r[1]), 1.8);
    EXPECT_GE(std::log2(r[1] / r[2]), 1.8);
}

TEST(Stationarity, NoiseIsFarFromStationary)
{
    const auto l = scenario(64);
    const auto spec = complex_scalar_nonlocal(minkowski, 1.0, 0.1);
    const double solved = stationarity_residual(spec, solve(l, {"gaussian_packet", 1.0, 1.0, 2.0 * pi, 1.0}));
    const double random = stationarity_residual(spec, noise(l, 4));
    EXPECT_GE(random, 1e3 * solved);
}
