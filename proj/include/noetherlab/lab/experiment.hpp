#pragma once

#include "noetherlab/gauge.hpp"
#include "noetherlab/lab/config.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace nlab::lab {

inline constexpr const char* tool_version = "1.0.0";

enum class Status { pass, fail, skipped, info };

inline const char* to_string(Status s)
{
    switch (s) {
        case Status::pass: return "pass";
        case Status::fail: return "fail";
        case Status::skipped: return "skipped";
        case Status::info: return "info";
    }
    return "?";
}

/// One verified relation. `comparison` says how value and threshold relate
/// for a pass ("<=", ">=", "==", ...).
struct CheckRecord {
    std::string name;
    std::string tag;
    Status status = Status::info;
    json value;
    json threshold;
    std::string comparison;
    std::string detail;
};

struct ConvergenceRow {
    std::size_t grid_n = 0;
    double error = 0.0;
    std::optional<double> order;  // against the previous row
};

struct ConvergenceTable {
    std::string name;
    std::string tag;
    std::string metric;
    std::vector<ConvergenceRow> rows;
    double fitted_order = 0.0;
    double threshold = 0.0;
    Status status = Status::info;
    std::string detail;
};

struct FieldDump {
    std::string name;
    LatticeField field;
};

struct Report {
    json config;
    json derivation = json::object();
    json simulation = json::object();
    json diagnostics = json::object();
    std::vector<CheckRecord> checks;
    std::vector<ConvergenceTable> convergence;
    std::vector<FieldDump> fields;
    std::vector<std::string> errors;

    std::size_t count(Status s) const
    {
        std::size_t n = 0;
        for (const auto& c : checks) n += c.status == s;
        for (const auto& t : convergence) n += t.status == s;
        return n;
    }

    /// True when every executed check passed and nothing aborted.
    bool ok() const { return errors.empty() && count(Status::fail) == 0; }

    const CheckRecord* find(const std::string& name) const
    {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    const ConvergenceTable* find_table(const std::string& name) const
    {
        for (const auto& t : convergence)
            if (t.name == name) return &t;
        return nullptr;
    }
};

/// JSON number, or null when not finite.
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline json num(complex z) { return json{{"re", num(z.real())}, {"im", num(z.imag())}}; }

/// Pairwise orders log(e_i-1 / e_i) / log(n_i / n_i-1) and the least-squares
/// slope of -log e against log n.
inline void fit_orders(ConvergenceTable& t)
{
    std::vector<double> n, e;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        auto& r = t.rows[i];
        if (i > 0 && r.error > 0.0 && t.rows[i - 1].error > 0.0)
            r.order = std::log(t.rows[i - 1].error / r.error) / std::log(double(r.grid_n) / double(t.rows[i - 1].grid_n));
        n.push_back(double(r.grid_n));
        e.push_back(r.error);
    }
    bool positive = !e.empty();
    for (double x : e) positive = positive && x > 0.0;
    t.fitted_order = positive ? -loglog_slope(n, e) : std::numeric_limits<double>::quiet_NaN();
}

/// Passes when the fitted order reaches the threshold, or when the finest
/// error is already below the round-off floor.
inline void judge_order(ConvergenceTable& t, double threshold, double roundoff_floor)
{
    t.threshold = threshold;
    fit_orders(t);
    if (t.rows.size() < 2) {
        t.status = Status::skipped;
        t.detail = "needs at least two levels";
        return;
    }
    const double finest = t.rows.back().error;
    if (finest <= roundoff_floor) {
        t.status = Status::pass;
        t.detail = "finest error below round-off floor";
        return;
    }
    t.status = t.fitted_order >= threshold ? Status::pass : Status::fail;
}

namespace detail {

inline CheckRecord check_le(std::string name, std::string tag, double value, double threshold, std::string detail = {})
{
    return {std::move(name), std::move(tag), value <= threshold ? Status::pass : Status::fail, num(value),
            num(threshold), "<=", std::move(detail)};
}

inline CheckRecord check_ge(std::string name, std::string tag, double value, double threshold, std::string detail = {})
{
    return {std::move(name), std::move(tag), value >= threshold ? Status::pass : Status::fail, num(value),
            num(threshold), ">=", std::move(detail)};
}

inline CheckRecord info(std::string name, std::string tag, json value, std::string detail = {})
{
    return {std::move(name), std::move(tag), Status::info, std::move(value), nullptr, "", std::move(detail)};
}

inline CheckRecord skipped(std::string name, std::string tag, std::string why)
{
    return {std::move(name), std::move(tag), Status::skipped, nullptr, nullptr, "", std::move(why)};
}

inline json equations_to_json(const ELSystem& sys)
{
    json arr = json::array();
    for (const auto& eq : sys.equations) {
        json flux = json::array();
        for (const auto& f : eq.flux) flux.push_back(sym::to_string(f));
        arr.push_back({{"varied", describe(eq.varied)}, {"source", sym::to_string(eq.source)}, {"flux", flux}});
    }
    return arr;
}

inline TransformationSpec build_transformation(const ExperimentConfig& cfg, const LagrangianSpec& spec)
{
    if (cfg.transformation.preset == "u1") return u1_transformation(spec.fields(), cfg.transformation.epsilon);
    try {
        return custom_transformation(spec, cfg.transformation.generators, cfg.transformation.epsilon);
    } catch (const std::exception& e) {
        throw ConfigValidationError("transformation.generators", e.what());
    }
}

/// Uniform complex noise in the unit square, one field per declared field.
inline FieldSystemState noise_state(const LatticePtr& l, const std::vector<std::string>& fields, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    FieldSystemState s;
    s.lattice = l;
    s.names = fields;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        LatticeField f(l);
        for (auto& z : f.values()) {
            const double re = U(rng);
            const double im = U(rng);
            z = complex(re, im);
        }
        s.fields.push_back(std::move(f));
    }
    return s;
}

inline FieldSystemState solve_for(const LagrangianSpec& spec, const LatticePtr& l, const InitialCondition& ic)
{
    if (spec.fields().size() != 1)
        throw SolverError("the Klein-Gordon solver evolves exactly one complex field");
    const auto p = kg_params(spec);
    return solve_klein_gordon(l, make_initial_layers(*l, ic, p), p, spec.fields().front());
}

struct Context {
    const ExperimentConfig& cfg;
    Report& report;
    LagrangianSpec spec;
    TransformationSpec transform;
    bool preset = false;
    bool nonlocal_preset = false;
};

inline void derive_stage(Context& c)
{
    const auto& spec = c.spec;
    const ELSystem el = derive_euler_lagrange(spec);
    json d;
    d["lagrangian"] = sym::to_string(spec.lagrangian);
    d["fields"] = spec.fields();
    d["euler_lagrange"] = equations_to_json(el);
    json flux = json::array();
    for (const auto& e : flux_expressions(spec, c.transform)) flux.push_back(sym::to_string(e));
    d["noether_flux"] = flux;
    c.report.derivation = d;

    const bool kg = el == klein_gordon_system(spec.signature);
    if (c.preset) {
        c.report.checks.push_back({"euler_lagrange_is_klein_gordon", "el-equivalence", kg ? Status::pass : Status::fail,
                                   kg, true, "==", "structural match after simplification"});
        const auto local = complex_scalar_local(spec.signature, spec.param("m"), spec.param("g_quartic"));
        const bool same = el == derive_euler_lagrange(local);
        c.report.checks.push_back({"euler_lagrange_matches_local", "el-equivalence", same ? Status::pass : Status::fail,
                                   same, true, "==", "system of L equals system of the local Lagrangian"});
    } else {
        c.report.checks.push_back(info("euler_lagrange_is_klein_gordon", "el-equivalence", kg,
                                       "custom Lagrangian: informational"));
    }
}

struct SimResult {
    FieldSystemState state;
    double stationarity = 0.0;
    bool on_shell = false;
};

inline std::optional<SimResult> simulate_stage(Context& c)
{
    const auto& cfg = c.cfg;
    auto& rep = c.report;
    const auto lattice = make_lattice(cfg.lattice.build());
    SimResult sim;
    try {
        sim.state = solve_for(c.spec, lattice, cfg.initial);
    } catch (const SolverError& e) {
        rep.checks.push_back({"solver", "stability", Status::fail, json{{"step", e.step()}}, nullptr, "", e.what()});
        rep.errors.push_back(e.what());
        return std::nullopt;
    }
    sim.stationarity = stationarity_residual(c.spec, sim.state);
    sim.on_shell = sim.stationarity <= cfg.thresholds.on_shell;
    const complex A = action(c.spec, sim.state);
    json spacing = json::array();
    for (std::size_t mu = 0; mu < lattice->dims(); ++mu) spacing.push_back(lattice->spacing(mu));
    rep.simulation = {{"points", cfg.lattice.points},
                      {"spacing", spacing},
                      {"volume", lattice->volume()},
                      {"stationarity_residual", num(sim.stationarity)},
                      {"on_shell", sim.on_shell},
                      {"action", num(A)},
                      {"max_abs_phi", num(sim.state.fields.front().max_abs())}};
    rep.checks.push_back(check_le("on_shell_gate", "on-shell", sim.stationarity, cfg.thresholds.on_shell,
                                  "interior RMS of the Euler-Lagrange residual"));
    rep.checks.push_back(check_le("action_is_real", "action-reality", std::abs(A.imag()),
                                  cfg.thresholds.reality * (1.0 + std::abs(A.real())), "|Im A| <= tol * (1 + |Re A|)"));
    if (c.nonlocal_preset) {
        const auto local = complex_scalar_local(c.spec.signature, c.spec.param("m"), c.spec.param("g_quartic"));
        auto identity = [&](const FieldSystemState& s, const std::string& name, const std::string& what) {
            const complex a = action(c.spec, s), a0 = action(local, s);
            rep.checks.push_back(check_le(name, "action-identity", std::abs(a - a0),
                                          cfg.thresholds.action_identity * (1.0 + std::abs(a0)), what));
        };
        identity(sim.state, "action_identity_solution", "|A(L) - A(L0)| on the solved state");
        identity(noise_state(lattice, c.spec.fields(), cfg.gauge.seed), "action_identity_noise",
                 "|A(L) - A(L0)| on a random off-shell state");
    }
    return sim;
}

inline void verify_stage(Context& c, const SimResult& sim)
{
    const auto& cfg = c.cfg;
    const auto& T = cfg.thresholds;
    auto& rep = c.report;
    static const char* names[] = {"flux_is_real", "residual_is_real", "zero_mean_closed_form", "zero_mean_measured",
                                  "localization_contradiction", "gauge_roundtrip", "gauge_zero_mean",
                                  "local_covariance", "global_phase_invariance"};
    if (!sim.on_shell) {
        for (const char* n : names) rep.checks.push_back(skipped(n, "verification", "state is off-shell"));
        return;
    }
    const auto& state = sim.state;
    const auto& l = *state.lattice;
    const auto J = noether_flux(c.spec, c.transform, state);
    const auto divJ = measured_residual(J);
    rep.fields.push_back({"residual_measured", divJ});

    if (c.preset) {
        double imag = 0.0;
        for (const auto& comp : J.components) imag = std::max(imag, comp.max_abs_imag());
        rep.checks.push_back(check_le("flux_is_real", "flux-reality", imag, T.reality, "max per-site |Im J|"));
    } else {
        rep.checks.push_back(skipped("flux_is_real", "flux-reality", "custom Lagrangian"));
    }

    const auto zm_measured = zero_mean_check(divJ, T.zero_mean);
    rep.checks.push_back(check_le("zero_mean_measured", "zero-mean", zm_measured.relative, T.zero_mean,
                                  "|integral of div J| / integral of |div J|"));

    if (!c.preset) {
        for (const char* n : {"residual_is_real", "zero_mean_closed_form", "localization_contradiction",
                              "gauge_roundtrip", "gauge_zero_mean"})
            rep.checks.push_back(skipped(n, "verification", "closed-form residual needs a complex scalar preset"));
    } else {
        const double lambda = c.nonlocal_preset ? c.spec.param("lambda") : 0.0;
        const auto F = closed_form_residual(c.spec, state);
        rep.fields.push_back({"residual_closed_form", F});
        rep.fields.push_back({"balance_difference", divJ - F});
        rep.checks.push_back(check_le("residual_is_real", "residual-reality", F.max_abs_imag(), T.reality,
                                      "max per-site |Im F|"));

        const auto zm = zero_mean_check(F, T.zero_mean_closed);
        rep.diagnostics["zero_mean_closed_form"] = {{"integral", num(zm.integral)}, {"integral_abs", num(zm.abs_integral)},
                                                    {"relative", num(zm.relative)}, {"threshold", T.zero_mean_closed}};
        rep.diagnostics["zero_mean_measured"] = {{"integral", num(zm_measured.integral)},
                                                 {"integral_abs", num(zm_measured.abs_integral)},
                                                 {"relative", num(zm_measured.relative)}, {"threshold", T.zero_mean}};
        rep.checks.push_back(check_le("zero_mean_closed_form", "zero-mean", zm.relative, T.zero_mean_closed,
                                      zm.abs_integral > 0.0 ? "|integral of F| / integral of |F|"
                                                            : "F vanishes identically"));

        const double floor = discretization_floor(c.spec, c.transform, state);
        const auto cr = localization_contradiction_report(J, F, floor, T.contradiction_ratio);
        rep.diagnostics["localization_contradiction"] = {
            {"integral_divergence", num(cr.integral_divergence)},
            {"mean_divergence", num(cr.mean_divergence)},
            {"max_divergence", num(cr.max_divergence)},
            {"discretization_floor", num(cr.floor)},
            {"raw_ratio", num(cr.raw_ratio)},
            {"ratio", num(cr.ratio)},
            {"balance_rms", num(cr.balance_rms)},
            {"localized_assumption_fails", cr.localized_assumption_fails}};
        rep.checks.push_back(info("balance_rms", "nonlocal-balance", num(cr.balance_rms),
                                  "interior RMS(div J - F_closed) on the main grid"));
        if (lambda != 0.0)
            rep.checks.push_back(check_ge("localization_contradiction", "localization-contradiction", cr.ratio,
                                          T.contradiction_ratio, "max |div J| / max(mean div J, floor); flag expected"));
        else
            rep.checks.push_back({"localization_contradiction", "localization-contradiction",
                                  cr.ratio < T.null_ratio ? Status::pass : Status::fail, num(cr.ratio),
                                  num(T.null_ratio), "<", "lambda = 0: flag must stay absent"});

        // Gauge reconstruction at the configured factor, then a sweep.
        const auto& phi = state.fields.front();
        const double e = cfg.parameters.e;
        const double f = cfg.local_factor();
        const auto G = reconstruct_gauge_field(phi, lambda, e, f);
        const auto Fg = residual_from_gauge(phi, G, e, f);
        rep.checks.push_back(check_le("gauge_roundtrip", "gauge-roundtrip", relative_rms(Fg, F), T.roundtrip,
                                      "relative RMS of residual_from_gauge against F_closed"));
        const auto zg = zero_mean_check(Fg, T.zero_mean_closed);
        rep.checks.push_back(check_le("gauge_zero_mean", "zero-mean", zg.relative, T.zero_mean_closed,
                                      "zero mean of the gauge-reconstructed residual"));
        const auto masked = recover_potential(G, phi);
        json products = json::array();
        for (std::size_t mu = 0; mu < l.dims(); ++mu)
            products.push_back({{"axis", mu}, {"a_phi", num(G.a_phi[mu][0])}, {"a_phi_conj", num(G.a_phi_conj[mu][0])}});
        rep.diagnostics["gauge"] = {{"local_factor", f}, {"products", products}, {"masked_sites", masked.masked_sites}};
        json sweep = json::array();
        double worst = 0.0;
        for (double lam : cfg.gauge.roundtrip_lambdas) {
            const auto Fl = closed_form_residual(phi, lam);
            for (double fac : {1.0 - lam, 1.0 + lam}) {
                if (fac == 0.0) continue;
                const double r = relative_rms(residual_from_gauge(phi, reconstruct_gauge_field(phi, lam, e, fac), e, fac), Fl);
                worst = std::max(worst, r);
                sweep.push_back({{"lambda", lam}, {"local_factor", fac}, {"relative_rms", num(r)}});
            }
        }
        rep.diagnostics["gauge"]["roundtrip_sweep"] = sweep;
        rep.checks.push_back(check_le("gauge_roundtrip_sweep", "gauge-roundtrip", worst, T.roundtrip,
                                      "worst relative RMS over lambda and local_factor in {1-lambda, 1+lambda}"));
    }

    // Local covariance with a smooth random gauge parameter and potential.
    {
        GaugePotential A;
        A.coupling = cfg.parameters.e;
        for (std::size_t nu = 0; nu < l.dims(); ++nu)
            A.components.push_back(smooth_gauge_parameter(state.lattice, 0.1, cfg.gauge.seed + 1 + nu));
        const auto shape = smooth_gauge_parameter(state.lattice, 1.0, cfg.gauge.seed);
        const auto cov = covariance_check(state.fields.front(), A, shape, cfg.gauge.covariance_amplitudes,
                                          T.covariance_exponent);
        json samples = json::array();
        for (const auto& s : cov.samples)
            samples.push_back({{"amplitude", s.amplitude}, {"defect", num(s.raw)}, {"even_part", num(s.even)},
                               {"floor_part", num(s.odd)}});
        rep.diagnostics["local_covariance"] = {{"samples", samples},
                                               {"fitted_exponent", num(cov.fitted_exponent)},
                                               {"raw_fitted_exponent", num(cov.raw_fitted_exponent)}};
        rep.checks.push_back({"local_covariance", "local-covariance", cov.pass ? Status::pass : Status::fail,
                              num(cov.fitted_exponent), json{{"target", 2.0}, {"tolerance", T.covariance_exponent}},
                              "|x - target| <=", "exponent of the eps-even part of the covariance defect"});
    }

    // Global invariance: exact finite phase rotations, then the first-order map.
    {
        double worst = 0.0, tol = 0.0;
        json rows = json::array();
        for (double p : cfg.transformation.phases) {
            const auto r = global_phase_invariance(c.spec, state, p, T.invariance);
            rows.push_back({{"phi0", p}, {"delta", num(r.abs_delta)}, {"tolerance", num(r.tolerance)}});
            worst = std::max(worst, r.abs_delta);
            tol = r.tolerance;
        }
        rep.diagnostics["global_invariance"] = rows;
        rep.checks.push_back(check_le("global_phase_invariance", "global-invariance", worst, tol,
                                      "|A(exp(-i phi0) phi) - A(phi)| <= tol * (1 + |A|)"));
        const auto fo = first_order_invariance_check(c.spec, c.transform, state, cfg.transformation.epsilon);
        rep.checks.push_back(info("first_order_invariance", "global-invariance",
                                  {{"epsilon", fo.epsilon}, {"abs_delta", num(fo.abs_delta)},
                                   {"per_epsilon", num(fo.per_epsilon)}, {"per_epsilon_sq", num(fo.per_epsilon_sq)}},
                                  "action change under phi -> (1 + eps Phi) phi"));
    }
}

inline void convergence_stage(Context& c)
{
    const auto& cfg = c.cfg;
    const auto& T = cfg.thresholds;
    auto& rep = c.report;
    auto table = [](std::string name, std::string tag, std::string metric) {
        ConvergenceTable t;
        t.name = std::move(name);
        t.tag = std::move(tag);
        t.metric = std::move(metric);
        return t;
    };
    auto balance = table("nonlocal_balance", "nonlocal-balance", "interior RMS(div J - F_closed)");
    auto conserve = table("local_conservation", "local-conservation", "interior max |div J| of the localized Lagrangian");
    auto stat = table("stationarity", "stationarity", "interior RMS of the Euler-Lagrange residual");
    auto zmean = table("zero_mean_measured", "zero-mean", "|integral of div J| / integral of |div J|");
    const auto local = localized(c.spec);
    for (std::size_t n : cfg.convergence.levels) {
        const auto lattice = make_lattice(cfg.lattice.build(n));
        FieldSystemState state;
        try {
            state = solve_for(c.spec, lattice, cfg.convergence.initial);
        } catch (const SolverError& e) {
            rep.errors.push_back("convergence level " + std::to_string(n) + ": " + e.what());
            return;
        }
        stat.rows.push_back({n, stationarity_residual(c.spec, state), std::nullopt});
        const auto interior = SubRegion::interior(*lattice);
        const auto divJ = measured_residual(noether_flux(c.spec, c.transform, state));
        zmean.rows.push_back({n, zero_mean_check(divJ).relative, std::nullopt});
        conserve.rows.push_back(
            {n, measured_residual(noether_flux(local, c.transform, state)).max_abs(interior), std::nullopt});
        if (c.preset) balance.rows.push_back({n, (divJ - closed_form_residual(c.spec, state)).rms(interior), std::nullopt});
    }
    judge_order(stat, T.stationarity_order, T.roundoff_floor);
    judge_order(zmean, T.balance_order, T.roundoff_floor);
    judge_order(conserve, T.conservation_order, T.roundoff_floor);
    if (c.preset) {
        judge_order(balance, T.balance_order, T.roundoff_floor);
        rep.convergence.push_back(balance);
    }
    rep.convergence.push_back(conserve);
    rep.convergence.push_back(stat);
    rep.convergence.push_back(zmean);
}

}  // namespace detail

/// Runs the pipeline selected by cfg.pipeline: derive, then simulate, then
/// verify, then (for "all") the refinement study.
inline Report run_experiment(const ExperimentConfig& cfg)
{
    Report rep;
    rep.config = config_to_json(cfg);
    detail::Context c{cfg, rep, build_lagrangian(cfg), {}};
    c.transform = detail::build_transformation(cfg, c.spec);
    c.preset = has_closed_form_residual(c.spec) && c.transform.name == "u1";
    c.nonlocal_preset = c.spec.preset == presets::complex_scalar_nonlocal;

    const int level = cfg.pipeline == "derive" ? 0 : cfg.pipeline == "simulate" ? 1 : cfg.pipeline == "verify" ? 2 : 3;
    detail::derive_stage(c);
    if (level < 1) return rep;
    const auto sim = detail::simulate_stage(c);
    if (!sim) return rep;
    if (level < 2) return rep;
    detail::verify_stage(c, *sim);
    if (level < 3) return rep;
    detail::convergence_stage(c);
    return rep;
}

}  // namespace nlab::lab
