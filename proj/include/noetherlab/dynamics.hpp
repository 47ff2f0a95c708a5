#pragma once

#include "noetherlab/lattice.hpp"
#include "noetherlab/symlang.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nlab {

using sym::Expr;

/// A named field system: declared fields, parameter values, the metric
/// signature the kinetic terms were written for, and the Lagrangian density.
struct LagrangianSpec {
    std::string name;
    std::string preset;  // empty for user-supplied text
    sym::SymbolTable symbols;
    std::map<std::string, double> params;
    std::vector<int> signature;
    Expr lagrangian;

    const std::vector<std::string>& fields() const { return symbols.fields; }

    double param(const std::string& key) const
    {
        auto it = params.find(key);
        if (it == params.end()) throw std::invalid_argument("parameter '" + key + "' is not set");
        return it->second;
    }
};

namespace presets {

inline constexpr const char* complex_scalar_nonlocal = "complex_scalar_nonlocal";
inline constexpr const char* complex_scalar_local = "complex_scalar_local";

/// g^{mu nu} d_mu phi d_nu phi* with the diagonal metric written out.
inline std::string kinetic_text(const std::string& f, const std::vector<int>& signature)
{
    std::string out;
    for (std::size_t mu = 0; mu < signature.size(); ++mu) {
        const std::string d = "d(" + f + "," + std::to_string(mu) + ")";
        if (mu) out += " + ";
        if (signature[mu] < 0) out += "-1*";
        out += d + "*conj(" + d + ")";
    }
    return out;
}

inline std::string local_text(const std::vector<int>& signature)
{
    return kinetic_text("phi", signature) + " - m^2*phi*conj(phi) - g_quartic*(phi*conj(phi))^2";
}

inline std::string nonlocal_text(const std::vector<int>& signature)
{
    const std::string theta = "(" + kinetic_text("phi", signature) + ")";
    return local_text(signature) + " - lambda*(" + theta + " - mean" + theta + ")";
}

}  // namespace presets

inline LagrangianSpec make_lagrangian(std::string name, std::vector<std::string> fields,
                                      std::map<std::string, double> params, std::vector<int> signature,
                                      const std::string& text, std::string preset = {})
{
    LagrangianSpec spec;
    spec.name = std::move(name);
    spec.preset = std::move(preset);
    spec.symbols.fields = std::move(fields);
    for (const auto& [k, v] : params) spec.symbols.params.push_back(k);
    for (const auto& f : spec.symbols.fields)
        if (spec.symbols.is_param(f)) throw std::invalid_argument("'" + f + "' declared as both field and parameter");
    spec.params = std::move(params);
    spec.signature = std::move(signature);
    spec.lagrangian = sym::parse(text, spec.symbols);
    return spec;
}

/// Complex scalar with quartic self-interaction and the domain-mean
/// fluctuation term lambda*(theta - mean(theta)) subtracted.
inline LagrangianSpec complex_scalar_nonlocal(const std::vector<int>& signature, double mass, double lambda,
                                              double quartic = 0.0)
{
    return make_lagrangian("complex scalar with kinetic fluctuation term", {"phi"},
                           {{"m", mass}, {"lambda", lambda}, {"g_quartic", quartic}}, signature,
                           presets::nonlocal_text(signature), presets::complex_scalar_nonlocal);
}

/// The same system without the fluctuation term.
inline LagrangianSpec complex_scalar_local(const std::vector<int>& signature, double mass, double quartic = 0.0)
{
    return make_lagrangian("free complex scalar", {"phi"}, {{"m", mass}, {"g_quartic", quartic}}, signature,
                           presets::local_text(signature), presets::complex_scalar_local);
}

/// Same spec with every mean(g) replaced by g.
inline LagrangianSpec localized(const LagrangianSpec& spec)
{
    LagrangianSpec out = spec;
    out.name = spec.name + " (localized)";
    out.preset.clear();
    out.lagrangian = sym::simplify(sym::localize(spec.lagrangian));
    return out;
}

/// One lattice field per declared field; conjugates are never stored, so
/// conj(phi) is the exact conjugate of phi at every site.
struct FieldSystemState {
    LatticePtr lattice;
    std::vector<std::string> names;
    std::vector<LatticeField> fields;

    const LatticeField& field(const std::string& n) const
    {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return fields[i];
        throw std::invalid_argument("state has no field '" + n + "'");
    }

    static FieldSystemState single(const std::string& name, LatticeField f)
    {
        FieldSystemState s;
        s.lattice = f.lattice_ptr();
        s.names = {name};
        s.fields = {std::move(f)};
        return s;
    }
};

/// Evaluates expressions at every site of a state. Means are resolved in two
/// passes: first every mean integrand is integrated over the domain, then the
/// expression is evaluated pointwise with those constants bound.
class LatticeEvaluator {
public:
    LatticeEvaluator(const FieldSystemState& state, std::map<std::string, double> params)
        : state_(state), params_(std::move(params))
    {
        const Lattice& l = *state.lattice;
        for (std::size_t i = 0; i < state.names.size(); ++i) {
            std::vector<LatticeField> g;
            for (std::size_t nu = 0; nu < l.dims(); ++nu) g.push_back(gradient(state.fields[i], nu));
            grads_.emplace(state.names[i], std::move(g));
        }
    }

    const FieldSystemState& state() const { return state_; }

    const LatticeField& derivative(const std::string& f, std::size_t nu) const
    {
        auto it = grads_.find(f);
        if (it == grads_.end()) throw sym::EvaluationError("unbound field '" + f + "'");
        if (nu >= it->second.size())
            throw sym::EvaluationError("derivative axis " + std::to_string(nu) + " out of range");
        return it->second[nu];
    }

    /// Domain mean of a mean-free integrand, cached by its DSL text.
    complex mean_of(const Expr& integrand)
    {
        const std::string key = sym::mean_key(integrand);
        if (auto it = means_.find(key); it != means_.end()) return it->second;
        const complex v = domain_mean(evaluate_local(integrand));
        means_.emplace(key, v);
        return v;
    }

    LatticeField evaluate(const Expr& e)
    {
        for (const auto& g : sym::collect_means(e)) mean_of(g);
        return evaluate_local(e);
    }

private:
    struct Compiled {
        sym::Kind kind = sym::Kind::Const;
        complex value{};
        const complex* data = nullptr;
        std::size_t axis = 0;
        int exponent = 1;
        std::vector<Compiled> children;
    };

    Compiled compile(const Expr& e) const
    {
        Compiled c;
        c.kind = e.kind();
        switch (e.kind()) {
            case sym::Kind::Const:
                c.value = e.value();
                break;
            case sym::Kind::Param: {
                auto it = params_.find(e.name());
                if (it == params_.end()) throw sym::EvaluationError("unbound parameter '" + e.name() + "'");
                c.value = it->second;
                break;
            }
            case sym::Kind::Coord:
                if (e.axis() < 0 || std::size_t(e.axis()) >= state_.lattice->dims())
                    throw sym::EvaluationError("coordinate axis out of range");
                c.axis = std::size_t(e.axis());
                break;
            case sym::Kind::Field:
                c.data = state_.field(e.name()).values().data();
                break;
            case sym::Kind::FieldDeriv:
                if (e.axis() < 0) throw sym::EvaluationError("negative derivative axis");
                c.data = derivative(e.name(), std::size_t(e.axis())).values().data();
                break;
            case sym::Kind::Mean: {
                auto it = means_.find(sym::mean_key(e.child()));
                if (it == means_.end()) throw sym::EvaluationError("unbound mean(" + sym::mean_key(e.child()) + ")");
                c.value = it->second;
                break;
            }
            case sym::Kind::Power:
                c.exponent = e.exponent();
                [[fallthrough]];
            default:
                for (const auto& ch : e.children()) c.children.push_back(compile(ch));
        }
        return c;
    }

    complex run(const Compiled& c, std::size_t s) const
    {
        switch (c.kind) {
            case sym::Kind::Const:
            case sym::Kind::Param:
            case sym::Kind::Mean:
                return c.value;
            case sym::Kind::Coord:
                return state_.lattice->coordinate(s, c.axis);
            case sym::Kind::Field:
            case sym::Kind::FieldDeriv:
                return c.data[s];
            case sym::Kind::Conj:
                return std::conj(run(c.children[0], s));
            case sym::Kind::Sum: {
                complex acc(0.0, 0.0);
                for (const auto& ch : c.children) acc += run(ch, s);
                return acc;
            }
            case sym::Kind::Product: {
                complex acc(1.0, 0.0);
                for (const auto& ch : c.children) acc *= run(ch, s);
                return acc;
            }
            case sym::Kind::Power: {
                const complex b = run(c.children[0], s);
                complex acc(1.0, 0.0);
                for (int k = 0; k < std::abs(c.exponent); ++k) acc *= b;
                return c.exponent < 0 ? complex(1.0, 0.0) / acc : acc;
            }
        }
        return {};
    }

    LatticeField evaluate_local(const Expr& e) const
    {
        const Compiled c = compile(e);
        return LatticeField::generate(state_.lattice, [&](std::size_t s) { return run(c, s); });
    }

    const FieldSystemState& state_;
    std::map<std::string, double> params_;
    std::map<std::string, std::vector<LatticeField>> grads_;
    std::map<std::string, complex> means_;
};

// ---------------------------------------------------------------------------
// Euler-Lagrange equations

/// E = source - d/dx^nu flux[nu], obtained by varying `varied`. The outer
/// derivative is applied on the lattice when the equation is evaluated.
struct ELEquation {
    sym::Symbol varied;
    Expr source;
    std::vector<Expr> flux;

    friend bool operator==(const ELEquation&, const ELEquation&) = default;
};

struct ELSystem {
    std::vector<ELEquation> equations;

    friend bool operator==(const ELSystem&, const ELSystem&) = default;
};

inline std::string describe(const sym::Symbol& s) { return sym::to_string(s.as_expr()); }

/// Functional derivatives of the action with respect to each field and its
/// conjugate. A term c*mean(g) contributes c*g to the variation, so the mean
/// part of a fluctuation term lambda*(theta - mean(theta)) cancels exactly.
inline ELSystem derive_euler_lagrange(const LagrangianSpec& spec)
{
    const std::size_t dims = spec.signature.size();
    ELSystem sys;
    for (const auto& f : spec.fields()) {
        for (bool conj : {false, true}) {
            ELEquation eq;
            eq.varied = sym::Symbol::value(f, conj);
            eq.source = sym::differentiate(spec.lagrangian, eq.varied).variational();
            for (std::size_t nu = 0; nu < dims; ++nu)
                eq.flux.push_back(
                    sym::differentiate(spec.lagrangian, sym::Symbol::deriv(f, int(nu), conj)).variational());
            sys.equations.push_back(std::move(eq));
        }
    }
    return sys;
}

/// Expected system for (box + m^2) phi = -dV/dphi* with V = g (phi phi*)^2,
/// parsed from its closed form.
inline ELSystem klein_gordon_system(const std::vector<int>& signature, const std::string& field = "phi",
                                    const std::string& mass = "m", const std::string& quartic = "g_quartic")
{
    sym::SymbolTable t{{field}, {mass, quartic}};
    ELSystem sys;
    for (bool conj : {false, true}) {
        // Varying phi yields the equation for phi*, and vice versa.
        const std::string other = conj ? field : "conj(" + field + ")";
        ELEquation eq;
        eq.varied = sym::Symbol::value(field, conj);
        eq.source = sym::simplify(sym::parse(
            "-1*" + mass + "^2*" + other + " - 2*" + quartic + "*" + field + "*conj(" + field + ")*" + other, t));
        for (std::size_t nu = 0; nu < signature.size(); ++nu) {
            const std::string d = "d(" + field + "," + std::to_string(nu) + ")";
            const std::string dv = conj ? d : "conj(" + d + ")";
            eq.flux.push_back(sym::simplify(sym::parse(std::to_string(signature[nu]) + "*" + dv, t)));
        }
        sys.equations.push_back(std::move(eq));
    }
    return sys;
}

/// Pointwise value of each Euler-Lagrange expression on the lattice.
inline std::vector<LatticeField> euler_lagrange_fields(const ELSystem& sys, LatticeEvaluator& ev)
{
    std::vector<LatticeField> out;
    for (const auto& eq : sys.equations) {
        std::vector<LatticeField> flux;
        for (const auto& f : eq.flux) flux.push_back(ev.evaluate(f));
        out.push_back(ev.evaluate(eq.source) - divergence(flux));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Klein-Gordon time stepping

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& msg, std::size_t step = 0) : std::runtime_error(msg), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

struct KleinGordonParams {
    double mass = 1.0;
    double quartic = 0.0;  // V = quartic * (phi phi*)^2
    double cfl = 0.5;      // required dt <= cfl * min spatial spacing
};

/// Values of the first two time layers, each of lattice.layer_size() sites.
struct InitialLayers {
    std::vector<complex> first;
    std::vector<complex> second;
};

namespace detail {

// -g^{00} [ sum_{mu>=1} g^{mu mu} d^2_mu phi + m^2 phi + dV/dphi* ] on one
// layer: the value of d^2 phi / dt^2 demanded by the field equation. Open
// spatial boundary sites are held fixed and get 0.
inline void kg_acceleration(const Lattice& l, std::span<const complex> layer, const KleinGordonParams& p,
                            std::span<complex> out)
{
    const std::size_t d = l.dims();
    const double g00 = l.metric(0);
    parallel_for(layer.size(), [&](std::size_t s) {
        complex lap(0.0, 0.0);
        for (std::size_t mu = 1; mu < d; ++mu) {
            const std::size_t n = l.points(mu);
            const std::size_t st = l.stride(mu);
            const std::size_t i = (s / st) % n;
            const std::size_t base = s - i * st;
            if (l.boundary(mu) == Boundary::open) {
                if (i == 0 || i + 1 == n) {
                    out[s] = 0.0;
                    return;
                }
                lap += double(l.metric(mu)) * ((layer[base + (i + 1) * st] - layer[s]) -
                                               (layer[s] - layer[base + (i - 1) * st])) /
                       (l.spacing(mu) * l.spacing(mu));
            } else {
                lap += double(l.metric(mu)) * ((layer[base + ((i + 1) % n) * st] - layer[s]) -
                                               (layer[s] - layer[base + ((i + n - 1) % n) * st])) /
                       (l.spacing(mu) * l.spacing(mu));
            }
        }
        const complex phi = layer[s];
        const complex dv = 2.0 * p.quartic * std::norm(phi) * phi;
        out[s] = -g00 * (lap + p.mass * p.mass * phi + dv);
    });
}

}  // namespace detail

inline void check_cfl(const Lattice& l, double cfl)
{
    const double dt = l.spacing(0);
    for (std::size_t mu = 1; mu < l.dims(); ++mu)
        if (dt > cfl * l.spacing(mu) * (1.0 + 1e-12))
            throw SolverError("CFL violation: dt=" + std::to_string(dt) + " exceeds " + std::to_string(cfl) +
                              " * h_" + std::to_string(mu) + "=" + std::to_string(cfl * l.spacing(mu)));
}

/// Second-order leapfrog over every time layer of the lattice:
///   phi^{n+1} = 2 phi^n - phi^{n-1} + dt^2 * accel(phi^n).
/// Open spatial boundaries are Dirichlet with the values of the first layer.
inline FieldSystemState solve_klein_gordon(LatticePtr lattice, const InitialLayers& init,
                                           const KleinGordonParams& p, const std::string& field = "phi")
{
    const Lattice& l = *lattice;
    check_cfl(l, p.cfl);
    const std::size_t m = l.layer_size();
    if (init.first.size() != m || init.second.size() != m)
        throw SolverError("initial layers must have " + std::to_string(m) + " sites");
    LatticeField phi(lattice);
    auto v = phi.values();
    std::copy(init.first.begin(), init.first.end(), v.begin());
    std::copy(init.second.begin(), init.second.end(), v.begin() + std::ptrdiff_t(m));
    const double dt2 = l.spacing(0) * l.spacing(0);
    std::vector<complex> acc(m);
    for (std::size_t n = 1; n + 1 < l.points(0); ++n) {
        auto prev = v.subspan((n - 1) * m, m);
        auto cur = v.subspan(n * m, m);
        auto next = v.subspan((n + 1) * m, m);
        detail::kg_acceleration(l, cur, p, acc);
        parallel_for(m, [&](std::size_t s) { next[s] = 2.0 * cur[s] - prev[s] + dt2 * acc[s]; });
        for (std::size_t s = 0; s < m; ++s) {
            if (!std::isfinite(next[s].real()) || !std::isfinite(next[s].imag()))
                throw SolverError("non-finite value at time step " + std::to_string(n + 1), n + 1);
        }
        // Dirichlet: open spatial boundary sites keep their first-layer value.
        for (std::size_t mu = 1; mu < l.dims(); ++mu) {
            if (l.boundary(mu) != Boundary::open) continue;
            for (std::size_t s = 0; s < m; ++s) {
                const std::size_t i = (s / l.stride(mu)) % l.points(mu);
                if (i == 0 || i + 1 == l.points(mu)) next[s] = init.first[s];
            }
        }
    }
    return FieldSystemState::single(field, std::move(phi));
}

// ---------------------------------------------------------------------------
// Initial data presets

struct InitialCondition {
    std::string kind = "zero";  // zero | plane_wave | k0_mode | gaussian_packet
    double amplitude = 1.0;
    double k = 0.0;
    double center = 0.0;
    double width = 1.0;
};

inline InitialLayers make_initial_layers(const Lattice& l, const InitialCondition& ic, const KleinGordonParams& p)
{
    const std::size_t m = l.layer_size();
    const double dt = l.spacing(0);
    const double mass = p.mass;
    InitialLayers out{std::vector<complex>(m), std::vector<complex>(m)};
    auto x1 = [&](std::size_t s) { return l.dims() > 1 ? l.coordinate(s, 1) : 0.0; };
    const complex I(0.0, 1.0);
    // Open spatial ends are held at their first-layer value by the solver.
    auto pin_boundary = [&] {
        for (std::size_t mu = 1; mu < l.dims(); ++mu) {
            if (l.boundary(mu) != Boundary::open) continue;
            for (std::size_t s = 0; s < m; ++s) {
                const std::size_t i = (s / l.stride(mu)) % l.points(mu);
                if (i == 0 || i + 1 == l.points(mu)) out.second[s] = out.first[s];
            }
        }
        return out;
    };
    if (ic.kind == "zero") return out;
    if (ic.kind == "plane_wave") {
        const double omega = std::sqrt(ic.k * ic.k + mass * mass);
        for (std::size_t s = 0; s < m; ++s) {
            out.first[s] = ic.amplitude * std::exp(I * (ic.k * x1(s)));
            out.second[s] = ic.amplitude * std::exp(I * (ic.k * x1(s) - omega * dt));
        }
        return pin_boundary();
    }
    if (ic.kind == "k0_mode") {
        for (std::size_t s = 0; s < m; ++s) {
            out.first[s] = ic.amplitude;
            out.second[s] = ic.amplitude * std::exp(-I * (mass * dt));
        }
        return pin_boundary();
    }
    if (ic.kind == "gaussian_packet") {
        if (!(ic.width > 0.0)) throw std::invalid_argument("gaussian_packet width must be positive");
        for (std::size_t s = 0; s < m; ++s) {
            double r2 = 0.0;
            for (std::size_t mu = 1; mu < l.dims(); ++mu) {
                double dx = l.coordinate(s, mu) - ic.center;
                if (l.boundary(mu) == Boundary::periodic) {
                    const double len = l.extent(mu);
                    dx -= len * std::round(dx / len);
                }
                r2 += dx * dx;
            }
            out.first[s] = ic.amplitude * std::exp(-r2 / (2.0 * ic.width * ic.width)) * std::exp(I * (ic.k * x1(s)));
        }
        // Second layer from a Taylor step: phi_t = -i omega phi, phi_tt from
        // the field equation.
        const double omega = std::sqrt(ic.k * ic.k + mass * mass);
        std::vector<complex> acc(m);
        detail::kg_acceleration(l, out.first, p, acc);
        for (std::size_t s = 0; s < m; ++s)
            out.second[s] = out.first[s] - I * omega * dt * out.first[s] + 0.5 * dt * dt * acc[s];
        return pin_boundary();
    }
    throw std::invalid_argument("unknown initial condition preset '" + ic.kind + "'");
}

inline KleinGordonParams kg_params(const LagrangianSpec& spec)
{
    KleinGordonParams p;
    if (auto it = spec.params.find("m"); it != spec.params.end()) p.mass = it->second;
    if (auto it = spec.params.find("g_quartic"); it != spec.params.end()) p.quartic = it->second;
    return p;
}

// ---------------------------------------------------------------------------
// Action and stationarity

/// Lattice quadrature of the Lagrangian density (two-pass means).
inline complex action(const LagrangianSpec& spec, const FieldSystemState& state)
{
    LatticeEvaluator ev(state, spec.params);
    return integrate(ev.evaluate(spec.lagrangian));
}

/// RMS of |E| over interior sites and all equations of the system.
inline double stationarity_residual(const LagrangianSpec& spec, const FieldSystemState& state,
                                    std::size_t margin = 2)
{
    const ELSystem sys = derive_euler_lagrange(spec);
    LatticeEvaluator ev(state, spec.params);
    const auto region = SubRegion::interior(*state.lattice, margin);
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& e : euler_lagrange_fields(sys, ev)) {
        const double r = e.rms(region);
        acc += r * r;
        ++n;
    }
    return n ? std::sqrt(acc / double(n)) : 0.0;
}

}  // namespace nlab
