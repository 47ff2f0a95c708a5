#pragma once

#include "noetherlab/dynamics.hpp"

#include "json.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlab::lab {

using json = nlohmann::ordered_json;

/// Syntax error in a config file, with 1-based location.
class ConfigParseError : public std::runtime_error {
public:
    ConfigParseError(const std::string& source, int line, int column, const std::string& msg)
        : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
          line_(line), column_(column)
    {
    }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Semantic error naming the offending key, e.g. "parameters.lambda".
class ConfigValidationError : public std::runtime_error {
public:
    ConfigValidationError(std::string key, const std::string& msg)
        : std::runtime_error(key + ": " + msg), key_(std::move(key))
    {
    }
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

namespace detail {

// A strict subset of TOML: [table] and [table.sub] headers, bare keys,
// strings, numbers, booleans and (possibly multi-line) arrays of those.
class TomlParser {
public:
    TomlParser(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

    json parse()
    {
        json root = json::object();
        json* table = &root;
        std::set<std::string> headers;
        while (true) {
            skip_blank_lines();
            if (at_end()) break;
            if (peek() == '[') {
                const int line = line_, col = col_;
                advance();
                skip_ws();
                std::vector<std::string> path{parse_key()};
                skip_ws();
                while (accept('.')) {
                    skip_ws();
                    path.push_back(parse_key());
                    skip_ws();
                }
                expect(']');
                std::string joined;
                table = &root;
                for (const auto& p : path) {
                    joined += (joined.empty() ? "" : ".") + p;
                    if (!table->contains(p)) (*table)[p] = json::object();
                    table = &(*table)[p];
                    if (!table->is_object()) fail(line, col, "'" + joined + "' is not a table");
                }
                if (!headers.insert(joined).second) fail(line, col, "duplicate table [" + joined + "]");
                end_of_line();
                continue;
            }
            const int line = line_, col = col_;
            const std::string key = parse_key();
            skip_ws();
            expect('=');
            skip_ws();
            json value = parse_value();
            if (table->contains(key)) fail(line, col, "duplicate key '" + key + "'");
            (*table)[key] = std::move(value);
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(int line, int col, const std::string& msg) const
    {
        throw ConfigParseError(source_, line, col, msg);
    }
    [[noreturn]] void fail(const std::string& msg) const { fail(line_, col_, msg); }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    void advance()
    {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    bool accept(char c)
    {
        if (!at_end() && peek() == c) {
            advance();
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    void skip_ws()
    {
        while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
    }

    void skip_comment()
    {
        if (!at_end() && peek() == '#')
            while (!at_end() && peek() != '\n') advance();
    }

    void skip_blank_lines()
    {
        while (true) {
            skip_ws();
            skip_comment();
            if (at_end() || peek() != '\n') return;
            advance();
        }
    }

    void end_of_line()
    {
        skip_ws();
        skip_comment();
        if (at_end()) return;
        if (peek() != '\n') fail("unexpected text after value");
        advance();
    }

    std::string parse_key()
    {
        std::string out;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
            out += peek();
            advance();
        }
        if (out.empty()) fail("expected a key");
        return out;
    }

    json parse_value()
    {
        if (at_end()) fail("expected a value");
        const char c = peek();
        if (c == '"') return parse_basic_string();
        if (c == '\'') return parse_literal_string();
        if (c == '[') return parse_array();
        if (text_.substr(pos_, 4) == "true") {
            for (int i = 0; i < 4; ++i) advance();
            return true;
        }
        if (text_.substr(pos_, 5) == "false") {
            for (int i = 0; i < 5; ++i) advance();
            return false;
        }
        return parse_number();
    }

    json parse_basic_string()
    {
        expect('"');
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            char c = peek();
            advance();
            if (c == '"') break;
            if (c == '\\') {
                if (at_end()) fail("unterminated escape");
                const char e = peek();
                advance();
                switch (e) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    default: fail(std::string("unsupported escape '\\") + e + "'");
                }
                continue;
            }
            out += c;
        }
        return out;
    }

    json parse_literal_string()
    {
        expect('\'');
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            const char c = peek();
            advance();
            if (c == '\'') break;
            out += c;
        }
        return out;
    }

    json parse_array()
    {
        expect('[');
        json arr = json::array();
        while (true) {
            skip_blank_lines();
            if (accept(']')) return arr;
            arr.push_back(parse_value());
            skip_blank_lines();
            if (accept(',')) continue;
            skip_blank_lines();
            expect(']');
            return arr;
        }
    }

    json parse_number()
    {
        const int line = line_, col = col_;
        std::string tok;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                             peek() == '.' || peek() == '_')) {
            if (peek() != '_') tok += peek();
            advance();
        }
        if (tok.empty()) fail(line, col, "expected a value");
        std::string_view body = tok;
        if (!body.empty() && body[0] == '+') body.remove_prefix(1);
        const bool is_float = tok.find_first_of(".eE") != std::string::npos || tok == "inf" || tok == "nan";
        if (!is_float) {
            long long v = 0;
            auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
            if (ec == std::errc() && p == body.data() + body.size()) return v;
            fail(line, col, "invalid value '" + tok + "'");
        }
        double v = 0.0;
        auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
        if (ec != std::errc() || p != body.data() + body.size() || !std::isfinite(v))
            fail(line, col, "invalid number '" + tok + "'");
        return v;
    }

    std::string_view text_;
    std::string source_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace detail

inline json parse_toml(std::string_view text, const std::string& source = "<config>")
{
    return detail::TomlParser(text, source).parse();
}

// ---------------------------------------------------------------------------

struct LatticeConfig {
    std::vector<std::size_t> points{128, 128};
    std::vector<double> extent{1.5 * std::numbers::pi, 4.0 * std::numbers::pi};
    std::vector<Boundary> boundary{Boundary::open, Boundary::periodic};
    std::vector<int> signature{1, -1};

    Lattice build(std::size_t n_override = 0) const
    {
        std::vector<std::size_t> pts = points;
        if (n_override) std::fill(pts.begin(), pts.end(), n_override);
        return Lattice::from_extent(pts, extent, boundary, signature);
    }
};

struct LagrangianConfig {
    std::string preset = presets::complex_scalar_nonlocal;  // or "custom"
    std::string text;
    std::vector<std::string> fields{"phi"};
};

struct ParameterConfig {
    double m = 1.0;
    double lambda = 0.1;
    double g_quartic = 0.0;
    double e = 1.0;
    std::map<std::string, double> custom;
};

struct TransformationConfig {
    std::string preset = "u1";  // or "custom"
    std::vector<std::pair<std::string, std::string>> generators;
    double epsilon = 1e-3;
    std::vector<double> phases{0.3, 1.0, 2.0};
};

struct GaugeConfig {
    std::optional<double> local_factor;  // empty means 1 - lambda
    std::vector<double> roundtrip_lambdas{0.0, 0.1, 0.5};
    std::vector<double> covariance_amplitudes{1e-2, 1e-3, 1e-4};
    std::uint64_t seed = 20240607;
};

struct ConvergenceConfig {
    std::vector<std::size_t> levels{64, 128, 256};
    InitialCondition initial{"gaussian_packet", 1.0, 1.0, 2.0 * std::numbers::pi, 1.0};
};

struct ThresholdConfig {
    double zero_mean = 1e-10;
    double zero_mean_closed = 1e-12;
    double contradiction_ratio = 100.0;
    double null_ratio = 10.0;
    double on_shell = 5e-2;
    double balance_order = 1.5;
    double conservation_order = 1.5;
    double stationarity_order = 1.8;
    double roundtrip = 1e-12;
    double invariance = 1e-12;
    double action_identity = 1e-12;
    double reality = 1e-12;
    double covariance_exponent = 0.3;
    double roundoff_floor = 1e-11;
};

struct OutputConfig {
    std::string directory = "noetherlab-report";
    std::string format = "both";  // json | csv | both
    bool dump_fields = true;
};

struct ExperimentConfig {
    std::string source;
    std::string name = "complex scalar with kinetic fluctuation term";
    std::string pipeline = "all";  // derive | simulate | verify | all
    LatticeConfig lattice;
    LagrangianConfig lagrangian;
    ParameterConfig parameters;
    TransformationConfig transformation;
    InitialCondition initial{"k0_mode", 1.0, 0.0, 0.0, 1.0};
    GaugeConfig gauge;
    ConvergenceConfig convergence;
    ThresholdConfig thresholds;
    OutputConfig output;

    double local_factor() const { return gauge.local_factor.value_or(1.0 - parameters.lambda); }
};

namespace detail {

// Reads typed keys out of one table and rejects whatever is left over.
class TableReader {
public:
    TableReader(const json& table, std::string path) : table_(table), path_(std::move(path))
    {
        if (!table_.is_object()) throw ConfigValidationError(path_, "expected a table");
    }

    std::string key_path(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    const json* find(const std::string& k)
    {
        used_.insert(k);
        auto it = table_.find(k);
        return it == table_.end() ? nullptr : &*it;
    }

    double number(const json& v, const std::string& k) const
    {
        if (!v.is_number()) throw ConfigValidationError(key_path(k), "expected a number, got " + describe(v));
        return v.get<double>();
    }

    void read(const std::string& k, double& out)
    {
        if (const json* v = find(k)) out = number(*v, k);
    }

    void read(const std::string& k, std::string& out)
    {
        if (const json* v = find(k)) {
            if (!v->is_string()) throw ConfigValidationError(key_path(k), "expected a string, got " + describe(*v));
            out = v->get<std::string>();
        }
    }

    void read(const std::string& k, bool& out)
    {
        if (const json* v = find(k)) {
            if (!v->is_boolean()) throw ConfigValidationError(key_path(k), "expected true or false, got " + describe(*v));
            out = v->get<bool>();
        }
    }

    void read(const std::string& k, std::vector<double>& out)
    {
        if (const json* v = find(k)) {
            out.clear();
            for (const auto& x : array(*v, k)) out.push_back(number(x, k));
        }
    }

    void read(const std::string& k, std::vector<std::size_t>& out)
    {
        if (const json* v = find(k)) {
            out.clear();
            for (const auto& x : array(*v, k)) {
                if (!x.is_number_integer() || x.get<long long>() <= 0)
                    throw ConfigValidationError(key_path(k), "expected positive integers, got " + describe(x));
                out.push_back(std::size_t(x.get<long long>()));
            }
        }
    }

    void read(const std::string& k, std::vector<int>& out)
    {
        if (const json* v = find(k)) {
            out.clear();
            for (const auto& x : array(*v, k)) {
                if (!x.is_number_integer()) throw ConfigValidationError(key_path(k), "expected integers, got " + describe(x));
                out.push_back(int(x.get<long long>()));
            }
        }
    }

    void read(const std::string& k, std::vector<std::string>& out)
    {
        if (const json* v = find(k)) {
            out.clear();
            for (const auto& x : array(*v, k)) {
                if (!x.is_string()) throw ConfigValidationError(key_path(k), "expected strings, got " + describe(x));
                out.push_back(x.get<std::string>());
            }
        }
    }

    const json* table(const std::string& k)
    {
        const json* v = find(k);
        if (v && !v->is_object()) throw ConfigValidationError(key_path(k), "expected a table");
        return v;
    }

    void finish() const
    {
        for (const auto& [k, v] : table_.items())
            if (!used_.count(k)) throw ConfigValidationError(key_path(k), "unknown key");
    }

    static std::string describe(const json& v)
    {
        if (v.is_string()) return "string \"" + v.get<std::string>() + "\"";
        if (v.is_boolean()) return "boolean";
        if (v.is_array()) return "array";
        if (v.is_object()) return "table";
        return "number";
    }

private:
    const json& array(const json& v, const std::string& k) const
    {
        if (!v.is_array()) throw ConfigValidationError(key_path(k), "expected an array, got " + describe(v));
        return v;
    }

    const json& table_;
    std::string path_;
    std::set<std::string> used_;
};

inline void read_initial(TableReader& r, InitialCondition& ic)
{
    r.read("preset", ic.kind);
    r.read("amplitude", ic.amplitude);
    r.read("k", ic.k);
    r.read("center", ic.center);
    r.read("width", ic.width);
    r.finish();
    static const std::set<std::string> known{"zero", "plane_wave", "k0_mode", "gaussian_packet"};
    if (!known.count(ic.kind)) throw ConfigValidationError(r.key_path("preset"), "unknown initial condition '" + ic.kind + "'");
    if (ic.kind == "gaussian_packet" && !(ic.width > 0.0))
        throw ConfigValidationError(r.key_path("width"), "must be positive");
}

template <class T>
void require_strictly_increasing(const std::vector<T>& v, const std::string& key)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) throw ConfigValidationError(key, "refinement levels must be strictly increasing");
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& root, const std::string& source = "<config>")
{
    ExperimentConfig cfg;
    cfg.source = source;
    detail::TableReader top(root, "");
    top.read("name", cfg.name);

    if (const json* t = top.table("pipeline")) {
        detail::TableReader r(*t, "pipeline");
        r.read("mode", cfg.pipeline);
        r.finish();
        static const std::set<std::string> modes{"derive", "simulate", "verify", "all"};
        if (!modes.count(cfg.pipeline))
            throw ConfigValidationError("pipeline.mode", "must be one of derive, simulate, verify, all");
    }

    if (const json* t = top.table("lattice")) {
        detail::TableReader r(*t, "lattice");
        auto& L = cfg.lattice;
        r.read("points", L.points);
        r.read("extent", L.extent);
        std::vector<double> spacing;
        r.read("spacing", spacing);
        std::vector<std::string> boundary;
        r.read("boundary", boundary);
        r.read("signature", L.signature);
        r.finish();
        if (!boundary.empty()) {
            L.boundary.clear();
            for (const auto& b : boundary) {
                if (b == "open") L.boundary.push_back(Boundary::open);
                else if (b == "periodic") L.boundary.push_back(Boundary::periodic);
                else throw ConfigValidationError("lattice.boundary", "unknown boundary '" + b + "'");
            }
        }
        const std::size_t d = L.points.size();
        if (L.boundary.size() != d || L.signature.size() != d)
            throw ConfigValidationError("lattice", "points, boundary and signature must have one entry per axis");
        if (!spacing.empty()) {
            if (t->contains("extent")) throw ConfigValidationError("lattice.spacing", "give either extent or spacing");
            if (spacing.size() != d) throw ConfigValidationError("lattice.spacing", "needs one entry per axis");
            L.extent.clear();
            for (std::size_t mu = 0; mu < d; ++mu)
                L.extent.push_back(spacing[mu] * double(L.boundary[mu] == Boundary::open ? L.points[mu] - 1 : L.points[mu]));
        }
        if (L.extent.size() != d) throw ConfigValidationError("lattice.extent", "needs one entry per axis");
        for (double x : L.extent)
            if (!(x > 0.0)) throw ConfigValidationError("lattice.extent", "must be positive");
    }
    try {
        (void)cfg.lattice.build();
    } catch (const LatticeError& e) {
        throw ConfigValidationError("lattice", e.what());
    }

    if (const json* t = top.table("lagrangian")) {
        detail::TableReader r(*t, "lagrangian");
        r.read("preset", cfg.lagrangian.preset);
        r.read("text", cfg.lagrangian.text);
        r.read("fields", cfg.lagrangian.fields);
        r.finish();
    }
    {
        const auto& p = cfg.lagrangian.preset;
        if (p != presets::complex_scalar_nonlocal && p != presets::complex_scalar_local && p != "custom")
            throw ConfigValidationError("lagrangian.preset", "unknown preset '" + p + "'");
        if (p == "custom" && cfg.lagrangian.text.empty())
            throw ConfigValidationError("lagrangian.text", "required when preset = \"custom\"");
        if (p != "custom" && !cfg.lagrangian.text.empty())
            throw ConfigValidationError("lagrangian.text", "only allowed with preset = \"custom\"");
        if (p != "custom" && cfg.lagrangian.fields != std::vector<std::string>{"phi"})
            throw ConfigValidationError("lagrangian.fields", "presets declare the single field phi");
    }

    if (const json* t = top.table("parameters")) {
        detail::TableReader r(*t, "parameters");
        auto& P = cfg.parameters;
        r.read("m", P.m);
        r.read("lambda", P.lambda);
        r.read("g_quartic", P.g_quartic);
        r.read("e", P.e);
        if (const json* c = r.table("custom")) {
            detail::TableReader rc(*c, "parameters.custom");
            for (const auto& [k, v] : c->items()) {
                double x = 0.0;
                rc.read(k, x);
                P.custom[k] = x;
            }
            rc.finish();
        }
        r.finish();
        if (!(P.m >= 0.0)) throw ConfigValidationError("parameters.m", "must be >= 0");
        if (P.e == 0.0) throw ConfigValidationError("parameters.e", "must be nonzero");
    }

    if (const json* t = top.table("transformation")) {
        detail::TableReader r(*t, "transformation");
        auto& T = cfg.transformation;
        r.read("preset", T.preset);
        r.read("epsilon", T.epsilon);
        r.read("phases", T.phases);
        if (const json* g = r.table("generators")) {
            detail::TableReader rg(*g, "transformation.generators");
            for (const auto& [k, v] : g->items()) {
                std::string text;
                rg.read(k, text);
                T.generators.emplace_back(k, text);
            }
            rg.finish();
        }
        r.finish();
        if (T.preset != "u1" && T.preset != "custom")
            throw ConfigValidationError("transformation.preset", "unknown preset '" + T.preset + "'");
        if (T.preset == "custom" && T.generators.empty())
            throw ConfigValidationError("transformation.generators", "required when preset = \"custom\"");
        if (T.preset == "u1" && !T.generators.empty())
            throw ConfigValidationError("transformation.generators", "only allowed with preset = \"custom\"");
        if (!(T.epsilon >= 0.0 && T.epsilon <= 1e-2))
            throw ConfigValidationError("transformation.epsilon", "must lie in [0, 1e-2]");
    }

    if (const json* t = top.table("initial")) {
        detail::TableReader r(*t, "initial");
        detail::read_initial(r, cfg.initial);
    }

    if (const json* t = top.table("gauge")) {
        detail::TableReader r(*t, "gauge");
        if (const json* v = r.find("local_factor")) {
            if (v->is_string()) {
                if (v->get<std::string>() != "auto")
                    throw ConfigValidationError("gauge.local_factor", "expected a number or \"auto\"");
                cfg.gauge.local_factor.reset();
            } else {
                cfg.gauge.local_factor = r.number(*v, "local_factor");
                if (*cfg.gauge.local_factor == 0.0) throw ConfigValidationError("gauge.local_factor", "must be nonzero");
            }
        }
        r.read("roundtrip_lambdas", cfg.gauge.roundtrip_lambdas);
        r.read("covariance_amplitudes", cfg.gauge.covariance_amplitudes);
        if (const json* v = r.find("seed")) {
            if (!v->is_number_integer() || v->get<long long>() < 0)
                throw ConfigValidationError("gauge.seed", "expected a non-negative integer");
            cfg.gauge.seed = std::uint64_t(v->get<long long>());
        }
        r.finish();
        for (double a : cfg.gauge.covariance_amplitudes)
            if (!(a > 0.0 && a <= 0.1)) throw ConfigValidationError("gauge.covariance_amplitudes", "must lie in (0, 0.1]");
    }

    if (const json* t = top.table("convergence")) {
        detail::TableReader r(*t, "convergence");
        r.read("levels", cfg.convergence.levels);
        if (const json* ic = r.table("initial")) {
            detail::TableReader ri(*ic, "convergence.initial");
            detail::read_initial(ri, cfg.convergence.initial);
        }
        r.finish();
        detail::require_strictly_increasing(cfg.convergence.levels, "convergence.levels");
        for (auto n : cfg.convergence.levels)
            if (n < Lattice::min_points) throw ConfigValidationError("convergence.levels", "levels must be >= 8");
    }

    if (const json* t = top.table("thresholds")) {
        detail::TableReader r(*t, "thresholds");
        auto& T = cfg.thresholds;
        r.read("zero_mean", T.zero_mean);
        r.read("zero_mean_closed", T.zero_mean_closed);
        r.read("contradiction_ratio", T.contradiction_ratio);
        r.read("null_ratio", T.null_ratio);
        r.read("on_shell", T.on_shell);
        r.read("balance_order", T.balance_order);
        r.read("conservation_order", T.conservation_order);
        r.read("stationarity_order", T.stationarity_order);
        r.read("roundtrip", T.roundtrip);
        r.read("invariance", T.invariance);
        r.read("action_identity", T.action_identity);
        r.read("reality", T.reality);
        r.read("covariance_exponent", T.covariance_exponent);
        r.read("roundoff_floor", T.roundoff_floor);
        r.finish();
    }

    if (const json* t = top.table("output")) {
        detail::TableReader r(*t, "output");
        r.read("directory", cfg.output.directory);
        r.read("format", cfg.output.format);
        r.read("dump_fields", cfg.output.dump_fields);
        r.finish();
        if (cfg.output.format != "json" && cfg.output.format != "csv" && cfg.output.format != "both")
            throw ConfigValidationError("output.format", "must be json, csv or both");
    }
    top.finish();
    return cfg;
}

inline ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>")
{
    return config_from_json(parse_toml(text, source), source);
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

/// Doubles levels k times starting from the first configured level.
inline std::vector<std::size_t> refined_levels(std::size_t base, int k)
{
    if (k < 1) throw ConfigValidationError("--refine", "must be at least 1");
    std::vector<std::size_t> out;
    for (int i = 0; i < k; ++i) out.push_back(base << i);
    return out;
}

inline LagrangianSpec build_lagrangian(const ExperimentConfig& cfg)
{
    const auto& P = cfg.parameters;
    const auto& sig = cfg.lattice.signature;
    if (cfg.lagrangian.preset == presets::complex_scalar_nonlocal)
        return complex_scalar_nonlocal(sig, P.m, P.lambda, P.g_quartic);
    if (cfg.lagrangian.preset == presets::complex_scalar_local) return complex_scalar_local(sig, P.m, P.g_quartic);
    std::map<std::string, double> params{{"m", P.m}, {"lambda", P.lambda}, {"g_quartic", P.g_quartic}, {"e", P.e}};
    for (const auto& [k, v] : P.custom) params[k] = v;
    try {
        return make_lagrangian(cfg.name, cfg.lagrangian.fields, params, sig, cfg.lagrangian.text);
    } catch (const sym::ParseError& e) {
        throw ConfigValidationError("lagrangian.text", e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigValidationError("lagrangian", e.what());
    }
}

inline json initial_to_json(const InitialCondition& ic)
{
    return json{{"preset", ic.kind}, {"amplitude", ic.amplitude}, {"k", ic.k}, {"center", ic.center}, {"width", ic.width}};
}

/// Fully resolved config, defaults included.
inline json config_to_json(const ExperimentConfig& c)
{
    json j;
    j["name"] = c.name;
    j["pipeline"] = {{"mode", c.pipeline}};
    json b = json::array();
    for (auto x : c.lattice.boundary) b.push_back(to_string(x));
    j["lattice"] = {{"points", c.lattice.points}, {"extent", c.lattice.extent}, {"boundary", b}, {"signature", c.lattice.signature}};
    j["lagrangian"] = {{"preset", c.lagrangian.preset}, {"text", c.lagrangian.text}, {"fields", c.lagrangian.fields}};
    j["parameters"] = {{"m", c.parameters.m}, {"lambda", c.parameters.lambda}, {"g_quartic", c.parameters.g_quartic},
                       {"e", c.parameters.e}, {"custom", c.parameters.custom}};
    json gens = json::object();
    for (const auto& [f, t] : c.transformation.generators) gens[f] = t;
    j["transformation"] = {{"preset", c.transformation.preset}, {"generators", gens},
                           {"epsilon", c.transformation.epsilon}, {"phases", c.transformation.phases}};
    j["initial"] = initial_to_json(c.initial);
    j["gauge"] = {{"local_factor", c.gauge.local_factor ? json(*c.gauge.local_factor) : json("auto")},
                  {"resolved_local_factor", c.local_factor()},
                  {"roundtrip_lambdas", c.gauge.roundtrip_lambdas},
                  {"covariance_amplitudes", c.gauge.covariance_amplitudes},
                  {"seed", c.gauge.seed}};
    j["convergence"] = {{"levels", c.convergence.levels}, {"initial", initial_to_json(c.convergence.initial)}};
    const auto& T = c.thresholds;
    j["thresholds"] = {{"zero_mean", T.zero_mean},
                       {"zero_mean_closed", T.zero_mean_closed},
                       {"contradiction_ratio", T.contradiction_ratio},
                       {"null_ratio", T.null_ratio},
                       {"on_shell", T.on_shell},
                       {"balance_order", T.balance_order},
                       {"conservation_order", T.conservation_order},
                       {"stationarity_order", T.stationarity_order},
                       {"roundtrip", T.roundtrip},
                       {"invariance", T.invariance},
                       {"action_identity", T.action_identity},
                       {"reality", T.reality},
                       {"covariance_exponent", T.covariance_exponent},
                       {"roundoff_floor", T.roundoff_floor}};
    j["output"] = {{"format", c.output.format}, {"dump_fields", c.output.dump_fields}};
    return j;
}

}  // namespace nlab::lab
