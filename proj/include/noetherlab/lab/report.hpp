#pragma once

#include "noetherlab/lab/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlab::lab {

inline json check_to_json(const CheckRecord& c)
{
    return {{"name", c.name},     {"tag", c.tag},           {"status", to_string(c.status)}, {"value", c.value},
            {"threshold", c.threshold}, {"comparison", c.comparison}, {"detail", c.detail}};
}

inline json table_to_json(const ConvergenceTable& t)
{
    json rows = json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"grid_n", r.grid_n}, {"error", num(r.error)}, {"fitted_order", r.order ? num(*r.order) : json(nullptr)}});
    return {{"name", t.name},   {"tag", t.tag},       {"metric", t.metric},
            {"rows", rows},     {"fitted_order", num(t.fitted_order)}, {"threshold", num(t.threshold)},
            {"status", to_string(t.status)}, {"detail", t.detail}};
}

/// Full report. Contains no timestamps or paths, so identical configs give
/// identical documents.
inline json report_to_json(const Report& r)
{
    json j;
    const json seed = r.config.contains("gauge") ? r.config["gauge"].value("seed", json(nullptr)) : json(nullptr);
    j["tool"] = {{"name", "noetherlab"}, {"version", tool_version}, {"seed", seed}};
    j["config"] = r.config;
    j["derivation"] = r.derivation;
    j["simulation"] = r.simulation;
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back(check_to_json(c));
    j["checks"] = checks;
    json tables = json::array();
    for (const auto& t : r.convergence) tables.push_back(table_to_json(t));
    j["convergence"] = tables;
    j["diagnostics"] = r.diagnostics;
    j["errors"] = r.errors;
    j["summary"] = {{"passed", r.count(Status::pass)},
                    {"failed", r.count(Status::fail)},
                    {"skipped", r.count(Status::skipped)},
                    {"informational", r.count(Status::info)},
                    {"ok", r.ok()}};
    return j;
}

namespace detail {

inline std::string csv_cell(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string csv_value(const json& v)
{
    if (v.is_null()) return "";
    if (v.is_string()) return csv_cell(v.get<std::string>());
    return csv_cell(v.dump());
}

inline std::ofstream open_for_write(const std::filesystem::path& p)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    return out;
}

}  // namespace detail

/// One row per time index (axis 0); the remaining axes are flattened
/// row-major into columns. Real parts only.
inline std::string field_to_csv(const LatticeField& f)
{
    const Lattice& l = f.lattice();
    const std::size_t rows = l.points(0);
    const std::size_t cols = l.layer_size();
    std::string out;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) out += ',';
            out += json(f[r * cols + c].real()).dump();
        }
        out += '\n';
    }
    return out;
}

inline std::string table_to_csv(const ConvergenceTable& t)
{
    std::string out = "grid_n,error,fitted_order\n";
    for (const auto& r : t.rows) {
        out += std::to_string(r.grid_n) + "," + num(r.error).dump() + ",";
        if (r.order) out += num(*r.order).dump();
        out += '\n';
    }
    return out;
}

inline std::string checks_to_csv(const Report& r)
{
    std::string out = "name,tag,status,value,threshold,comparison,detail\n";
    for (const auto& c : r.checks)
        out += detail::csv_cell(c.name) + "," + detail::csv_cell(c.tag) + "," + to_string(c.status) + "," +
               detail::csv_value(c.value) + "," + detail::csv_value(c.threshold) + "," + detail::csv_cell(c.comparison) +
               "," + detail::csv_cell(c.detail) + "\n";
    for (const auto& t : r.convergence)
        out += detail::csv_cell(t.name) + "," + detail::csv_cell(t.tag) + "," + to_string(t.status) + "," +
               num(t.fitted_order).dump() + "," + num(t.threshold).dump() + ",>=," + detail::csv_cell(t.metric) + "\n";
    return out;
}

/// Writes report.json and/or checks.csv plus one CSV per convergence table
/// and, when requested, one CSV per dumped field. Returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const Report& r, const std::filesystem::path& dir,
                                                      const std::string& format = "both", bool dump_fields = true)
{
    if (format != "json" && format != "csv" && format != "both")
        throw std::invalid_argument("format must be json, csv or both");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
    std::vector<std::filesystem::path> written;
    auto write = [&](const std::string& name, const std::string& content) {
        const auto p = dir / name;
        auto out = detail::open_for_write(p);
        out << content;
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
        written.push_back(p);
    };
    if (format != "csv") write("report.json", report_to_json(r).dump(2) + "\n");
    if (format != "json") {
        write("checks.csv", checks_to_csv(r));
        for (const auto& t : r.convergence) write("convergence_" + t.name + ".csv", table_to_csv(t));
    }
    if (dump_fields)
        for (const auto& f : r.fields) write("field_" + f.name + ".csv", field_to_csv(f.field));
    return written;
}

}  // namespace nlab::lab
