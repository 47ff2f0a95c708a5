#include "noetherlab/lab/report.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <string>

namespace {

struct Options {
    std::string config;
    int refine = 0;
    std::string format;
    std::string out;
    unsigned threads = 0;
};

int run(const std::string& verb, const Options& opt)
{
    using namespace nlab::lab;
    ExperimentConfig cfg = load_config(opt.config);
    if (verb != "report") cfg.pipeline = verb;
    if (opt.refine > 0) {
        const std::size_t base = cfg.convergence.levels.empty() ? 64 : cfg.convergence.levels.front();
        cfg.convergence.levels = refined_levels(base, opt.refine);
    }
    if (!opt.format.empty()) cfg.output.format = opt.format;
    if (!opt.out.empty()) cfg.output.directory = opt.out;
    if (opt.threads) nlab::set_thread_count(opt.threads);

    const Report rep = run_experiment(cfg);
    const auto files = emit_report(rep, cfg.output.directory, cfg.output.format, cfg.output.dump_fields);

    if (verb == "derive") {
        std::cout << "L = " << rep.derivation["lagrangian"].get<std::string>() << "\n";
        for (const auto& eq : rep.derivation["euler_lagrange"]) {
            std::cout << "vary " << eq["varied"].get<std::string>() << ":\n  source: " << eq["source"].get<std::string>()
                      << "\n";
            for (std::size_t nu = 0; nu < eq["flux"].size(); ++nu)
                std::cout << "  flux[" << nu << "]: " << eq["flux"][nu].get<std::string>() << "\n";
        }
        for (std::size_t nu = 0; nu < rep.derivation["noether_flux"].size(); ++nu)
            std::cout << "J^" << nu << " = " << rep.derivation["noether_flux"][nu].get<std::string>() << "\n";
    }
    for (const auto& c : rep.checks) {
        std::cout << "[" << to_string(c.status) << "] " << c.name << " (" << c.tag << ")";
        if (!c.value.is_null()) std::cout << " value=" << c.value.dump();
        if (!c.threshold.is_null()) std::cout << " " << c.comparison << " " << c.threshold.dump();
        std::cout << "\n";
    }
    for (const auto& t : rep.convergence) {
        std::cout << "[" << to_string(t.status) << "] convergence " << t.name << " order=" << num(t.fitted_order).dump()
                  << " >= " << t.threshold << "\n";
        for (const auto& r : t.rows)
            std::cout << "    n=" << r.grid_n << " error=" << num(r.error).dump()
                      << (r.order ? " order=" + num(*r.order).dump() : std::string()) << "\n";
    }
    for (const auto& e : rep.errors) std::cout << "error: " << e << "\n";
    std::cout << "wrote " << files.size() << " file(s) to " << cfg.output.directory << "\n";
    std::cout << (rep.ok() ? "OK" : "FAILED") << ": " << rep.count(Status::pass) << " passed, "
              << rep.count(Status::fail) << " failed, " << rep.count(Status::skipped) << " skipped\n";
    return rep.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"noetherlab: conservation laws and nonlocal residuals of lattice field theories"};
    app.require_subcommand(1);
    Options opt;
    std::string chosen;
    const std::vector<std::pair<std::string, std::string>> verbs{
        {"derive", "derive Euler-Lagrange equations and the Noether flux"},
        {"simulate", "derive, then solve the field equation and check stationarity"},
        {"verify", "simulate, then run every verification check on the solution"},
        {"report", "run the stages selected by [pipeline] in the config"},
        {"all", "verify, then run the refinement study"}};
    for (const auto& [name, help] : verbs) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--refine", opt.refine, "use k doubling levels from the first configured level")
            ->check(CLI::Range(1, 8));
        sub->add_option("--format", opt.format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--threads", opt.threads, "worker threads (default: all)");
        sub->callback([&chosen, n = name] { chosen = n; });
    }
    CLI11_PARSE(app, argc, argv);
    try {
        return run(chosen, opt);
    } catch (const std::exception& e) {
        std::cerr << "noetherlab: " << e.what() << "\n";
        return 2;
    }
}
