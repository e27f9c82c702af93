// Command-line front end: one verb per experiment.

#include "slelab/experiments.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Flags {
    std::optional<double> kappa, T, dt;
    std::optional<long> n;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    std::string config;
    std::vector<std::string> sets;
};

sle::ExperimentConfig build_config(const std::string& verb, const Flags& f) {
    sle::ExperimentConfig cfg;
    cfg.name = verb;
    if (!f.config.empty()) cfg.apply(sle::io::load_key_values(f.config));
    cfg.name = verb;
    if (f.kappa) cfg.kappa = *f.kappa;
    if (f.T) cfg.T = *f.T;
    if (f.dt) cfg.dt = *f.dt;
    if (f.n) cfg.n = *f.n;
    if (f.seed) cfg.seed = *f.seed;
    if (f.workers) cfg.workers = *f.workers;
    if (f.out) cfg.out_dir = *f.out;
    sle::io::KeyValues kv;
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    cfg.apply(kv);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Loewner-evolution trace, variation and Bessel-clock experiments"};
    app.set_version_flag("--version", std::string(SLELAB_VERSION));
    app.require_subcommand(1);
    Flags f;
    for (const char* verb : sle::experiment_names) {
        auto* sub = app.add_subcommand(verb, std::string("run the ") + verb + " experiment");
        sub->add_option("--kappa", f.kappa, "SLE parameter");
        sub->add_option("--T", f.T, "time horizon");
        sub->add_option("--dt", f.dt, "time step");
        sub->add_option("--n", f.n, "number of paths or seeds");
        sub->add_option("--seed", f.seed, "base seed");
        sub->add_option("--workers", f.workers, "worker threads (results do not depend on it)");
        sub->add_option("--out", f.out, "output directory");
        sub->add_option("--config", f.config, "key=value config file")->check(CLI::ExistingFile);
        sub->add_option("--set", f.sets, "extra key=value setting (repeatable)");
    }
    CLI11_PARSE(app, argc, argv);
    try {
        const std::string verb = app.get_subcommands().front()->get_name();
        const auto cfg = build_config(verb, f);
        const auto report = sle::run_experiment(cfg);
        sle::write_report(report, cfg);
        std::cout << "wrote " << cfg.out_dir << "/" << report.name << ".csv (" << report.table.size() << " rows, "
                  << report.wall_seconds << " s)\n";
        for (const auto& [k, v] : report.summary) std::cout << "  " << k << " = " << v << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
