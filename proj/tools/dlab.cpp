// dlab: command-line front end for the experiment runners.
//
// Exit codes: 0 all checks passed, 1 a deterministic check failed,
// 2 configuration or usage error.

#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "dlab/experiments.hpp"

namespace {

using Runner = dlab::RunOutput (*)(const dlab::ExperimentConfig&);

const std::map<std::string, Runner> kRunners{
    {"localize", dlab::run_localize},       {"converge", dlab::run_converge},
    {"gap-scan", dlab::run_gap_scan},       {"graining-audit", dlab::run_graining_audit},
    {"audits", dlab::run_audits},           {"solve", dlab::run_solve},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ground states and interfaces of the disordered Ising ferromagnet"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out_dir;
    std::string selected;

    for (const auto& [name, runner] : kRunners) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "flat key = value configuration file")->required();
        sub->add_option("--seed", seed, "seed base (overrides the config)");
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--workers", workers, "worker threads (overrides the config)");
        sub->callback([&selected, n = name] { selected = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    dlab::ExperimentConfig cfg;
    try {
        cfg = dlab::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (workers) cfg.workers = *workers;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        cfg.validate();
    } catch (const dlab::InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        const auto out = kRunners.at(selected)(cfg);
        dlab::write_outputs(out, cfg.output_dir);
        for (const auto& s : out.summary) std::cout << s << "\n";
        for (const auto& f : out.files) std::cout << "wrote " << cfg.output_dir << "/" << f.name << "\n";
        return out.violation ? 1 : 0;
    } catch (const dlab::InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
