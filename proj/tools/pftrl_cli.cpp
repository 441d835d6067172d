// Experiment runner: pftrl run|verify|audit <file> [options]

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "pftrl/experiment.hpp"

namespace {

enum Exit { kOk = 0, kRunFailure = 1, kConfigError = 2 };

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> horizon;
    std::optional<std::string> out;
    std::optional<int> grid;
    bool dry_run = false;
};

pftrl::ExperimentConfig load(const std::string& path, const Overrides& o) {
    pftrl::ExperimentConfig c = pftrl::load_config(path);
    if (o.seed) c.seeds = {*o.seed};
    if (o.horizon) {
        if (*o.horizon < 1) throw pftrl::ConfigError("--horizon-override must be >= 1");
        c.horizons = {*o.horizon};
        if (c.t0 >= *o.horizon) throw pftrl::ConfigError("--horizon-override must exceed condition.t0");
    }
    if (o.out) c.output_dir = *o.out;
    if (o.grid) {
        if (*o.grid < 101) throw pftrl::ConfigError("--grid must be >= 101");
        c.grid = *o.grid;
    }
    return c;
}

void print_plan(const pftrl::ExperimentConfig& c, bool learners) {
    std::cout << "experiment " << c.experiment << "  digest " << pftrl::config_digest(c) << "\n";
    std::cout << "output_dir " << c.output_dir << "  grid " << c.grid << "  horizons";
    for (auto h : c.horizons) std::cout << ' ' << h;
    std::cout << "\n";
    if (learners) {
        const auto plan = pftrl::plan_runs(c);
        for (const auto& e : plan)
            std::cout << "  " << e.algorithm << " c=" << e.c << " seed=" << e.seed << " t=" << e.horizon << " -> "
                      << e.csv << "\n";
        std::cout << plan.size() << " runs planned\n";
    } else {
        for (double cv : c.c_values())
            for (auto s : c.seeds) std::cout << "  conditions c=" << cv << " seed=" << s << " t=" << c.max_horizon() << "\n";
    }
}

int report(const pftrl::ExperimentOutcome& out, const std::string& dir) {
    for (const auto& f : out.failures) std::cerr << "failure: " << f << "\n";
    std::cout << "wrote " << out.files.size() << " files to " << dir << "\n";
    return out.failures.empty() ? kOk : kRunFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Penalised FTRL experiment runner"};
    app.require_subcommand(1);
    Overrides o;
    std::string config_path, report_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--seed-override", o.seed, "run a single seed");
        sub->add_option("--horizon-override", o.horizon, "run a single horizon");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--grid", o.grid, "grid points per axis for oracles");
        sub->add_flag("--dry-run", o.dry_run, "validate the config and print the plan only");
    };
    CLI::App* run = app.add_subcommand("run", "run learners, write CSV traces and report.json");
    add_common(run);
    CLI::App* verify = app.add_subcommand("verify", "check the constraint conditions only");
    add_common(verify);
    CLI::App* audit = app.add_subcommand("audit", "re-check the file digests listed in a report");
    audit->add_option("report", report_path, "report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (audit->parsed()) {
            const auto bad = pftrl::audit_report(report_path);
            for (const auto& b : bad) std::cerr << "mismatch: " << b << "\n";
            std::cout << (bad.empty() ? "all digests match\n" : "digest check failed\n");
            return bad.empty() ? kOk : kRunFailure;
        }
        const pftrl::ExperimentConfig config = load(config_path, o);
        const bool learners = run->parsed();
        if (o.dry_run) {
            print_plan(config, learners);
            return kOk;
        }
        if (learners) return report(pftrl::run_experiment(config), config.output_dir);
        return report(pftrl::verify_experiment(config), config.output_dir);
    } catch (const pftrl::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "run failure: " << e.what() << "\n";
        return kRunFailure;
    }
}
