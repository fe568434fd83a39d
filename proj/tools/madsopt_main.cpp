#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "madsopt/config.hpp"

namespace {

std::vector<double> parse_point(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

struct CommonFlags {
    std::string out_dir;
    long long seed = -1;
    bool serial = false;
    long long max_evals = -1;
};

void apply(madsopt::cli::RunConfig& cfg, const CommonFlags& flags) {
    if (!flags.out_dir.empty()) {
        cfg.output_dir = flags.out_dir;
        cfg.echo["output"]["dir"] = flags.out_dir;
    }
    if (flags.seed >= 0) {
        cfg.solver.seed = static_cast<std::uint64_t>(flags.seed);
        cfg.echo["solver"]["seed"] = cfg.solver.seed;
    }
    if (flags.serial) {
        cfg.solver.workers = 1;
        cfg.echo["solver"]["workers"] = 1;
    }
    if (flags.max_evals > 0) {
        cfg.solver.max_evaluations = flags.max_evals;
        cfg.echo["solver"]["max_evaluations"] = flags.max_evals;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"madsopt: derivative-free optimal control via mesh adaptive direct search"};
    app.require_subcommand(1);

    std::string solve_config, sim_config, point_csv;
    CommonFlags solve_flags, sim_flags;

    CLI::App* solve = app.add_subcommand("solve", "run a MADS solve from a config file");
    solve->add_option("config", solve_config, "config file (key-value or JSON)")->required();
    solve->add_option("--out", solve_flags.out_dir, "output directory override");
    solve->add_option("--seed", solve_flags.seed, "random seed override");
    solve->add_flag("--serial", solve_flags.serial, "force single-threaded evaluation");
    solve->add_option("--max-evals", solve_flags.max_evals, "evaluation budget override");

    CLI::App* sim = app.add_subcommand("simulate", "evaluate one candidate point");
    sim->add_option("config", sim_config, "config file (key-value or JSON)")->required();
    sim->add_option("--point", point_csv, "decision vector v1,v2,...")->required();
    sim->add_option("--out", sim_flags.out_dir, "output directory override");
    sim->add_option("--seed", sim_flags.seed, "random seed override");
    sim->add_flag("--serial", sim_flags.serial, "force single-threaded evaluation");
    sim->add_option("--max-evals", sim_flags.max_evals, "evaluation budget override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) {
            auto cfg = madsopt::cli::load_run_config(
                madsopt::cli::parse_config_file(solve_config));
            apply(cfg, solve_flags);
            return madsopt::cli::run_solve(cfg);
        }
        auto cfg = madsopt::cli::load_run_config(madsopt::cli::parse_config_file(sim_config));
        apply(cfg, sim_flags);
        return madsopt::cli::run_simulate(cfg, parse_point(point_csv));
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
}
