#ifndef MADSOPT_CONFIG_HPP
#define MADSOPT_CONFIG_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "madsopt/mads.hpp"
#include "madsopt/ode.hpp"
#include "madsopt/rocket.hpp"

namespace madsopt::cli {

enum class ProblemKind { quadratic, absolute_sum, linear_disk, rocket };

// Resolved run configuration; construction validates ranges and rejects
// unknown keys.
struct RunConfig {
    ProblemKind kind = ProblemKind::quadratic;
    int dimension = 2;                 // quadratic / absolute_sum
    std::vector<double> center;        // quadratic optimum, defaults to the origin

    mads::SolveConfig solver;
    std::string search_name = "none";  // "none" | "speculative"
    ode::IntegrationConfig integrator;

    rocket::RocketParams rocket_params;
    int rocket_segments = 5;

    std::vector<std::vector<double>> initial_points;
    std::string output_dir = "out";

    nlohmann::json echo;  // the exact resolved configuration
};

// Key-value config text (TOML-style subset: sections, scalars, arrays,
// '#' comments) parsed into a JSON tree.
nlohmann::json parse_toml(const std::string& text);

// Loads .toml or .json by content (JSON is tried first).
nlohmann::json parse_config_file(const std::string& path);

RunConfig load_run_config(const nlohmann::json& tree);

int run_solve(const RunConfig& config);
int run_simulate(const RunConfig& config, const std::vector<double>& point);

}  // namespace madsopt::cli

#endif
