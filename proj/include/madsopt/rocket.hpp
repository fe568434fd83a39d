#ifndef MADSOPT_ROCKET_HPP
#define MADSOPT_ROCKET_HPP

#include <vector>

#include "madsopt/mads.hpp"
#include "madsopt/ocp.hpp"
#include "madsopt/ode.hpp"

namespace madsopt::rocket {

using ode::State;

// Specific impulse is the effective exhaust velocity (m/s); multiply
// seconds-valued Isp by g0 = 9.80665 to convert.
struct RocketParams {
    double diameter = 0.155;          // m
    double cd_lower = 0.45;
    double cd_upper = 0.60;
    double isp_lower = 1900.0;        // m/s
    double isp_upper = 2100.0;        // m/s
    double max_thrust = 2500.0;       // N
    double initial_mass = 33.5;       // kg
    double dry_mass_min = 26.0;       // kg
    double target_altitude = 3048.0;  // m
    double velocity_limit = 150.0;    // m/s
    double time_scale = 40.0;         // s, span of the switching-time coordinates
    double t_max = 120.0;             // s, apogee search cap
};

struct AtmosphereSample {
    double density;  // kg/m^3
    double gravity;  // m/s^2
};

// Exponential density (scale height 8500 m) and inverse-square gravity.
AtmosphereSample atmosphere(double altitude);

// State [altitude, vertical velocity, mass]; drag opposes the velocity.
State rocket_rhs(const State& x, double thrust, double drag_coefficient,
                 double exhaust_velocity, const RocketParams& params);

struct ThrottleSchedule {
    std::vector<double> levels;        // N per segment
    std::vector<double> switch_times;  // s, ascending
};

struct TubeTrajectoryPair {
    ode::TrajectoryRecord lower;  // worst drag, worst Isp
    ode::TrajectoryRecord upper;  // best drag, best Isp
    double t_f_lower = 0.0;       // apogee times
    double t_f_upper = 0.0;
};

// Both extreme-parameter trajectories from the shared initial state,
// each terminated by its own apogee (vertical velocity falling through 0).
TubeTrajectoryPair simulate_tube(const ThrottleSchedule& schedule, const RocketParams& params,
                                 const ode::IntegrationConfig& config);

// Min-max apogee-targeting problem over a normalized decision space:
// c = (u_1..u_N, s_1..s_{N-1}) with thrust T_i = u_i * max_thrust and
// switching time sigma_i = s_i * time_scale. Box bounds [0,1] and the
// s ordering are extremal membership; velocity and terminal-mass
// constraints are progressive.
struct RobustProblem {
    int dimension = 0;
    int segments = 0;
    RocketParams params;
    mads::Evaluator evaluate;
    mads::Membership membership;
    std::vector<double> lower_bounds, upper_bounds;

    ThrottleSchedule decode(const mads::Point& c) const;
    // per-leg OCP problems (lower = worst case, upper = best case)
    ocp::OcpProblem leg_lower, leg_upper;
    ocp::InputParameterization leg_param;
};

RobustProblem build_robust_problem(const RocketParams& params, int n_segments,
                                   const ode::IntegrationConfig& config);

}  // namespace madsopt::rocket

#endif
