#include "madsopt/rocket.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace madsopt::rocket {

namespace {
constexpr double kG0 = 9.80665;          // m/s^2
constexpr double kEarthRadius = 6.371e6; // m
constexpr double kSeaLevelDensity = 1.225;  // kg/m^3
constexpr double kScaleHeight = 8500.0;  // m
constexpr double kPi = 3.14159265358979323846;
}  // namespace

AtmosphereSample atmosphere(double altitude) {
    AtmosphereSample s;
    s.density = kSeaLevelDensity * std::exp(-altitude / kScaleHeight);
    double r = kEarthRadius / (kEarthRadius + altitude);
    s.gravity = kG0 * r * r;
    return s;
}

State rocket_rhs(const State& x, double thrust, double drag_coefficient,
                 double exhaust_velocity, const RocketParams& params) {
    const double h = x[0], v = x[1], m = x[2];
    if (m <= 0.0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan};  // step rejected, surfaces as an evaluation failure
    }
    AtmosphereSample atm = atmosphere(h);
    const double area = kPi * params.diameter * params.diameter / 4.0;
    const double drag = 0.5 * drag_coefficient * atm.density * area * v * std::abs(v);
    return {v, (thrust - drag) / m - atm.gravity, -thrust / exhaust_velocity};
}

namespace {

ocp::OcpProblem make_leg(const RocketParams& params, double cd, double exhaust_velocity) {
    ocp::OcpProblem leg;
    leg.state_dim = 3;
    leg.input_dim = 1;
    leg.initial_state = {0.0, 0.0, params.initial_mass};
    leg.dynamics = [params, cd, exhaust_velocity](const State& x, const State& u, double) {
        return rocket_rhs(x, u[0], cd, exhaust_velocity, params);
    };
    leg.mayer = [target = params.target_altitude](const State& xf, const State&, double) {
        return std::abs(xf[0] - target);
    };
    leg.path_constraints.push_back(
        [limit = params.velocity_limit](const State& x, const State&, double) {
            return x[1] - limit;
        });
    leg.boundary_conditions.push_back(
        [floor = params.dry_mass_min](const State&, const State&, double, const State& xf,
                                      const State&, double) {
            return std::max(0.0, floor - xf[2]);  // terminal mass floor as a hinge
        });
    leg.horizon = ocp::HorizonMode::event_terminated;
    leg.t0 = 0.0;
    leg.t_max = params.t_max;
    leg.terminal_event = [](double, const State& x) { return x[1]; };  // apogee
    leg.event_direction = ode::EventDirection::falling;
    return leg;
}

ocp::InputParameterization make_param(const RocketParams& params, int n_segments) {
    ocp::InputParameterization p;
    p.kind = ocp::InputParameterization::Kind::piecewise_constant_free_switching;
    p.input_dim = 1;
    p.segments = n_segments;
    p.lower_bounds.assign(p.dimension(), 0.0);
    p.upper_bounds.assign(n_segments, params.max_thrust);
    p.upper_bounds.resize(p.dimension(), params.time_scale);
    return p;
}

std::vector<double> schedule_point(const ThrottleSchedule& schedule) {
    std::vector<double> pt = schedule.levels;
    pt.insert(pt.end(), schedule.switch_times.begin(), schedule.switch_times.end());
    return pt;
}

}  // namespace

TubeTrajectoryPair simulate_tube(const ThrottleSchedule& schedule, const RocketParams& params,
                                 const ode::IntegrationConfig& config) {
    const int n = static_cast<int>(schedule.levels.size());
    ocp::InputParameterization param = make_param(params, n);
    std::vector<double> pt = schedule_point(schedule);

    // lower: worst drag / worst Isp; upper: best drag / best Isp
    ocp::OcpProblem lower = make_leg(params, params.cd_upper, params.isp_lower);
    ocp::OcpProblem upper = make_leg(params, params.cd_lower, params.isp_upper);

    ocp::CandidateEvaluation el = ocp::evaluate_candidate(lower, param, pt, config);
    ocp::CandidateEvaluation eu = ocp::evaluate_candidate(upper, param, pt, config);
    if (el.failed || eu.failed)
        throw ode::IntegrationError("simulate_tube: a tube trajectory failed to reach apogee");

    TubeTrajectoryPair pair;
    pair.lower = std::move(el.trajectory);
    pair.upper = std::move(eu.trajectory);
    pair.t_f_lower = pair.lower.terminal_time;
    pair.t_f_upper = pair.upper.terminal_time;
    return pair;
}

ThrottleSchedule RobustProblem::decode(const mads::Point& c) const {
    ThrottleSchedule s;
    for (int i = 0; i < segments; ++i) s.levels.push_back(c[i] * params.max_thrust);
    for (int i = 0; i < segments - 1; ++i)
        s.switch_times.push_back(c[segments + i] * params.time_scale);
    return s;
}

RobustProblem build_robust_problem(const RocketParams& params, int n_segments,
                                   const ode::IntegrationConfig& config) {
    if (n_segments < 1) throw std::invalid_argument("build_robust_problem: n_segments < 1");

    RobustProblem rp;
    rp.segments = n_segments;
    rp.params = params;
    rp.dimension = 2 * n_segments - 1;
    rp.lower_bounds.assign(rp.dimension, 0.0);
    rp.upper_bounds.assign(rp.dimension, 1.0);
    rp.leg_lower = make_leg(params, params.cd_upper, params.isp_lower);
    rp.leg_upper = make_leg(params, params.cd_lower, params.isp_upper);
    rp.leg_param = make_param(params, n_segments);

    const int n = n_segments;
    rp.membership = [n, dim = rp.dimension](const mads::Point& c) {
        if (static_cast<int>(c.size()) != dim) return false;
        for (double v : c)
            if (v < 0.0 || v > 1.0) return false;
        double prev = 0.0;
        for (int i = 0; i < n - 1; ++i) {
            if (c[n + i] < prev) return false;
            prev = c[n + i];
        }
        return true;
    };

    rp.evaluate = [rpp = rp.params, n, lower = rp.leg_lower, upper = rp.leg_upper,
                   param = rp.leg_param, config, membership = rp.membership,
                   dim = rp.dimension](const mads::Point& c) {
        mads::Evaluation e;
        if (!membership(c)) return e;  // (+inf, +inf)
        std::vector<double> pt;
        pt.reserve(dim);
        for (int i = 0; i < n; ++i) pt.push_back(c[i] * rpp.max_thrust);
        for (int i = 0; i < n - 1; ++i) pt.push_back(c[n + i] * rpp.time_scale);

        ocp::CandidateEvaluation el = ocp::evaluate_candidate(lower, param, pt, config);
        ocp::CandidateEvaluation eu = ocp::evaluate_candidate(upper, param, pt, config);
        if (el.failed || eu.failed) return e;

        e.cost = std::max(el.cost, eu.cost);
        e.violation = el.violation + eu.violation;
        e.internals = {el.boundary_violation, el.path_violations[0], eu.boundary_violation,
                       eu.path_violations[0]};
        return e;
    };
    return rp;
}

}  // namespace madsopt::rocket
