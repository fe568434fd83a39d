#ifndef MADSOPT_OCP_HPP
#define MADSOPT_OCP_HPP

#include <functional>
#include <optional>
#include <vector>

#include "madsopt/mads.hpp"
#include "madsopt/ode.hpp"

namespace madsopt::ocp {

using ode::State;

using StageFunction = std::function<double(const State& x, const State& u, double t)>;
using BoundaryFunction =
    std::function<double(const State& x0, const State& u0, double t0, const State& xf,
                         const State& uf, double tf)>;

enum class HorizonMode { fixed, decision_final_time, event_terminated };

// Optimal-control problem in explicit form: x' = f(x, u, t), path
// constraints satisfied when g_i <= 0, boundary conditions when h_i = 0.
struct OcpProblem {
    int state_dim = 0;
    int input_dim = 1;
    State initial_state;
    std::function<State(const State& x, const State& u, double t)> dynamics;
    StageFunction lagrange;  // empty -> 0
    StageFunction mayer;     // empty -> 0
    std::vector<StageFunction> path_constraints;
    std::vector<BoundaryFunction> boundary_conditions;
    std::vector<double> path_weights;      // empty -> all 1
    std::vector<double> boundary_weights;  // empty -> all 1

    HorizonMode horizon = HorizonMode::fixed;
    double t0 = 0.0;
    double tf = 1.0;     // fixed horizon
    double t_max = 1.0;  // cap for event-terminated horizons
    double tf_lower = 0.0, tf_upper = 0.0;  // bounds on the tf decision coordinate
    ode::EventFunction terminal_event;
    ode::EventDirection event_direction = ode::EventDirection::falling;

    double path_weight(size_t i) const { return path_weights.empty() ? 1.0 : path_weights[i]; }
    double boundary_weight(size_t i) const {
        return boundary_weights.empty() ? 1.0 : boundary_weights[i];
    }
};

// Input trajectory decoded from a decision point. The control may read
// the state (feedback policies); time-based parameterizations ignore it.
struct ControlLaw {
    std::function<State(double t, const State& x)> input;
    std::vector<double> discontinuities;  // integrator restart times
};

struct InputParameterization {
    enum class Kind {
        zero_order_hold,
        piecewise_constant_free_switching,
        interpolated_polynomial,
        feedback_policy
    };
    Kind kind = Kind::zero_order_hold;
    int input_dim = 1;
    int segments = 1;  // samples / segments / interpolation nodes / policy params
    std::vector<double> lower_bounds;  // per decision coordinate; empty -> unbounded
    std::vector<double> upper_bounds;
    std::function<ControlLaw(const std::vector<double>& params)> policy_factory;

    int dimension() const;
    // box bounds plus switching-time ordering; decided from the point alone
    bool member(const std::vector<double>& point) const;
};

struct CandidateEvaluation {
    double cost = mads::kInf;                // F = Phi + l(tf)
    double violation = mads::kInf;           // H = v_b^2 + sum rho_i v_i(tf)^2
    double boundary_violation = 0.0;         // v_b
    std::vector<double> path_violations;     // v_i(tf)
    ode::TrajectoryRecord trajectory;        // augmented states [x, l, v]
    ControlLaw control;
    double t0 = 0.0, tf = 0.0;
    bool failed = false;
};

ControlLaw decode_input(const std::vector<double>& point, const InputParameterization& param,
                        double t0, double tf);

// Augmented system [x; l; v] with l' = L and v_i' = max{0, g_i}.
ode::OdeSystem augment(const OcpProblem& problem, const ControlLaw& control);

double boundary_violation(const OcpProblem& problem, const State& x0, const State& u0, double t0,
                          const State& xf, const State& uf, double tf);

// Single-shooting evaluation: decode, simulate the augmented system
// (restarting at input discontinuities), then assemble v_b, H and F.
CandidateEvaluation evaluate_candidate(const OcpProblem& problem,
                                       const InputParameterization& param,
                                       const std::vector<double>& point,
                                       const ode::IntegrationConfig& config);

struct Blackbox {
    int dimension = 0;
    mads::Evaluator evaluate;
    mads::Membership membership;
};

Blackbox as_blackbox(const OcpProblem& problem, const InputParameterization& param,
                     const ode::IntegrationConfig& config);

}  // namespace madsopt::ocp

#endif
