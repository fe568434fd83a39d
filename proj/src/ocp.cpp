#include "madsopt/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace madsopt::ocp {

int InputParameterization::dimension() const {
    switch (kind) {
        case Kind::zero_order_hold:
        case Kind::interpolated_polynomial:
            return segments * input_dim;
        case Kind::piecewise_constant_free_switching:
            return segments * input_dim + (segments - 1);
        case Kind::feedback_policy:
            return segments;  // policy parameter count
    }
    return 0;
}

bool InputParameterization::member(const std::vector<double>& point) const {
    const int dim = dimension();
    if (static_cast<int>(point.size()) != dim) return false;
    if (!lower_bounds.empty())
        for (int i = 0; i < dim; ++i)
            if (point[i] < lower_bounds[i]) return false;
    if (!upper_bounds.empty())
        for (int i = 0; i < dim; ++i)
            if (point[i] > upper_bounds[i]) return false;
    if (kind == Kind::piecewise_constant_free_switching && segments > 1) {
        const int base = segments * input_dim;
        double prev = 0.0;
        for (int i = 0; i < segments - 1; ++i) {
            double s = point[base + i];
            if (s < prev) return false;
            prev = s;
        }
    }
    return true;
}

ControlLaw decode_input(const std::vector<double>& point, const InputParameterization& param,
                        double t0, double tf) {
    if (static_cast<int>(point.size()) != param.dimension())
        throw std::invalid_argument("decode_input: decision point dimension mismatch");
    const int nu = param.input_dim;
    const int n = param.segments;
    ControlLaw law;

    switch (param.kind) {
        case InputParameterization::Kind::zero_order_hold: {
            const double dt = (tf - t0) / n;
            law.input = [point, t0, dt, n, nu](double t, const State&) {
                int idx = static_cast<int>(std::floor((t - t0) / dt));
                idx = std::clamp(idx, 0, n - 1);
                State u(nu);
                for (int j = 0; j < nu; ++j) u[j] = point[idx * nu + j];
                return u;
            };
            for (int i = 1; i < n; ++i) law.discontinuities.push_back(t0 + i * dt);
            break;
        }
        case InputParameterization::Kind::piecewise_constant_free_switching: {
            std::vector<double> switches(point.begin() + n * nu, point.end());
            law.input = [point, switches, n, nu](double t, const State&) {
                int idx = 0;
                while (idx < n - 1 && t >= switches[idx]) ++idx;
                State u(nu);
                for (int j = 0; j < nu; ++j) u[j] = point[idx * nu + j];
                return u;
            };
            law.discontinuities = switches;
            break;
        }
        case InputParameterization::Kind::interpolated_polynomial: {
            // polynomial through n uniform nodes, Neville's scheme
            std::vector<double> nodes(n);
            for (int i = 0; i < n; ++i)
                nodes[i] = (n == 1) ? t0 : t0 + i * (tf - t0) / (n - 1);
            law.input = [point, nodes, n, nu](double t, const State&) {
                State u(nu);
                for (int j = 0; j < nu; ++j) {
                    std::vector<double> p(n);
                    for (int i = 0; i < n; ++i) p[i] = point[i * nu + j];
                    for (int level = 1; level < n; ++level)
                        for (int i = 0; i < n - level; ++i)
                            p[i] = ((t - nodes[i + level]) * p[i] + (nodes[i] - t) * p[i + 1]) /
                                   (nodes[i] - nodes[i + level]);
                    u[j] = p[0];
                }
                return u;
            };
            break;
        }
        case InputParameterization::Kind::feedback_policy: {
            if (!param.policy_factory)
                throw std::invalid_argument("decode_input: feedback_policy needs a policy_factory");
            law = param.policy_factory(point);
            break;
        }
    }
    return law;
}

ode::OdeSystem augment(const OcpProblem& problem, const ControlLaw& control) {
    const int nx = problem.state_dim;
    const int ng = static_cast<int>(problem.path_constraints.size());
    ode::OdeSystem sys;
    sys.dimension = nx + 1 + ng;
    sys.rhs = [&problem, &control, nx, ng](double t, const State& z) {
        State x(z.begin(), z.begin() + nx);
        State u = control.input(t, x);
        State dz(nx + 1 + ng);
        State dx = problem.dynamics(x, u, t);
        std::copy(dx.begin(), dx.end(), dz.begin());
        dz[nx] = problem.lagrange ? problem.lagrange(x, u, t) : 0.0;
        for (int i = 0; i < ng; ++i)
            dz[nx + 1 + i] = std::max(0.0, problem.path_constraints[i](x, u, t));
        return dz;
    };
    return sys;
}

double boundary_violation(const OcpProblem& problem, const State& x0, const State& u0, double t0,
                          const State& xf, const State& uf, double tf) {
    double vb = 0.0;
    for (size_t i = 0; i < problem.boundary_conditions.size(); ++i)
        vb += problem.boundary_weight(i) *
              std::abs(problem.boundary_conditions[i](x0, u0, t0, xf, uf, tf));
    return vb;
}

namespace {

void append(ode::TrajectoryRecord& full, const ode::TrajectoryRecord& piece) {
    size_t start = full.times.empty() ? 0 : 1;  // skip the duplicated knot
    for (size_t i = start; i < piece.times.size(); ++i) {
        full.times.push_back(piece.times[i]);
        full.states.push_back(piece.states[i]);
    }
}

}  // namespace

CandidateEvaluation evaluate_candidate(const OcpProblem& problem,
                                       const InputParameterization& param,
                                       const std::vector<double>& point,
                                       const ode::IntegrationConfig& config) {
    CandidateEvaluation out;
    const int nx = problem.state_dim;
    const int ng = static_cast<int>(problem.path_constraints.size());
    const bool decision_tf = problem.horizon == HorizonMode::decision_final_time;

    std::vector<double> params = point;
    double horizon_end = problem.tf;
    if (decision_tf) {
        if (point.empty()) throw std::invalid_argument("evaluate_candidate: empty point");
        horizon_end = point.back();
        params.pop_back();
    } else if (problem.horizon == HorizonMode::event_terminated) {
        horizon_end = problem.t_max;
    }

    out.control = decode_input(params, param, problem.t0, horizon_end);
    out.t0 = problem.t0;

    ode::OdeSystem sys = augment(problem, out.control);
    State z0(nx + 1 + ng, 0.0);
    std::copy(problem.initial_state.begin(), problem.initial_state.end(), z0.begin());

    std::vector<double> knots;
    knots.push_back(problem.t0);
    for (double d : out.control.discontinuities)
        if (d > problem.t0 && d < horizon_end) knots.push_back(d);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    knots.push_back(horizon_end);

    const bool event_mode = problem.horizon == HorizonMode::event_terminated;
    ode::TrajectoryRecord full;
    State z = z0;
    bool fired = false;
    try {
        for (size_t s = 0; s + 1 < knots.size() && !fired; ++s) {
            double a = knots[s], b = knots[s + 1];
            if (b - a <= 1e-14) continue;
            ode::TrajectoryRecord piece;
            if (event_mode) {
                auto ev = [&](double t, const State& zz) {
                    State x(zz.begin(), zz.begin() + nx);
                    return problem.terminal_event(t, x);
                };
                piece = ode::integrate_to_event(sys, z, a, ev, problem.event_direction, b, config);
                fired = piece.event_fired;
            } else {
                piece = ode::integrate(sys, z, a, b, config);
            }
            z = piece.terminal_state;
            append(full, piece);
        }
        if (event_mode && !fired)
            throw ode::IntegrationError("terminal event did not fire before t_max");
    } catch (const ode::IntegrationError&) {
        out.failed = true;
        out.cost = mads::kInf;
        out.violation = mads::kInf;
        return out;
    }

    full.terminal_time = full.times.back();
    full.terminal_state = z;
    full.event_fired = fired;
    out.trajectory = std::move(full);
    out.tf = out.trajectory.terminal_time;

    State xf(z.begin(), z.begin() + nx);
    double lagrange_final = z[nx];
    out.path_violations.assign(z.begin() + nx + 1, z.end());

    State u0 = out.control.input(problem.t0, problem.initial_state);
    State uf = out.control.input(out.tf, xf);

    out.boundary_violation =
        boundary_violation(problem, problem.initial_state, u0, problem.t0, xf, uf, out.tf);

    double h = out.boundary_violation * out.boundary_violation;
    for (int i = 0; i < ng; ++i)
        h += problem.path_weight(i) * out.path_violations[i] * out.path_violations[i];
    out.violation = h;

    double phi = problem.mayer ? problem.mayer(xf, uf, out.tf) : 0.0;
    out.cost = phi + lagrange_final;
    if (!std::isfinite(out.cost) || !std::isfinite(out.violation)) {
        out.failed = true;
        out.cost = mads::kInf;
        out.violation = mads::kInf;
    }
    return out;
}

Blackbox as_blackbox(const OcpProblem& problem, const InputParameterization& param,
                     const ode::IntegrationConfig& config) {
    Blackbox bb;
    const bool decision_tf = problem.horizon == HorizonMode::decision_final_time;
    bb.dimension = param.dimension() + (decision_tf ? 1 : 0);

    bb.membership = [problem, param, decision_tf, dim = bb.dimension](const mads::Point& p) {
        if (static_cast<int>(p.size()) != dim) return false;
        if (decision_tf) {
            double tfv = p.back();
            if (!(tfv > problem.t0)) return false;
            if (problem.tf_upper > problem.tf_lower &&
                (tfv < problem.tf_lower || tfv > problem.tf_upper))
                return false;
            return param.member({p.begin(), p.end() - 1});
        }
        return param.member(p);
    };

    bb.evaluate = [problem, param, config, membership = bb.membership](const mads::Point& p) {
        mads::Evaluation e;
        if (!membership(p)) return e;  // (+inf, +inf)
        CandidateEvaluation c = evaluate_candidate(problem, param, p, config);
        e.cost = c.cost;
        e.violation = c.violation;
        if (!c.failed) {
            e.internals.push_back(c.boundary_violation);
            for (double v : c.path_violations) e.internals.push_back(v);
        }
        return e;
    };
    return bb;
}

}  // namespace madsopt::ocp
