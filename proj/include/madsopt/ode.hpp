#ifndef MADSOPT_ODE_HPP
#define MADSOPT_ODE_HPP

#include <functional>
#include <stdexcept>
#include <vector>

namespace madsopt::ode {

using State = std::vector<double>;

// Explicit first-order system x' = rhs(t, x).
struct OdeSystem {
    int dimension = 0;
    std::function<State(double, const State&)> rhs;
};

struct IntegrationConfig {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    double initial_step = 1e-3;
    double max_step = 1.0;
    double min_step = 1e-13;
    long max_steps = 1000000;
};

struct TrajectoryRecord {
    std::vector<double> times;           // strictly increasing, times[0] = t0
    std::vector<State> states;           // one row per accepted step
    double terminal_time = 0.0;
    State terminal_state;
    bool event_fired = false;
};

// Step-size underflow or step budget exhaustion.
class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class EventDirection { rising, falling, any };

using EventFunction = std::function<double(double, const State&)>;

// Dormand-Prince 5(4) with PI step control; lands exactly on tf.
TrajectoryRecord integrate(const OdeSystem& system, const State& initial_state,
                           double t0, double tf, const IntegrationConfig& config);

// Integrates until the event function crosses zero in the requested
// direction; the crossing is localized by bisection on the bracketing
// step. terminal_time = t_max with event_fired = false if no crossing.
TrajectoryRecord integrate_to_event(const OdeSystem& system, const State& initial_state,
                                    double t0, const EventFunction& event,
                                    EventDirection direction, double t_max,
                                    const IntegrationConfig& config);

// Fixed-step mode (no error control) using the 5th-order propagator.
TrajectoryRecord integrate_fixed(const OdeSystem& system, const State& initial_state,
                                 double t0, double tf, long n_steps);

}  // namespace madsopt::ode

#endif
