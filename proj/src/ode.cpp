#include "madsopt/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace madsopt::ode {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 5th-order minus embedded 4th-order weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double safety = 0.9;
constexpr double fac_min = 0.2;
constexpr double fac_max = 5.0;
constexpr double pi_alpha = 0.7 / 5.0;
constexpr double pi_beta = 0.4 / 5.0;

bool finite(const State& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

struct StepResult {
    State y_new;
    State k_last;   // f(t+h, y_new), FSAL
    double error;   // scaled error norm; <= 1 means accept
    bool ok;        // rhs stayed finite
};

StepResult dopri5_step(const OdeSystem& sys, double t, const State& y, const State& k1,
                       double h, const IntegrationConfig& cfg) {
    const int n = sys.dimension;
    State yt(n);
    auto stage = [&](double c, auto&&... terms) -> State {
        (void)c;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            ((acc += terms.first * terms.second[i]), ...);
            yt[i] = y[i] + h * acc;
        }
        return sys.rhs(t + c * h, yt);
    };
    using P = std::pair<double, const State&>;
    StepResult r;
    r.ok = false;
    State k2 = stage(c2, P{a21, k1});
    if (!finite(k2)) return r;
    State k3 = stage(c3, P{a31, k1}, P{a32, k2});
    if (!finite(k3)) return r;
    State k4 = stage(c4, P{a41, k1}, P{a42, k2}, P{a43, k3});
    if (!finite(k4)) return r;
    State k5 = stage(c5, P{a51, k1}, P{a52, k2}, P{a53, k3}, P{a54, k4});
    if (!finite(k5)) return r;
    State k6 = stage(1.0, P{a61, k1}, P{a62, k2}, P{a63, k3}, P{a64, k4}, P{a65, k5});
    if (!finite(k6)) return r;

    r.y_new.resize(n);
    for (int i = 0; i < n; ++i)
        r.y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    if (!finite(r.y_new)) return r;
    r.k_last = sys.rhs(t + h, r.y_new);
    if (!finite(r.k_last)) return r;

    double err = 0.0;
    for (int i = 0; i < n; ++i) {
        double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                        e7 * r.k_last[i]);
        double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(r.y_new[i]));
        err += (e / sc) * (e / sc);
    }
    r.error = std::sqrt(err / n);
    r.ok = std::isfinite(r.error);
    return r;
}

}  // namespace

TrajectoryRecord integrate(const OdeSystem& system, const State& initial_state, double t0,
                           double tf, const IntegrationConfig& config) {
    if (!(tf > t0)) throw std::invalid_argument("integrate: tf must exceed t0");

    TrajectoryRecord rec;
    rec.times.push_back(t0);
    rec.states.push_back(initial_state);

    double t = t0;
    State y = initial_state;
    State k1 = system.rhs(t, y);
    if (!finite(k1)) throw IntegrationError("rhs not finite at initial state");

    double h = std::clamp(config.initial_step, config.min_step, config.max_step);
    double err_prev = 1.0;
    long steps = 0;

    while (t < tf) {
        bool clipped = h > tf - t;
        if (clipped) h = tf - t;
        if (++steps > config.max_steps) throw IntegrationError("max_steps exceeded");

        StepResult s = dopri5_step(system, t, y, k1, h, config);
        if (!s.ok) {
            h *= 0.5;
            if (h < config.min_step) throw IntegrationError("step size underflow (non-finite rhs)");
            continue;
        }
        if (s.error <= 1.0) {
            t += h;
            y = std::move(s.y_new);
            k1 = std::move(s.k_last);
            rec.times.push_back(t);
            rec.states.push_back(y);
            double fac = safety * std::pow(std::max(s.error, 1e-10), -pi_alpha) *
                         std::pow(err_prev, pi_beta);
            fac = std::clamp(fac, fac_min, fac_max);
            h = std::clamp(h * fac, config.min_step, config.max_step);
            err_prev = std::max(s.error, 1e-4);
        } else {
            double fac = std::clamp(safety * std::pow(s.error, -pi_alpha), fac_min, 1.0);
            h *= fac;
            if (h < config.min_step && !clipped)
                throw IntegrationError("step size underflow");
            h = std::max(h, config.min_step);
        }
    }
    rec.terminal_time = t;
    rec.terminal_state = y;
    return rec;
}

TrajectoryRecord integrate_to_event(const OdeSystem& system, const State& initial_state,
                                    double t0, const EventFunction& event,
                                    EventDirection direction, double t_max,
                                    const IntegrationConfig& config) {
    if (!(t_max > t0)) throw std::invalid_argument("integrate_to_event: t_max must exceed t0");

    auto crossed = [&](double e_left, double e_right) {
        switch (direction) {
            case EventDirection::rising: return e_left <= 0.0 && e_right > 0.0;
            case EventDirection::falling: return e_left >= 0.0 && e_right < 0.0;
            case EventDirection::any:
                return (e_left <= 0.0 && e_right > 0.0) || (e_left >= 0.0 && e_right < 0.0);
        }
        return false;
    };

    TrajectoryRecord rec;
    rec.times.push_back(t0);
    rec.states.push_back(initial_state);

    double t = t0;
    State y = initial_state;
    State k1 = system.rhs(t, y);
    if (!finite(k1)) throw IntegrationError("rhs not finite at initial state");
    double e_prev = event(t, y);

    double h = std::clamp(config.initial_step, config.min_step, config.max_step);
    double err_prev = 1.0;
    long steps = 0;

    while (t < t_max) {
        bool clipped = h > t_max - t;
        if (clipped) h = t_max - t;
        if (++steps > config.max_steps) throw IntegrationError("max_steps exceeded");

        StepResult s = dopri5_step(system, t, y, k1, h, config);
        if (!s.ok) {
            h *= 0.5;
            if (h < config.min_step) throw IntegrationError("step size underflow (non-finite rhs)");
            continue;
        }
        if (s.error > 1.0) {
            double fac = std::clamp(safety * std::pow(s.error, -pi_alpha), fac_min, 1.0);
            h *= fac;
            if (h < config.min_step && !clipped)
                throw IntegrationError("step size underflow");
            h = std::max(h, config.min_step);
            continue;
        }

        double t_new = t + h;
        double e_new = event(t_new, s.y_new);

        if (crossed(e_prev, e_new)) {
            // bisect on the bracketing step, re-integrating from the left state
            double ta = t, tb = t_new;
            State ya = y;
            double ea = e_prev;
            const double tol = 1e-10 * std::max(tb - ta, 1e-30);
            IntegrationConfig sub = config;
            while (tb - ta > tol) {
                double tm = 0.5 * (ta + tb);
                State ym;
                if (tm - ta < 4 * config.min_step) break;
                sub.initial_step = std::min(config.initial_step, tm - ta);
                TrajectoryRecord piece = integrate(system, ya, ta, tm, sub);
                ym = piece.terminal_state;
                double em = event(tm, ym);
                if (crossed(ea, em)) {
                    tb = tm;
                } else {
                    ta = tm;
                    ya = std::move(ym);
                    ea = em;
                }
            }
            rec.times.push_back(tb);
            rec.states.push_back(ya);  // state at ta, within tol of the crossing
            rec.terminal_time = tb;
            rec.terminal_state = rec.states.back();
            rec.event_fired = true;
            return rec;
        }

        t = t_new;
        y = std::move(s.y_new);
        k1 = std::move(s.k_last);
        e_prev = e_new;
        rec.times.push_back(t);
        rec.states.push_back(y);
        double fac = safety * std::pow(std::max(s.error, 1e-10), -pi_alpha) *
                     std::pow(err_prev, pi_beta);
        fac = std::clamp(fac, fac_min, fac_max);
        h = std::clamp(h * fac, config.min_step, config.max_step);
        err_prev = std::max(s.error, 1e-4);
    }

    rec.terminal_time = t;
    rec.terminal_state = y;
    rec.event_fired = false;
    return rec;
}

TrajectoryRecord integrate_fixed(const OdeSystem& system, const State& initial_state, double t0,
                                 double tf, long n_steps) {
    if (!(tf > t0) || n_steps < 1)
        throw std::invalid_argument("integrate_fixed: bad interval or step count");

    IntegrationConfig cfg;  // tolerances unused below
    TrajectoryRecord rec;
    rec.times.push_back(t0);
    rec.states.push_back(initial_state);

    const double h = (tf - t0) / static_cast<double>(n_steps);
    State y = initial_state;
    for (long i = 0; i < n_steps; ++i) {
        double t = t0 + i * h;
        State k1 = system.rhs(t, y);
        StepResult s = dopri5_step(system, t, y, k1, h, cfg);
        if (!s.ok) throw IntegrationError("non-finite rhs in fixed-step mode");
        y = std::move(s.y_new);
        rec.times.push_back(t0 + (i + 1) * h);
        rec.states.push_back(y);
    }
    rec.terminal_time = tf;
    rec.terminal_state = y;
    return rec;
}

}  // namespace madsopt::ode
