#include "madsopt/mads.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

namespace madsopt::mads {

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::dominating: return "dominating";
        case Outcome::improving: return "improving";
        case Outcome::unsuccessful: return "unsuccessful";
    }
    return "?";
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::frame_tolerance: return "frame_tolerance";
        case Termination::max_evaluations: return "max_evaluations";
        case Termination::max_iterations: return "max_iterations";
    }
    return "?";
}

double mesh_size_from_frame(double frame_size) {
    if (!(frame_size > 0.0))
        throw std::invalid_argument("mesh_size_from_frame: frame_size must be positive");
    return std::min(frame_size, frame_size * frame_size);
}

double update_frame(double frame_size, Outcome outcome, double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("update_frame: tau must lie in (0,1)");
    switch (outcome) {
        case Outcome::dominating: return frame_size / tau;
        case Outcome::improving: return frame_size;
        case Outcome::unsuccessful: return frame_size * tau;
    }
    return frame_size;
}

namespace {

// uniform integer in [lo, hi]; modulo bias is irrelevant here and this
// keeps the stream identical across standard library implementations
long draw_int(std::mt19937_64& rng, long lo, long hi) {
    return lo + static_cast<long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

bool nonsingular(const std::vector<std::vector<long>>& basis) {
    const int m = static_cast<int>(basis.size());
    std::vector<std::vector<double>> a(m, std::vector<double>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a[i][j] = static_cast<double>(basis[j][i]);
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-9) return false;
        std::swap(a[piv], a[col]);
        for (int r = col + 1; r < m; ++r) {
            double f = a[r][col] / a[col][col];
            for (int cidx = col; cidx < m; ++cidx) a[r][cidx] -= f * a[col][cidx];
        }
    }
    return true;
}

}  // namespace

std::vector<std::vector<long>> generate_poll_directions(int dimension, const MeshState& mesh,
                                                        std::mt19937_64& rng) {
    if (dimension < 1) throw std::invalid_argument("generate_poll_directions: dimension < 1");
    const int m = dimension;
    const long ratio =
        std::max(1L, static_cast<long>(std::floor(mesh.frame_size / mesh.mesh_size + 1e-9)));

    std::vector<std::vector<long>> basis(m, std::vector<long>(m, 0));

    if (ratio == 1) {
        for (int j = 0; j < m; ++j) basis[j][j] = 1;  // GPS geometry
    } else {
        bool ok = false;
        for (int attempt = 0; attempt < 32 && !ok; ++attempt) {
            // seed direction q with ||q||_inf = ratio
            std::vector<long> q(m);
            for (int i = 0; i < m; ++i) q[i] = draw_int(rng, -ratio, ratio);
            int spike = static_cast<int>(draw_int(rng, 0, m - 1));
            q[spike] = (draw_int(rng, 0, 1) == 0) ? -ratio : ratio;

            long qq = 0;
            for (long qi : q) qq += qi * qi;

            // Householder-style integer basis: h_j = qq*e_j - 2*q_j*q,
            // columns mutually orthogonal; rescale to ||b_j||_inf = ratio
            for (int j = 0; j < m; ++j) {
                std::vector<long> h(m);
                for (int i = 0; i < m; ++i) h[i] = (i == j ? qq : 0) - 2 * q[j] * q[i];
                long mx = 0;
                for (long hi : h) mx = std::max(mx, std::labs(hi));
                for (int i = 0; i < m; ++i)
                    basis[j][i] = std::lround(static_cast<double>(h[i]) *
                                              static_cast<double>(ratio) /
                                              static_cast<double>(mx));
            }
            ok = nonsingular(basis);
        }
        if (!ok) {
            for (int j = 0; j < m; ++j) {
                std::fill(basis[j].begin(), basis[j].end(), 0L);
                basis[j][j] = ratio;
            }
        }
    }

    std::vector<std::vector<long>> dirs;
    dirs.reserve(2 * m);
    for (int j = 0; j < m; ++j) dirs.push_back(basis[j]);
    for (int j = 0; j < m; ++j) {
        std::vector<long> neg(m);
        for (int i = 0; i < m; ++i) neg[i] = -basis[j][i];
        dirs.push_back(std::move(neg));
    }
    return dirs;
}

long frame_lattice_count(int dimension, double frame_size, double mesh_size) {
    if (dimension < 1 || !(frame_size > 0.0) || !(mesh_size > 0.0))
        throw std::invalid_argument("frame_lattice_count: bad arguments");
    const long r = static_cast<long>(std::floor(frame_size / mesh_size + 1e-9));
    long count = 0;
    std::vector<long> z(dimension, -r);
    while (true) {
        bool all_zero = std::all_of(z.begin(), z.end(), [](long v) { return v == 0; });
        if (!all_zero) ++count;
        int i = 0;
        while (i < dimension && ++z[i] > r) z[i++] = -r;
        if (i == dimension) break;
    }
    return count;
}

bool dominates_feasible(const Evaluation& p, const Evaluation& y) {
    if (!p.feasible() || !y.feasible())
        throw std::invalid_argument("dominates_feasible: both evaluations must be feasible");
    return p.cost < y.cost;
}

bool dominates_infeasible(const Evaluation& p, const Evaluation& y) {
    if (p.feasible() || y.feasible() || !std::isfinite(p.violation) || !std::isfinite(y.violation))
        throw std::invalid_argument(
            "dominates_infeasible: both evaluations must be infeasible with finite violation");
    return p.cost <= y.cost && p.violation <= y.violation &&
           (p.cost < y.cost || p.violation < y.violation);
}

Evaluator extremal_wrap(Evaluator inner, Membership membership) {
    return [inner = std::move(inner), membership = std::move(membership)](const Point& p) {
        if (!membership(p)) {
            Evaluation e;
            e.cost = kInf;
            e.violation = kInf;
            return e;
        }
        return inner(p);
    };
}

namespace {

Evaluation safe_eval(const Evaluator& evaluator, const Point& p) {
    try {
        return evaluator(p);
    } catch (const std::exception&) {
        Evaluation e;
        e.cost = kInf;
        e.violation = kInf;
        return e;
    }
}

bool lex_less(const Point& a, const Point& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Evaluates candidates (serially and lazily, or all up front in
// parallel), classifies them against the entry incumbents in a fixed
// order and applies the winning update. Parallel and serial runs agree
// because the reduction order is the candidate order.
StepResult classify_candidates(BarrierState& barrier, const std::vector<Point>& candidates,
                               const Evaluator& evaluator, bool opportunistic, int workers,
                               bool collect_improving) {
    StepResult result;
    const size_t n = candidates.size();
    if (n == 0) return result;

    std::vector<Evaluation> evals(n);
    std::vector<bool> have(n, false);

    if (workers > 1) {
        std::vector<std::future<Evaluation>> futs;
        futs.reserve(n);
        for (size_t i = 0; i < n; ++i)
            futs.push_back(std::async(std::launch::async,
                                      [&evaluator, &candidates, i] {
                                          return safe_eval(evaluator, candidates[i]);
                                      }));
        for (size_t i = 0; i < n; ++i) {
            evals[i] = futs[i].get();
            have[i] = true;
        }
        result.evaluations = static_cast<long>(n);
    }

    auto get = [&](size_t i) -> const Evaluation& {
        if (!have[i]) {
            evals[i] = safe_eval(evaluator, candidates[i]);
            have[i] = true;
            ++result.evaluations;
        }
        return evals[i];
    };

    const std::optional<Incumbent> feas0 = barrier.feasible;
    const std::optional<Incumbent> infeas0 = barrier.infeasible;
    const double eta0 = barrier.eta;

    std::optional<size_t> best_feas;
    std::optional<size_t> best_infeas;
    std::vector<size_t> improving;

    auto better = [&](size_t i, const std::optional<size_t>& cur) {
        if (!cur) return true;
        const Evaluation& a = get(i);
        const Evaluation& b = get(*cur);
        if (a.cost != b.cost) return a.cost < b.cost;
        return lex_less(candidates[i], candidates[*cur]);
    };

    for (size_t i = 0; i < n; ++i) {
        const Evaluation& e = get(i);
        bool dominating = false;
        if (e.feasible()) {
            if (!feas0 || e.cost < feas0->eval.cost) {
                if (better(i, best_feas)) best_feas = i;
                dominating = true;
            }
        } else if (std::isfinite(e.violation)) {
            if (infeas0 && dominates_infeasible(e, infeas0->eval)) {
                if (better(i, best_infeas)) best_infeas = i;
                dominating = true;
            } else if (collect_improving && e.violation < eta0) {
                improving.push_back(i);
            }
        }
        if (dominating && opportunistic) break;
    }

    if (best_feas || best_infeas) {
        result.outcome = Outcome::dominating;
        if (best_feas) barrier.feasible = Incumbent{candidates[*best_feas], get(*best_feas)};
        if (best_infeas) {
            barrier.infeasible = Incumbent{candidates[*best_infeas], get(*best_infeas)};
            barrier.eta = barrier.infeasible->eval.violation;
        }
    } else if (!improving.empty()) {
        // adopt the improving point with the largest violation below eta
        size_t pick = improving.front();
        for (size_t i : improving)
            if (get(i).violation > get(pick).violation) pick = i;
        result.outcome = Outcome::improving;
        barrier.infeasible = Incumbent{candidates[pick], get(pick)};
        barrier.eta = barrier.infeasible->eval.violation;
    } else {
        result.outcome = Outcome::unsuccessful;
    }
    return result;
}

}  // namespace

StepResult poll_step(BarrierState& barrier, const MeshState& mesh, const Evaluator& evaluator,
                     std::mt19937_64& rng, bool opportunistic, int workers) {
    if (!barrier.has_incumbent())
        throw std::invalid_argument("poll_step: at least one incumbent required");

    std::vector<Point> anchors;
    if (barrier.feasible) anchors.push_back(barrier.feasible->point);
    if (barrier.infeasible) anchors.push_back(barrier.infeasible->point);
    const int m = static_cast<int>(anchors.front().size());

    auto dirs = generate_poll_directions(m, mesh, rng);

    std::vector<Point> candidates;
    candidates.reserve(anchors.size() * dirs.size());
    for (const Point& a : anchors)
        for (const auto& d : dirs) {
            Point p(m);
            for (int i = 0; i < m; ++i) p[i] = a[i] + mesh.mesh_size * static_cast<double>(d[i]);
            candidates.push_back(std::move(p));
        }

    return classify_candidates(barrier, candidates, evaluator, opportunistic, workers, true);
}

StepResult search_step(BarrierState& barrier, const MeshState& mesh,
                       const SearchStrategy& strategy, const SearchContext& context,
                       const Evaluator& evaluator, bool opportunistic, int workers) {
    StepResult result;
    if (!strategy) return result;
    std::vector<Point> points = strategy(context);
    if (points.empty()) return result;

    const Point& anchor =
        barrier.feasible ? barrier.feasible->point : barrier.infeasible->point;
    for (Point& p : points)
        for (size_t i = 0; i < p.size(); ++i)
            p[i] = anchor[i] + mesh.mesh_size * std::round((p[i] - anchor[i]) / mesh.mesh_size);

    // the search phase only looks for domination (improving points are
    // left to the poll phase)
    return classify_candidates(barrier, points, evaluator, opportunistic, workers, false);
}

SearchStrategy speculative_search() {
    return [](const SearchContext& ctx) -> std::vector<Point> {
        if (!ctx.previous_incumbent) return {};
        const Incumbent* cur =
            ctx.barrier.feasible ? &*ctx.barrier.feasible : &*ctx.barrier.infeasible;
        const Point& prev = *ctx.previous_incumbent;
        Point p(cur->point.size());
        for (size_t i = 0; i < p.size(); ++i)
            p[i] = cur->point[i] + 2.0 * (cur->point[i] - prev[i]);
        return {p};
    };
}

SolveReport solve(const Problem& problem, const SolveConfig& config,
                  const std::vector<Point>& initial_points) {
    if (problem.dimension < 1) throw std::invalid_argument("solve: dimension < 1");
    if (!(config.initial_frame > 0.0)) throw std::invalid_argument("solve: initial_frame <= 0");
    if (!(config.tau > 0.0 && config.tau < 1.0))
        throw std::invalid_argument("solve: tau must lie in (0,1)");
    if (config.eps_stop < 0.0) throw std::invalid_argument("solve: eps_stop < 0");
    if (initial_points.empty()) throw std::invalid_argument("solve: no initial point");
    for (const Point& p : initial_points)
        if (static_cast<int>(p.size()) != problem.dimension)
            throw std::invalid_argument("solve: initial point dimension mismatch");

    Evaluator evaluator = problem.evaluate;
    if (problem.membership) evaluator = extremal_wrap(evaluator, problem.membership);
    if (config.barrier_mode == BarrierMode::extremal) {
        Evaluator inner = evaluator;
        evaluator = [inner](const Point& p) {
            Evaluation e = inner(p);
            if (!e.feasible()) {
                e.cost = kInf;
                e.violation = kInf;
            }
            return e;
        };
    }

    SolveReport report;
    BarrierState barrier;

    for (const Point& p : initial_points) {
        Evaluation e = safe_eval(evaluator, p);
        ++report.evaluations;
        if (e.feasible()) {
            if (!barrier.feasible || e.cost < barrier.feasible->eval.cost)
                barrier.feasible = Incumbent{p, e};
        } else if (std::isfinite(e.violation)) {
            if (!barrier.infeasible || e.violation < barrier.infeasible->eval.violation)
                barrier.infeasible = Incumbent{p, e};
        }
    }
    if (config.barrier_mode == BarrierMode::extremal && !barrier.feasible)
        throw std::invalid_argument(
            "solve: extremal barrier mode requires a feasible initial point");
    if (!barrier.has_incumbent())
        throw std::invalid_argument("solve: every initial point was rejected");

    MeshState mesh;
    mesh.frame_size = config.initial_frame;
    mesh.mesh_size = mesh_size_from_frame(mesh.frame_size);
    mesh.tau = config.tau;
    mesh.iteration = 0;

    std::mt19937_64 rng(config.seed);
    std::optional<Point> previous_primary;

    while (true) {
        if (mesh.frame_size < config.eps_stop) {
            report.termination = Termination::frame_tolerance;
            break;
        }
        if (report.iterations >= config.max_iterations) {
            report.termination = Termination::max_iterations;
            break;
        }
        if (report.evaluations >= config.max_evaluations) {
            report.termination = Termination::max_evaluations;
            break;
        }

        mesh.mesh_size = mesh_size_from_frame(mesh.frame_size);
        Point primary_before =
            barrier.feasible ? barrier.feasible->point : barrier.infeasible->point;

        Outcome outcome = Outcome::unsuccessful;
        bool polled = true;
        if (config.search) {
            SearchContext ctx{barrier, mesh, previous_primary};
            StepResult s = search_step(barrier, mesh, config.search, ctx, evaluator,
                                       config.opportunistic, config.workers);
            report.evaluations += s.evaluations;
            if (s.outcome == Outcome::dominating) {
                outcome = Outcome::dominating;
                polled = false;
            }
        }
        if (polled) {
            StepResult s = poll_step(barrier, mesh, evaluator, rng, config.opportunistic,
                                     config.workers);
            report.evaluations += s.evaluations;
            outcome = s.outcome;
        }

        HistoryRecord rec;
        rec.k = mesh.iteration;
        rec.frame_size = mesh.frame_size;
        rec.mesh_size = mesh.mesh_size;
        rec.eta = barrier.eta;
        if (barrier.feasible) rec.f_feasible = barrier.feasible->eval.cost;
        if (barrier.infeasible) {
            rec.f_infeasible = barrier.infeasible->eval.cost;
            rec.h_infeasible = barrier.infeasible->eval.violation;
        }
        rec.outcome = outcome;
        report.history.push_back(rec);

        if (outcome == Outcome::dominating) previous_primary = primary_before;

        mesh.frame_size = update_frame(mesh.frame_size, outcome, config.tau);
        mesh.iteration = ++report.iterations;
    }

    report.best_feasible = barrier.feasible;
    report.best_infeasible = barrier.infeasible;
    return report;
}

}  // namespace madsopt::mads
