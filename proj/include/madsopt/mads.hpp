#ifndef MADSOPT_MADS_HPP
#define MADSOPT_MADS_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace madsopt::mads {

using Point = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One blackbox result: cost F, violation H and the internal outputs
// computed alongside them. H = 0 means feasible; +inf encodes an
// extremal-barrier rejection or a failed evaluation.
struct Evaluation {
    double cost = kInf;
    double violation = kInf;
    std::vector<double> internals;
    bool feasible() const { return violation == 0.0; }
};

enum class Outcome { dominating, improving, unsuccessful };
enum class BarrierMode { extremal, progressive };
enum class Termination { frame_tolerance, max_evaluations, max_iterations };

const char* to_string(Outcome o);
const char* to_string(Termination t);

struct MeshState {
    double frame_size = 1.0;  // frame size
    double mesh_size = 1.0;   // mesh size, min{frame, frame^2}
    double tau = 0.5;
    long iteration = 0;
};

// mesh size rule: min{frame, frame^2}
double mesh_size_from_frame(double frame_size);

// frame update: dominating -> frame/tau, improving -> frame, unsuccessful -> frame*tau
double update_frame(double frame_size, Outcome outcome, double tau);

// 2m integer directions {b_1..b_m, -b_1..-b_m} forming a positive
// spanning set, built from a pseudorandom integer seed direction via a
// Householder-style orthogonal basis. Directions richen as
// frame_size/mesh_size grows; the degenerate ratio 1 yields +-e_i.
std::vector<std::vector<long>> generate_poll_directions(int dimension, const MeshState& mesh,
                                                        std::mt19937_64& rng);

// Number of mesh points strictly inside or on the frame boundary,
// excluding the frame center, counted by lattice enumeration.
long frame_lattice_count(int dimension, double frame_size, double mesh_size);

bool dominates_feasible(const Evaluation& p, const Evaluation& y);
bool dominates_infeasible(const Evaluation& p, const Evaluation& y);

struct Incumbent {
    Point point;
    Evaluation eval;
};

struct BarrierState {
    std::optional<Incumbent> feasible;
    std::optional<Incumbent> infeasible;
    double eta = kInf;
    bool has_incumbent() const { return feasible.has_value() || infeasible.has_value(); }
};

using Evaluator = std::function<Evaluation(const Point&)>;
using Membership = std::function<bool(const Point&)>;

// Extremal barrier wrapper: membership failures get (+inf, +inf)
// without invoking the inner evaluator.
Evaluator extremal_wrap(Evaluator inner, Membership membership);

struct HistoryRecord {
    long k = 0;
    double frame_size = 0.0;
    double mesh_size = 0.0;
    double eta = kInf;                     // after the iteration's update
    std::optional<double> f_feasible;      // incumbent costs after the iteration
    std::optional<double> f_infeasible;
    std::optional<double> h_infeasible;
    Outcome outcome = Outcome::unsuccessful;
};

struct SolveReport {
    std::optional<Incumbent> best_feasible;
    std::optional<Incumbent> best_infeasible;
    long iterations = 0;
    long evaluations = 0;
    std::vector<HistoryRecord> history;
    Termination termination = Termination::max_iterations;
};

struct SearchContext {
    const BarrierState& barrier;
    const MeshState& mesh;
    // incumbent position before the last dominating move, if any
    std::optional<Point> previous_incumbent;
};

// Returns mesh points to evaluate; an empty list skips the search phase.
using SearchStrategy = std::function<std::vector<Point>(const SearchContext&)>;

// One speculative point at c + 2*(c - c_prev) after a dominating iteration.
SearchStrategy speculative_search();

struct SolveConfig {
    double initial_frame = 1.0;
    double tau = 0.5;
    double eps_stop = 1e-7;
    long max_evaluations = 100000;
    long max_iterations = 1000000;
    std::uint64_t seed = 0;
    bool opportunistic = true;
    int workers = 1;
    BarrierMode barrier_mode = BarrierMode::progressive;
    SearchStrategy search;  // empty -> no search phase
};

struct Problem {
    int dimension = 0;
    Evaluator evaluate;
    Membership membership;  // optional; enforced as an extremal barrier
};

struct StepResult {
    Outcome outcome = Outcome::unsuccessful;
    long evaluations = 0;
};

// One poll phase around the present incumbents (Algorithm 1 step 2).
StepResult poll_step(BarrierState& barrier, const MeshState& mesh, const Evaluator& evaluator,
                     std::mt19937_64& rng, bool opportunistic = false, int workers = 1);

// One search phase; points are snapped to the mesh before evaluation.
// outcome == dominating means the poll phase is skipped this iteration.
StepResult search_step(BarrierState& barrier, const MeshState& mesh,
                       const SearchStrategy& strategy, const SearchContext& context,
                       const Evaluator& evaluator, bool opportunistic = false, int workers = 1);

SolveReport solve(const Problem& problem, const SolveConfig& config,
                  const std::vector<Point>& initial_points);

}  // namespace madsopt::mads

#endif
