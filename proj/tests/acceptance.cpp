// End-to-end acceptance checks. Each criterion prints exactly one
// PASS/FAIL line; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "madsopt/config.hpp"
#include "madsopt/mads.hpp"
#include "madsopt/ocp.hpp"
#include "madsopt/ode.hpp"
#include "madsopt/rocket.hpp"

using namespace madsopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%-28s %s  (%s)\n", name.c_str(), ok ? "PASS" : "FAIL", detail.c_str());
    if (!ok) ++g_failures;
}

void run_criterion(const std::string& name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& ex) {
        report(name, false, std::string("exception: ") + ex.what());
    }
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---- shared toy problems ---------------------------------------------------

mads::Problem quadratic_problem(int dim) {
    mads::Problem p;
    p.dimension = dim;
    p.evaluate = [](const mads::Point& c) {
        double s = 0.0;
        for (double v : c) s += v * v;
        return mads::Evaluation{s, 0.0, {}};
    };
    return p;
}

mads::Problem l1_problem() {
    mads::Problem p;
    p.dimension = 2;
    p.evaluate = [](const mads::Point& c) {
        return mads::Evaluation{std::abs(c[0]) + std::abs(c[1]), 0.0, {}};
    };
    return p;
}

// min c1 + c2 subject to c1^2 + c2^2 <= 2, optimum (-1, -1)
mads::Problem disk_problem() {
    mads::Problem p;
    p.dimension = 2;
    p.evaluate = [](const mads::Point& c) {
        double g = c[0] * c[0] + c[1] * c[1] - 2.0;
        double hinge = std::max(0.0, g);
        return mads::Evaluation{c[0] + c[1], hinge * hinge, {hinge}};
    };
    return p;
}

mads::Membership disk_membership() {
    return [](const mads::Point& c) { return c[0] * c[0] + c[1] * c[1] <= 2.0; };
}

// fixed-horizon scalar plant used for the quadrature and composition checks
ocp::CandidateEvaluation run_scalar_lagrange(const ocp::StageFunction& lagrange, double tf,
                                             const ode::IntegrationConfig& cfg) {
    ocp::OcpProblem prob;
    prob.state_dim = 1;
    prob.input_dim = 1;
    prob.initial_state = {0.0};
    prob.dynamics = [](const ode::State&, const ode::State&, double) {
        return ode::State{0.0};
    };
    prob.lagrange = lagrange;
    prob.horizon = ocp::HorizonMode::fixed;
    prob.t0 = 0.0;
    prob.tf = tf;
    ocp::InputParameterization param;
    param.kind = ocp::InputParameterization::Kind::zero_order_hold;
    param.input_dim = 1;
    param.segments = 1;
    return ocp::evaluate_candidate(prob, param, {0.0}, cfg);
}

}  // namespace

// ---- criteria --------------------------------------------------------------

void c01_mesh_geometry() {
    auto t0 = std::chrono::steady_clock::now();
    long fine = mads::frame_lattice_count(2, 0.5, 0.25);
    long gps = mads::frame_lattice_count(2, 0.5, 0.5);
    double secs = elapsed_s(t0);
    report("01 mesh-lattice-geometry", fine == 24 && gps == 8 && secs < 1.0,
           fmt("count(1/2,1/4)=%ld count(1/2,1/2)=%ld in %.3fs", fine, gps, secs));
}

void c02_smooth_convergence() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    double worst = 0.0;
    long worst_evals = 0;
    for (int dim : {2, 5}) {
        mads::Problem prob = quadratic_problem(dim);
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            std::mt19937_64 rng(seed * 7919);
            std::uniform_real_distribution<double> u(-2.0, 2.0);
            mads::Point start(dim);
            for (double& v : start) v = u(rng);
            mads::SolveConfig cfg;
            cfg.seed = seed;
            cfg.max_evaluations = 5000;
            auto rep = mads::solve(prob, cfg, {start});
            double f = rep.best_feasible ? rep.best_feasible->eval.cost : mads::kInf;
            worst = std::max(worst, f);
            worst_evals = std::max(worst_evals, rep.evaluations);
            ok = ok && f <= 1e-8 && rep.evaluations <= 5000;
        }
    }
    double secs = elapsed_s(t0);
    ok = ok && secs < 10.0;
    report("02 smooth-convergence", ok,
           fmt("dims {2,5} x 10 seeds, worst f=%.2e, worst evals=%ld, %.2fs", worst,
               worst_evals, secs));
}

void c03_nonsmooth_convergence() {
    mads::Problem prob = l1_problem();
    int hits = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 rng(seed * 104729);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        mads::Point start = {u(rng), u(rng)};
        mads::SolveConfig cfg;
        cfg.seed = seed;
        cfg.max_evaluations = 5000;
        auto rep = mads::solve(prob, cfg, {start});
        double f = rep.best_feasible ? rep.best_feasible->eval.cost : mads::kInf;
        worst = std::max(worst, f);
        if (f <= 1e-4 && rep.evaluations <= 5000) ++hits;
    }
    report("03 nonsmooth-convergence", hits == 10, fmt("10 seeds, %d hits, worst f=%.2e", hits, worst));
}

static mads::SolveReport g_disk_progressive_report;  // reused by criterion 05

void c04_barrier_modes() {
    mads::Problem prob = disk_problem();
    mads::SolveConfig cfg;
    cfg.seed = 3;
    cfg.max_evaluations = 20000;

    cfg.barrier_mode = mads::BarrierMode::progressive;
    auto prog = mads::solve(prob, cfg, {{-3.0, -3.0}});
    g_disk_progressive_report = prog;
    bool prog_ok = prog.best_feasible && std::abs(prog.best_feasible->point[0] + 1.0) <= 1e-3 &&
                   std::abs(prog.best_feasible->point[1] + 1.0) <= 1e-3;

    mads::Problem extremal_prob = prob;
    extremal_prob.membership = disk_membership();
    cfg.barrier_mode = mads::BarrierMode::extremal;
    bool raised = false;
    try {
        mads::solve(extremal_prob, cfg, {{-3.0, -3.0}});
    } catch (const std::invalid_argument&) {
        raised = true;
    }
    auto extr = mads::solve(extremal_prob, cfg, {{0.0, 0.0}});
    bool extr_ok = extr.best_feasible && std::abs(extr.best_feasible->point[0] + 1.0) <= 1e-3 &&
                   std::abs(extr.best_feasible->point[1] + 1.0) <= 1e-3;

    report("04 barrier-modes", prog_ok && raised && extr_ok,
           fmt("progressive (%.5f,%.5f); infeasible-start error %s; extremal (%.5f,%.5f)",
               prog.best_feasible ? prog.best_feasible->point[0] : 1e9,
               prog.best_feasible ? prog.best_feasible->point[1] : 1e9,
               raised ? "raised" : "missing",
               extr.best_feasible ? extr.best_feasible->point[0] : 1e9,
               extr.best_feasible ? extr.best_feasible->point[1] : 1e9));
}

void c05_eta_schedule() {
    const auto& hist = g_disk_progressive_report.history;
    bool nonincreasing = !hist.empty();
    double prev = mads::kInf;
    for (const auto& r : hist) {
        if (r.eta > prev) nonincreasing = false;
        prev = r.eta;
    }
    bool terminal = !hist.empty() && hist.back().eta <= 1e-6;
    report("05 eta-schedule", nonincreasing && terminal,
           fmt("%zu records, nonincreasing=%s, final eta=%.2e", hist.size(),
               nonincreasing ? "yes" : "no", hist.empty() ? 1e9 : hist.back().eta));
}

void c06_integrator_order_and_quadrature() {
    ode::OdeSystem decay{1, [](double, const ode::State& y) { return ode::State{-y[0]}; }};
    auto err = [&](long n) {
        auto rec = ode::integrate_fixed(decay, {1.0}, 0.0, 1.0, n);
        return std::abs(rec.terminal_state[0] - 0.36787944117144233);
    };
    double ratio = err(16) / err(32);
    bool order_ok = ratio >= std::pow(2.0, 4.0) * 0.8;

    ode::IntegrationConfig cfg;
    cfg.abs_tol = 1e-9;
    cfg.rel_tol = 1e-9;
    struct Case {
        ocp::StageFunction integrand;
        double exact;
    };
    std::vector<Case> cases = {
        {[](const ode::State&, const ode::State&, double) { return 1.0; }, 2.0},
        {[](const ode::State&, const ode::State&, double t) { return t * t; }, 8.0 / 3.0},
        {[](const ode::State&, const ode::State&, double t) { return std::cos(t); },
         0.9092974268256817},
    };
    bool quad_ok = true;
    double worst = 0.0;
    for (const auto& c : cases) {
        auto eval = run_scalar_lagrange(c.integrand, 2.0, cfg);
        double e = std::abs(eval.cost - c.exact);
        double tol = 10.0 * (cfg.abs_tol + cfg.rel_tol * std::abs(c.exact));
        worst = std::max(worst, e / tol);
        quad_ok = quad_ok && !eval.failed && e <= tol;
    }
    report("06 integrator-order", order_ok && quad_ok,
           fmt("halving ratio %.1f (need >= %.1f), worst quadrature err %.2f of tolerance",
               ratio, std::pow(2.0, 4.0) * 0.8, worst));
}

void c07_violation_accumulator() {
    ocp::OcpProblem prob;
    prob.state_dim = 1;
    prob.input_dim = 1;
    prob.initial_state = {-0.5};
    prob.dynamics = [](const ode::State&, const ode::State&, double) {
        return ode::State{1.0};  // x(t) = t - 0.5
    };
    prob.path_constraints.push_back(
        [](const ode::State& x, const ode::State&, double) { return x[0]; });  // x <= 0
    prob.horizon = ocp::HorizonMode::fixed;
    prob.tf = 1.0;
    ocp::InputParameterization param;
    param.segments = 1;
    ode::IntegrationConfig cfg;
    cfg.abs_tol = 1e-10;
    cfg.rel_tol = 1e-10;
    auto eval = ocp::evaluate_candidate(prob, param, {0.0}, cfg);

    double v1 = eval.path_violations.empty() ? -1.0 : eval.path_violations[0];
    bool value_ok = !eval.failed && std::abs(v1 - 0.125) <= 1e-6;
    bool monotone = true;
    double prev = 0.0;
    for (const auto& z : eval.trajectory.states) {
        if (z[2] < prev - 1e-12) monotone = false;
        prev = z[2];
    }
    report("07 violation-accumulator", value_ok && monotone,
           fmt("v(1)=%.9f (want 0.125), nondecreasing=%s", v1, monotone ? "yes" : "no"));
}

void c08_shooting_composition() {
    // scalar plant x' = u with a velocity-style path bound and a terminal
    // equality, weighted so the recomposition is nontrivial
    ocp::OcpProblem prob;
    prob.state_dim = 1;
    prob.input_dim = 1;
    prob.initial_state = {0.0};
    prob.dynamics = [](const ode::State&, const ode::State& u, double) {
        return ode::State{u[0]};
    };
    prob.lagrange = [](const ode::State& x, const ode::State&, double) { return x[0]; };
    prob.mayer = [](const ode::State& xf, const ode::State&, double) { return 2.0 * xf[0]; };
    prob.path_constraints.push_back(
        [](const ode::State& x, const ode::State&, double) { return x[0] - 0.5; });
    prob.path_weights = {3.0};
    prob.boundary_conditions.push_back(
        [](const ode::State&, const ode::State&, double, const ode::State& xf,
           const ode::State&, double) { return xf[0] - 2.0; });
    prob.boundary_weights = {2.0};
    prob.horizon = ocp::HorizonMode::fixed;
    prob.tf = 1.0;

    ocp::InputParameterization param;
    param.segments = 1;
    ode::IntegrationConfig cfg;
    cfg.abs_tol = 1e-10;
    cfg.rel_tol = 1e-10;
    auto eval = ocp::evaluate_candidate(prob, param, {1.5}, cfg);

    const auto& zf = eval.trajectory.terminal_state;
    double phi = 2.0 * zf[0];
    double lagr = zf[1];
    double f_recomposed = phi + lagr;
    double h_recomposed = eval.boundary_violation * eval.boundary_violation +
                          3.0 * eval.path_violations[0] * eval.path_violations[0];
    double f_rel = std::abs(eval.cost - f_recomposed) / std::max(1.0, std::abs(eval.cost));
    double h_rel = std::abs(eval.violation - h_recomposed) / std::max(1.0, eval.violation);
    report("08 shooting-composition", !eval.failed && f_rel <= 1e-12 && h_rel <= 1e-12,
           fmt("F rel err %.2e, H rel err %.2e", f_rel, h_rel));
}

void c09_rocket_structure() {
    auto t0 = std::chrono::steady_clock::now();
    cli::RunConfig cfg = cli::load_run_config(cli::parse_config_file(MADSOPT_ROCKET_CONFIG));
    fs::path out = "acceptance_rocket_out";
    fs::remove_all(out);
    cfg.output_dir = out.string();
    cfg.echo["output"]["dir"] = cfg.output_dir;
    int rc = cli::run_solve(cfg);
    json rep = json::parse(slurp((out / "report.json").string()));

    bool solved = rc == 0 && rep.contains("best_feasible") &&
                  rep["evaluations"].get<long>() <= 20000;
    if (!solved) {
        report("09 rocket-structure", false,
               fmt("solve rc=%d evals=%ld", rc, rep.value("evaluations", -1L)));
        fs::remove_all(out);
        return;
    }
    std::vector<double> best = rep["best_feasible"]["point"].get<std::vector<double>>();

    rocket::RobustProblem rp =
        rocket::build_robust_problem(cfg.rocket_params, cfg.rocket_segments, cfg.integrator);
    mads::Evaluation be = rp.evaluate(best);
    auto tube = rocket::simulate_tube(rp.decode(best), cfg.rocket_params, cfg.integrator);

    // full thrust down to the mass floor, then coast, evenly padded switches
    double burn = (cfg.rocket_params.initial_mass - cfg.rocket_params.dry_mass_min) *
                  cfg.rocket_params.isp_lower / cfg.rocket_params.max_thrust;
    double s_burn = burn / cfg.rocket_params.time_scale;
    std::vector<double> baseline(rp.dimension, 0.0);
    baseline[0] = 1.0;
    for (int i = 0; i + 1 < cfg.rocket_segments; ++i)
        baseline[cfg.rocket_segments + i] = s_burn;
    mads::Evaluation base = rp.evaluate(baseline);

    bool vel_ok = be.internals[1] <= 1e-3 && be.internals[3] <= 1e-3;
    bool apogee_ok = std::abs(tube.lower.terminal_state[1]) <= 1e-6 &&
                     std::abs(tube.upper.terminal_state[1]) <= 1e-6;
    bool mass_ok = tube.lower.terminal_state[2] >= cfg.rocket_params.dry_mass_min - 1e-3 &&
                   tube.upper.terminal_state[2] >= cfg.rocket_params.dry_mass_min - 1e-3;
    bool beats_baseline = be.cost < base.cost;
    bool bang_first = best[0] >= 0.95;
    double secs = elapsed_s(t0);
    bool fast = secs < 300.0;

    report("09 rocket-structure",
           vel_ok && apogee_ok && mass_ok && beats_baseline && bang_first && fast,
           fmt("F=%.1f (baseline %.1f), vel viol (%.1e, %.1e), |v_f| (%.1e, %.1e), "
               "m_f (%.3f, %.3f), u1=%.3f, %.0fs",
               be.cost, base.cost, be.internals[1], be.internals[3],
               tube.lower.terminal_state[1], tube.upper.terminal_state[1],
               tube.lower.terminal_state[2], tube.upper.terminal_state[2], best[0], secs));
    fs::remove_all(out);
}

void c10_determinism() {
    fs::path dir = "acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "quad.toml");
        f << "[problem]\nkind = \"quadratic\"\ndimension = 3\n[solver]\nseed = 11\n";
    }
    auto run = [&](const std::string& out) {
        std::string cmd = std::string(MADSOPT_CLI_PATH) + " solve " +
                          (dir / "quad.toml").string() + " --serial --out " +
                          (dir / out).string() + " >/dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    bool ran = run("a") && run("b");
    bool identical =
        ran && slurp((dir / "a/history.csv").string()) == slurp((dir / "b/history.csv").string());

    // parallel evaluation with ordered reduction reproduces the serial runs
    mads::Problem prob = disk_problem();
    mads::SolveConfig cfg;
    cfg.seed = 11;
    cfg.opportunistic = false;
    cfg.workers = 1;
    auto serial = mads::solve(prob, cfg, {{-3.0, -3.0}});
    cfg.workers = 4;
    auto parallel = mads::solve(prob, cfg, {{-3.0, -3.0}});
    bool match = serial.history.size() == parallel.history.size() &&
                 serial.evaluations == parallel.evaluations;
    for (size_t i = 0; match && i < serial.history.size(); ++i) {
        const auto& a = serial.history[i];
        const auto& b = parallel.history[i];
        match = a.k == b.k && a.frame_size == b.frame_size && a.mesh_size == b.mesh_size &&
                a.eta == b.eta && a.outcome == b.outcome && a.f_feasible == b.f_feasible &&
                a.f_infeasible == b.f_infeasible && a.h_infeasible == b.h_infeasible;
    }
    match = match && serial.best_feasible && parallel.best_feasible &&
            serial.best_feasible->point == parallel.best_feasible->point;

    report("10 determinism", identical && match,
           fmt("serial reruns byte-identical=%s, parallel==serial over %zu iterations: %s",
               identical ? "yes" : "no", serial.history.size(), match ? "yes" : "no"));
    fs::remove_all(dir);
}

int main() {
    run_criterion("01 mesh-lattice-geometry", c01_mesh_geometry);
    run_criterion("02 smooth-convergence", c02_smooth_convergence);
    run_criterion("03 nonsmooth-convergence", c03_nonsmooth_convergence);
    run_criterion("04 barrier-modes", c04_barrier_modes);
    run_criterion("05 eta-schedule", c05_eta_schedule);
    run_criterion("06 integrator-order", c06_integrator_order_and_quadrature);
    run_criterion("07 violation-accumulator", c07_violation_accumulator);
    run_criterion("08 shooting-composition", c08_shooting_composition);
    run_criterion("09 rocket-structure", c09_rocket_structure);
    run_criterion("10 determinism", c10_determinism);
    return g_failures == 0 ? 0 : 1;
}
