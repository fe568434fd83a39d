#include "madsopt/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "madsopt/ocp.hpp"

namespace madsopt::cli {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

json parse_scalar(const std::string& tok, int line_no) {
    if (tok.empty()) throw std::runtime_error("config: empty value on line " + std::to_string(line_no));
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.front() == '"') {
        if (tok.size() < 2 || tok.back() != '"')
            throw std::runtime_error("config: unterminated string on line " + std::to_string(line_no));
        return tok.substr(1, tok.size() - 2);
    }
    try {
        size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        if (tok.find('.') == std::string::npos && tok.find('e') == std::string::npos &&
            tok.find('E') == std::string::npos && std::abs(v) < 9e15)
            return static_cast<long long>(v);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: cannot parse value '" + tok + "' on line " +
                                 std::to_string(line_no));
    }
}

json parse_value(const std::string& raw, int line_no) {
    std::string v = trim(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']')
            throw std::runtime_error("config: unterminated array on line " + std::to_string(line_no));
        json arr = json::array();
        std::string inner = v.substr(1, v.size() - 2);
        std::stringstream ss(inner);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) arr.push_back(parse_scalar(item, line_no));
        }
        return arr;
    }
    return parse_scalar(v, line_no);
}

// strip a trailing comment that is not inside a string
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

}  // namespace

json parse_toml(const std::string& text) {
    json root = json::object();
    json* section = &root;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config: bad section header on line " +
                                         std::to_string(line_no));
            std::string name = trim(line.substr(1, line.size() - 2));
            section = &root;
            std::stringstream ss(name);
            std::string part;
            while (std::getline(ss, part, '.')) section = &(*section)[trim(part)];
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected 'key = value' on line " +
                                     std::to_string(line_no));
        std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw std::runtime_error("config: empty key on line " + std::to_string(line_no));
        (*section)[key] = parse_value(line.substr(eq + 1), line_no);
    }
    return root;
}

json parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    std::string text = buf.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return parse_toml(text);
    }
}

namespace {

class SectionReader {
public:
    SectionReader(const json& tree, const std::string& name) : name_(name) {
        if (tree.contains(name)) {
            obj_ = tree.at(name);
            if (!obj_.is_object())
                throw std::runtime_error("config: [" + name + "] must be a table");
        }
    }

    double number(const std::string& key, double fallback) {
        return fetch(key, fallback, [](const json& v) { return v.get<double>(); });
    }
    long integer(const std::string& key, long fallback) {
        return fetch(key, fallback, [](const json& v) { return v.get<long>(); });
    }
    bool boolean(const std::string& key, bool fallback) {
        return fetch(key, fallback, [](const json& v) { return v.get<bool>(); });
    }
    std::string text(const std::string& key, const std::string& fallback) {
        return fetch(key, fallback, [](const json& v) { return v.get<std::string>(); });
    }
    std::vector<double> numbers(const std::string& key) {
        return fetch(key, std::vector<double>{},
                     [](const json& v) { return v.get<std::vector<double>>(); });
    }
    bool has(const std::string& key) const { return obj_.contains(key); }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key()))
                throw std::runtime_error("config: unknown key '" + name_ + "." + it.key() + "'");
    }

private:
    template <typename T, typename F>
    T fetch(const std::string& key, T fallback, F convert) {
        seen_.insert(key);
        if (!obj_.contains(key)) return fallback;
        try {
            return convert(obj_.at(key));
        } catch (const json::exception&) {
            throw std::runtime_error("config: bad value type for '" + name_ + "." + key + "'");
        }
    }

    std::string name_;
    json obj_ = json::object();
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw std::runtime_error("config: " + message);
}

}  // namespace

RunConfig load_run_config(const json& tree) {
    if (!tree.is_object()) throw std::runtime_error("config: top level must be a table");
    static const std::set<std::string> known_sections = {"problem", "solver", "integrator",
                                                         "rocket", "initial", "output"};
    for (auto it = tree.begin(); it != tree.end(); ++it)
        if (!known_sections.count(it.key()))
            throw std::runtime_error("config: unknown section '" + it.key() + "'");

    RunConfig cfg;

    SectionReader problem(tree, "problem");
    std::string kind = problem.text("kind", "quadratic");
    if (kind == "quadratic")
        cfg.kind = ProblemKind::quadratic;
    else if (kind == "absolute_sum")
        cfg.kind = ProblemKind::absolute_sum;
    else if (kind == "linear_disk")
        cfg.kind = ProblemKind::linear_disk;
    else if (kind == "rocket")
        cfg.kind = ProblemKind::rocket;
    else
        throw std::runtime_error("config: unknown problem.kind '" + kind + "'");
    cfg.dimension = static_cast<int>(problem.integer("dimension", 2));
    require(cfg.dimension >= 1, "problem.dimension must be >= 1");
    cfg.center = problem.numbers("center");
    problem.finish();

    SectionReader solver(tree, "solver");
    cfg.solver.initial_frame = solver.number("initial_frame", 1.0);
    require(cfg.solver.initial_frame > 0.0, "solver.initial_frame must be positive");
    cfg.solver.tau = solver.number("tau", 0.5);
    require(cfg.solver.tau > 0.0 && cfg.solver.tau < 1.0, "solver.tau must lie in (0,1)");
    cfg.solver.eps_stop = solver.number("eps_stop", 1e-7);
    require(cfg.solver.eps_stop >= 0.0, "solver.eps_stop must be >= 0");
    cfg.solver.max_evaluations = solver.integer("max_evaluations", 100000);
    require(cfg.solver.max_evaluations > 0, "solver.max_evaluations must be positive");
    cfg.solver.max_iterations = solver.integer("max_iterations", 1000000);
    cfg.solver.seed = static_cast<std::uint64_t>(solver.integer("seed", 0));
    cfg.solver.opportunistic = solver.boolean("opportunistic", true);
    cfg.solver.workers = static_cast<int>(solver.integer("workers", 1));
    require(cfg.solver.workers >= 1, "solver.workers must be >= 1");
    std::string barrier = solver.text("barrier_mode", "progressive");
    if (barrier == "progressive")
        cfg.solver.barrier_mode = mads::BarrierMode::progressive;
    else if (barrier == "extremal")
        cfg.solver.barrier_mode = mads::BarrierMode::extremal;
    else
        throw std::runtime_error("config: unknown solver.barrier_mode '" + barrier + "'");
    cfg.search_name = solver.text("search", "none");
    if (cfg.search_name == "speculative")
        cfg.solver.search = mads::speculative_search();
    else if (cfg.search_name != "none")
        throw std::runtime_error("config: unknown solver.search '" + cfg.search_name + "'");
    solver.finish();

    SectionReader integ(tree, "integrator");
    cfg.integrator.abs_tol = integ.number("abs_tol", 1e-9);
    cfg.integrator.rel_tol = integ.number("rel_tol", 1e-9);
    require(cfg.integrator.abs_tol > 0 && cfg.integrator.rel_tol > 0,
            "integrator tolerances must be positive");
    cfg.integrator.initial_step = integ.number("initial_step", 1e-3);
    cfg.integrator.max_step = integ.number("max_step", 1.0);
    cfg.integrator.min_step = integ.number("min_step", 1e-13);
    require(cfg.integrator.min_step <= cfg.integrator.initial_step &&
                cfg.integrator.initial_step <= cfg.integrator.max_step,
            "integrator steps must satisfy min_step <= initial_step <= max_step");
    cfg.integrator.max_steps = integ.integer("max_steps", 1000000);
    integ.finish();

    SectionReader rk(tree, "rocket");
    rocket::RocketParams& rp = cfg.rocket_params;
    rp.diameter = rk.number("diameter", rp.diameter);
    rp.cd_lower = rk.number("cd_lower", rp.cd_lower);
    rp.cd_upper = rk.number("cd_upper", rp.cd_upper);
    rp.isp_lower = rk.number("isp_lower", rp.isp_lower);
    rp.isp_upper = rk.number("isp_upper", rp.isp_upper);
    rp.max_thrust = rk.number("max_thrust", rp.max_thrust);
    rp.initial_mass = rk.number("initial_mass", rp.initial_mass);
    rp.dry_mass_min = rk.number("dry_mass_min", rp.dry_mass_min);
    rp.target_altitude = rk.number("target_altitude", rp.target_altitude);
    rp.velocity_limit = rk.number("velocity_limit", rp.velocity_limit);
    rp.time_scale = rk.number("time_scale", rp.time_scale);
    rp.t_max = rk.number("t_max", rp.t_max);
    cfg.rocket_segments = static_cast<int>(rk.integer("segments", 5));
    require(cfg.rocket_segments >= 1, "rocket.segments must be >= 1");
    require(rp.cd_lower <= rp.cd_upper, "rocket.cd_lower must not exceed cd_upper");
    require(rp.isp_lower <= rp.isp_upper, "rocket.isp_lower must not exceed isp_upper");
    require(rp.max_thrust > 0, "rocket.max_thrust must be positive");
    require(rp.initial_mass > rp.dry_mass_min && rp.dry_mass_min > 0,
            "rocket masses must satisfy initial_mass > dry_mass_min > 0");
    rk.finish();

    SectionReader initial(tree, "initial");
    std::vector<double> p1 = initial.numbers("point");
    std::vector<double> p2 = initial.numbers("point2");
    if (!p1.empty()) cfg.initial_points.push_back(p1);
    if (!p2.empty()) cfg.initial_points.push_back(p2);
    initial.finish();

    SectionReader output(tree, "output");
    cfg.output_dir = output.text("dir", "out");
    output.finish();

    // resolved echo
    json echo;
    echo["problem"] = {{"kind", kind}, {"dimension", cfg.dimension}, {"center", cfg.center}};
    echo["solver"] = {{"initial_frame", cfg.solver.initial_frame},
                      {"tau", cfg.solver.tau},
                      {"eps_stop", cfg.solver.eps_stop},
                      {"max_evaluations", cfg.solver.max_evaluations},
                      {"max_iterations", cfg.solver.max_iterations},
                      {"seed", cfg.solver.seed},
                      {"opportunistic", cfg.solver.opportunistic},
                      {"workers", cfg.solver.workers},
                      {"barrier_mode", barrier},
                      {"search", cfg.search_name}};
    echo["integrator"] = {{"abs_tol", cfg.integrator.abs_tol},
                          {"rel_tol", cfg.integrator.rel_tol},
                          {"initial_step", cfg.integrator.initial_step},
                          {"max_step", cfg.integrator.max_step},
                          {"min_step", cfg.integrator.min_step},
                          {"max_steps", cfg.integrator.max_steps}};
    echo["rocket"] = {{"diameter", rp.diameter},
                      {"cd_lower", rp.cd_lower},
                      {"cd_upper", rp.cd_upper},
                      {"isp_lower", rp.isp_lower},
                      {"isp_upper", rp.isp_upper},
                      {"max_thrust", rp.max_thrust},
                      {"initial_mass", rp.initial_mass},
                      {"dry_mass_min", rp.dry_mass_min},
                      {"target_altitude", rp.target_altitude},
                      {"velocity_limit", rp.velocity_limit},
                      {"time_scale", rp.time_scale},
                      {"t_max", rp.t_max},
                      {"segments", cfg.rocket_segments}};
    echo["initial"] = json::object();
    if (!p1.empty()) echo["initial"]["point"] = p1;
    if (!p2.empty()) echo["initial"]["point2"] = p2;
    echo["output"] = {{"dir", cfg.output_dir}};
    cfg.echo = echo;
    return cfg;
}

namespace {

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct BuiltProblem {
    mads::Problem problem;
    std::vector<mads::Point> initial_points;
};

BuiltProblem build_problem(const RunConfig& cfg) {
    BuiltProblem bp;
    switch (cfg.kind) {
        case ProblemKind::quadratic: {
            std::vector<double> center = cfg.center;
            center.resize(cfg.dimension, 0.0);
            bp.problem.dimension = cfg.dimension;
            bp.problem.evaluate = [center](const mads::Point& c) {
                mads::Evaluation e;
                e.violation = 0.0;
                double s = 0.0;
                for (size_t i = 0; i < c.size(); ++i)
                    s += (c[i] - center[i]) * (c[i] - center[i]);
                e.cost = s;
                return e;
            };
            bp.initial_points.push_back(std::vector<double>(cfg.dimension, 1.0));
            break;
        }
        case ProblemKind::absolute_sum: {
            bp.problem.dimension = cfg.dimension;
            bp.problem.evaluate = [](const mads::Point& c) {
                mads::Evaluation e;
                e.violation = 0.0;
                double s = 0.0;
                for (double v : c) s += std::abs(v);
                e.cost = s;
                return e;
            };
            bp.initial_points.push_back(std::vector<double>(cfg.dimension, 0.7));
            break;
        }
        case ProblemKind::linear_disk: {
            // min c1 + c2 subject to c1^2 + c2^2 <= 2
            bp.problem.dimension = 2;
            bp.problem.evaluate = [](const mads::Point& c) {
                mads::Evaluation e;
                e.cost = c[0] + c[1];
                double g = c[0] * c[0] + c[1] * c[1] - 2.0;
                double hinge = std::max(0.0, g);
                e.violation = hinge * hinge;
                e.internals = {hinge};
                return e;
            };
            bp.initial_points.push_back({-3.0, -3.0});
            break;
        }
        case ProblemKind::rocket: {
            rocket::RobustProblem rp = rocket::build_robust_problem(
                cfg.rocket_params, cfg.rocket_segments, cfg.integrator);
            bp.problem.dimension = rp.dimension;
            bp.problem.evaluate = rp.evaluate;
            bp.problem.membership = rp.membership;
            std::vector<double> start(rp.dimension, 0.0);
            // brief full-thrust boost, throttled cruise, then coast
            start[0] = 1.0;
            if (cfg.rocket_segments > 1) start[1] = 0.17;
            start[cfg.rocket_segments] = 0.05;
            for (int i = 1; i + 1 < cfg.rocket_segments; ++i)
                start[cfg.rocket_segments + i] =
                    0.05 + 0.3 * static_cast<double>(i);
            bp.initial_points.push_back(start);
            break;
        }
    }
    if (!cfg.initial_points.empty()) bp.initial_points = cfg.initial_points;
    for (const auto& p : bp.initial_points)
        if (static_cast<int>(p.size()) != bp.problem.dimension)
            throw std::runtime_error("config: initial point dimension mismatch");
    return bp;
}

json incumbent_json(const mads::Incumbent& inc) {
    json j;
    j["point"] = inc.point;
    j["F"] = inc.eval.cost;
    j["H"] = inc.eval.violation;
    return j;
}

void write_history_csv(const std::string& path, const mads::SolveReport& report) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "k,delta_frame,delta_mesh,eta,f_feas,f_infeas,h_infeas,outcome\n";
    for (const auto& r : report.history) {
        f << r.k << ',' << fmt(r.frame_size) << ',' << fmt(r.mesh_size) << ',' << fmt(r.eta)
          << ',' << (r.f_feasible ? fmt(*r.f_feasible) : "") << ','
          << (r.f_infeasible ? fmt(*r.f_infeasible) : "") << ','
          << (r.h_infeasible ? fmt(*r.h_infeasible) : "") << ',' << mads::to_string(r.outcome)
          << '\n';
    }
}

void write_trajectory_csv(const std::string& path, const ocp::CandidateEvaluation& eval,
                          int state_dim, int input_dim) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    const int total = static_cast<int>(eval.trajectory.states.empty()
                                           ? 0
                                           : eval.trajectory.states.front().size());
    const int ng = total - state_dim - 1;
    f << "t";
    for (int i = 1; i <= state_dim; ++i) f << ",x" << i;
    for (int i = 1; i <= input_dim; ++i) f << ",u" << i;
    f << ",l";
    for (int i = 1; i <= ng; ++i) f << ",v" << i;
    f << '\n';
    for (size_t row = 0; row < eval.trajectory.times.size(); ++row) {
        double t = eval.trajectory.times[row];
        const auto& z = eval.trajectory.states[row];
        ode::State x(z.begin(), z.begin() + state_dim);
        ode::State u = eval.control.input(t, x);
        f << fmt(t);
        for (int i = 0; i < state_dim; ++i) f << ',' << fmt(z[i]);
        for (int i = 0; i < input_dim; ++i) f << ',' << fmt(u[i]);
        f << ',' << fmt(z[state_dim]);
        for (int i = 0; i < ng; ++i) f << ',' << fmt(z[state_dim + 1 + i]);
        f << '\n';
    }
}

void export_rocket_trajectories(const RunConfig& cfg, const mads::Point& point,
                                const std::string& prefix) {
    rocket::RobustProblem rp =
        rocket::build_robust_problem(cfg.rocket_params, cfg.rocket_segments, cfg.integrator);
    std::vector<double> phys;
    const int n = cfg.rocket_segments;
    for (int i = 0; i < n; ++i) phys.push_back(point[i] * cfg.rocket_params.max_thrust);
    for (int i = 0; i + 1 < n; ++i)
        phys.push_back(point[n + i] * cfg.rocket_params.time_scale);

    ocp::CandidateEvaluation lower =
        ocp::evaluate_candidate(rp.leg_lower, rp.leg_param, phys, cfg.integrator);
    ocp::CandidateEvaluation upper =
        ocp::evaluate_candidate(rp.leg_upper, rp.leg_param, phys, cfg.integrator);
    if (!lower.failed)
        write_trajectory_csv(cfg.output_dir + "/" + prefix + "_lower.csv", lower, 3, 1);
    if (!upper.failed)
        write_trajectory_csv(cfg.output_dir + "/" + prefix + "_upper.csv", upper, 3, 1);
}

}  // namespace

int run_solve(const RunConfig& cfg) {
    BuiltProblem bp = build_problem(cfg);
    std::filesystem::create_directories(cfg.output_dir);

    mads::SolveReport report = mads::solve(bp.problem, cfg.solver, bp.initial_points);

    json rep;
    rep["termination_reason"] = mads::to_string(report.termination);
    rep["iterations"] = report.iterations;
    rep["evaluations"] = report.evaluations;
    if (report.best_feasible) rep["best_feasible"] = incumbent_json(*report.best_feasible);
    if (report.best_infeasible) rep["best_infeasible"] = incumbent_json(*report.best_infeasible);
    rep["config"] = cfg.echo;
    {
        std::ofstream f(cfg.output_dir + "/report.json");
        f << rep.dump(2) << '\n';
    }

    write_history_csv(cfg.output_dir + "/history.csv", report);

    if (cfg.kind == ProblemKind::rocket) {
        const mads::Incumbent* best = report.best_feasible ? &*report.best_feasible
                                                          : (report.best_infeasible
                                                                 ? &*report.best_infeasible
                                                                 : nullptr);
        if (best) export_rocket_trajectories(cfg, best->point, "best_trajectory");
    }

    return report.termination == mads::Termination::frame_tolerance ? 0 : 2;
}

int run_simulate(const RunConfig& cfg, const std::vector<double>& point) {
    BuiltProblem bp = build_problem(cfg);
    if (static_cast<int>(point.size()) != bp.problem.dimension)
        throw std::runtime_error("simulate: point dimension mismatch (expected " +
                                 std::to_string(bp.problem.dimension) + ")");
    if (bp.problem.membership && !bp.problem.membership(point))
        throw std::runtime_error("simulate: point rejected by the extremal barrier "
                                 "(bounds or switching-time ordering violated)");

    std::filesystem::create_directories(cfg.output_dir);
    mads::Evaluation e = bp.problem.evaluate(point);

    json out;
    out["F"] = e.cost;
    out["H"] = e.violation;
    if (cfg.kind == ProblemKind::rocket && e.internals.size() == 4) {
        out["v_b"] = {e.internals[0], e.internals[2]};
        out["v"] = {e.internals[1], e.internals[3]};
        export_rocket_trajectories(cfg, point, "trajectory");
    } else if (!e.internals.empty()) {
        out["w"] = e.internals;
    }
    std::ofstream f(cfg.output_dir + "/result.json");
    f << out.dump() << '\n';
    return 0;
}

}  // namespace madsopt::cli
