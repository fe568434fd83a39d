#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "madsopt/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(MADSOPT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(bool(f));
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

}  // namespace

TEST_CASE("missing subcommand or config file exits nonzero") {
    CHECK(run_cli("") != 0);
    CHECK(run_cli("solve") != 0);
    CHECK(run_cli("solve no_such_file.toml") != 0);
    CHECK(run_cli("frobnicate x.toml") != 0);
}

TEST_CASE("a config error is reported as exit 1") {
    TempDir d("cli_badcfg");
    write_file(d.path / "bad.toml", "[solver]\ntau = 1.5\n");
    CHECK(run_cli("solve " + (d.path / "bad.toml").string()) == 1);
    write_file(d.path / "unk.toml", "[solver]\nfame = 1.0\n");
    CHECK(run_cli("solve " + (d.path / "unk.toml").string()) == 1);
}

TEST_CASE("solve on the quadratic problem produces the full report set") {
    TempDir d("cli_quad");
    write_file(d.path / "quad.toml",
               "[problem]\nkind = \"quadratic\"\ndimension = 2\n"
               "[solver]\nseed = 1\nmax_evaluations = 5000\n");
    std::string out = (d.path / "out").string();
    REQUIRE(run_cli("solve " + (d.path / "quad.toml").string() + " --out " + out) == 0);

    json rep = read_json(out + "/report.json");
    CHECK(rep["termination_reason"] == "frame_tolerance");
    CHECK(rep["best_feasible"]["F"].get<double>() <= 1e-8);
    CHECK(rep["best_feasible"]["H"].get<double>() == 0.0);
    CHECK(rep["evaluations"].get<long>() <= 5000);
    CHECK(rep["config"]["solver"]["seed"] == 1);

    std::string hist = slurp(out + "/history.csv");
    CHECK(hist.rfind("k,delta_frame,delta_mesh,eta,f_feas,f_infeas,h_infeas,outcome\n", 0) == 0);
    CHECK(hist.find("dominating") != std::string::npos);
}

TEST_CASE("command-line overrides land in the echoed config") {
    TempDir d("cli_override");
    write_file(d.path / "quad.toml", "[problem]\nkind = \"quadratic\"\n");
    std::string out = (d.path / "out").string();
    REQUIRE(run_cli("solve " + (d.path / "quad.toml").string() + " --out " + out +
                    " --seed 9 --serial --max-evals 777") == 0);
    json rep = read_json(out + "/report.json");
    CHECK(rep["config"]["solver"]["seed"] == 9);
    CHECK(rep["config"]["solver"]["workers"] == 1);
    CHECK(rep["config"]["solver"]["max_evaluations"] == 777);
    CHECK(rep["config"]["output"]["dir"] == out);
    CHECK(rep["evaluations"].get<long>() <= 777);
}

TEST_CASE("identical serial runs write byte-identical history files") {
    TempDir d("cli_det");
    write_file(d.path / "quad.toml",
               "[problem]\nkind = \"quadratic\"\ndimension = 3\n[solver]\nseed = 5\n");
    std::string cfg = (d.path / "quad.toml").string();
    std::string o1 = (d.path / "a").string(), o2 = (d.path / "b").string();
    REQUIRE(run_cli("solve " + cfg + " --serial --out " + o1) == 0);
    REQUIRE(run_cli("solve " + cfg + " --serial --out " + o2) == 0);
    CHECK(slurp(o1 + "/history.csv") == slurp(o2 + "/history.csv"));
    CHECK(read_json(o1 + "/report.json")["best_feasible"] ==
          read_json(o2 + "/report.json")["best_feasible"]);
}

TEST_CASE("simulate reports the blackbox value of a quadratic point") {
    TempDir d("cli_simq");
    write_file(d.path / "quad.toml", "[problem]\nkind = \"quadratic\"\ndimension = 2\n");
    std::string out = (d.path / "out").string();
    REQUIRE(run_cli("simulate " + (d.path / "quad.toml").string() +
                    " --point 1.0,1.0 --out " + out) == 0);
    json res = read_json(out + "/result.json");
    CHECK(res["F"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res["H"].get<double>() == 0.0);
}

TEST_CASE("simulate rejects a wrong-dimension point") {
    TempDir d("cli_simdim");
    write_file(d.path / "quad.toml", "[problem]\nkind = \"quadratic\"\ndimension = 2\n");
    CHECK(run_cli("simulate " + (d.path / "quad.toml").string() + " --point 1.0 --out " +
                  (d.path / "out").string()) == 1);
}

TEST_CASE("simulate on the rocket exports the tube trajectories") {
    TempDir d("cli_simr");
    write_file(d.path / "rocket.toml",
               "[problem]\nkind = \"rocket\"\n[integrator]\nabs_tol = 1e-8\nrel_tol = 1e-8\n");
    std::string out = (d.path / "out").string();
    REQUIRE(run_cli("simulate " + (d.path / "rocket.toml").string() +
                    " --point 1.0,0.16,0,0,0,0.0475,0.35,0.35,0.35 --out " + out) == 0);
    json res = read_json(out + "/result.json");
    CHECK(res["H"].get<double>() == 0.0);
    REQUIRE(res["v_b"].size() == 2);
    REQUIRE(res["v"].size() == 2);

    for (std::string leg : {"trajectory_lower.csv", "trajectory_upper.csv"}) {
        std::string csv = slurp(out + "/" + leg);
        CHECK(csv.rfind("t,x1,x2,x3,u1,l,v1\n", 0) == 0);
        CHECK(csv.find('\n') != csv.size() - 1);  // at least one data row
    }
}
