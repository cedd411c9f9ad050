#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using json = nlohmann::json;

namespace {

std::string bin() {
    const char* b = std::getenv("LATTICE_SLE_BIN");
    REQUIRE(b != nullptr);
    return b;
}

int run(const std::string& args, std::string* out = nullptr) {
    std::string cmd = bin() + " " + args + " > /tmp/lsle_cli_out.txt 2>/tmp/lsle_cli_err.txt";
    int rc = std::system(cmd.c_str());
    if (out) {
        std::ifstream in("/tmp/lsle_cli_out.txt");
        std::stringstream ss;
        ss << in.rdbuf();
        *out = ss.str();
    }
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("constants --q 2 prints the Ising cluster values") {
    std::string out;
    CHECK(run("constants --q 2", &out) == 0);
    auto j = json::parse(out);
    CHECK(std::abs(j["p_sd"].get<double>() - (2.0 - std::sqrt(2.0))) < 1e-12);
    CHECK(std::abs(j["kappa"].get<double>() - 16.0 / 3.0) < 1e-12);
    CHECK(std::abs(j["k"].get<double>() - 0.125) < 1e-12);
}

TEST_CASE("missing required parameter exits with the usage code") {
    CHECK(run("constants") == 2);
    CHECK(run("estimate-kappa --model nosuch --width 12 --height 12 --curves 2") == 2);
}

TEST_CASE("out-of-range q is a usage error naming the range") {
    std::string out;
    CHECK(run("constants --q 5", &out) == 2);
    std::ifstream err("/tmp/lsle_cli_err.txt");
    std::stringstream ss;
    ss << err.rdbuf();
    CHECK(ss.str().find("q") != std::string::npos);
}

TEST_CASE("same seed gives byte-identical outputs, different seed differs") {
    CHECK(run("trace --model percolation --width 16 --height 16 --seed 5 --out /tmp/lsle_a") == 0);
    CHECK(run("trace --model percolation --width 16 --height 16 --seed 5 --out /tmp/lsle_b") == 0);
    CHECK(run("trace --model percolation --width 16 --height 16 --seed 6 --out /tmp/lsle_c") == 0);
    CHECK(slurp("/tmp/lsle_a_curve.csv") == slurp("/tmp/lsle_b_curve.csv"));
    CHECK(slurp("/tmp/lsle_a_curve.csv") != slurp("/tmp/lsle_c_curve.csv"));

    auto man = json::parse(slurp("/tmp/lsle_a_manifest.json"));
    auto man2 = json::parse(slurp("/tmp/lsle_b_manifest.json"));
    CHECK(man["outputs"][0]["fnv1a"] == man2["outputs"][0]["fnv1a"]);
    CHECK(man["rng"] == "splitmix64-counter");
}

TEST_CASE("thread count does not change sample-level results") {
    CHECK(run("simulate --model percolation --width 16 --height 16 --samples 8 --seed 3 "
              "--threads 1 --out /tmp/lsle_t1") == 0);
    CHECK(run("simulate --model percolation --width 16 --height 16 --samples 8 --seed 3 "
              "--threads 2 --out /tmp/lsle_t2") == 0);
    CHECK(slurp("/tmp/lsle_t1_summary.csv") == slurp("/tmp/lsle_t2_summary.csv"));
}

TEST_CASE("config file values are parsed and flags override them") {
    std::ofstream cfg("/tmp/lsle_cfg.ini");
    cfg << "width=16\nheight=16\nseed=5\nmodel=percolation\nout=/tmp/lsle_cfgrun\n";
    cfg.close();
    CHECK(run("trace --config /tmp/lsle_cfg.ini") == 0);
    CHECK(slurp("/tmp/lsle_cfgrun_curve.csv") == slurp("/tmp/lsle_a_curve.csv"));
    // flag overrides the file seed
    CHECK(run("trace --config /tmp/lsle_cfg.ini --seed 6 --out /tmp/lsle_cfgrun2") == 0);
    CHECK(slurp("/tmp/lsle_cfgrun2_curve.csv") == slurp("/tmp/lsle_c_curve.csv"));
    // unknown keys are rejected
    std::ofstream bad("/tmp/lsle_bad.ini");
    bad << "width=16\nnot_a_key=1\n";
    bad.close();
    CHECK(run("trace --config /tmp/lsle_bad.ini") != 0);
}

TEST_CASE("sle and extract round through files") {
    CHECK(run("sle --kappa 2 --capacity 0.2 --steps 200 --seed 9 --out /tmp/lsle_sle") == 0);
    auto trace = slurp("/tmp/lsle_sle_trace.csv");
    CHECK(trace.substr(0, 6) == "t,x,y\n");
    CHECK(run("trace --model percolation --width 24 --height 24 --seed 2 --out /tmp/lsle_pc") == 0);
    CHECK(run("extract --in /tmp/lsle_pc_curve.csv --width 24 --height 24 --horizon 0.02 "
              "--out /tmp/lsle_pc") == 0);
    auto drv = slurp("/tmp/lsle_pc_driving.csv");
    CHECK(drv.substr(0, 4) == "t,w\n");
}

TEST_CASE("observable and height commands expose the exact checks") {
    std::string out;
    CHECK(run("observable --cells-x 2 --cells-y 2 --q 2 --mode exact --out /tmp/lsle_obs",
              &out) == 0);
    auto j = json::parse(out);
    CHECK(j["projection_residual"].get<double>() < 1e-10);
    CHECK(j["cauchy_riemann_residual"].get<double>() < 1e-10);

    CHECK(run("height --cells-x 2 --cells-y 2 --q 2 --out /tmp/lsle_h", &out) == 0);
    auto jh = json::parse(out);
    CHECK(jh["cycle_discrepancy"].get<double>() < 1e-10);
    CHECK(jh["boundary_value_error"].get<double>() < 1e-10);
}
