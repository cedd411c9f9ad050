// lattice-sle: reproducible experiment runner over the library pipelines.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <complex>
#include <cstdlib>
#include <iostream>

#include "lattice_sle/analysis.hpp"
#include "lattice_sle/geometry.hpp"
#include "lattice_sle/interfaces.hpp"
#include "lattice_sle/io.hpp"
#include "lattice_sle/loewner.hpp"
#include "lattice_sle/models.hpp"
#include "lattice_sle/observables.hpp"
#include "lattice_sle/parallel.hpp"

using json = nlohmann::json;
using namespace lsle;
using namespace lsle::geometry;
namespace lw = lsle::loewner;
using cplx = std::complex<double>;

namespace {

constexpr const char* kVersion = "lattice-sle 1.0.0";

struct CommonOpts {
    std::uint64_t seed = 1;
    std::string out = "run";
    std::string lattice = "triangular-site";
    double width = 32, height = 32, eps = 1.0;
    std::string corner_a = "nw", corner_b = "se";
    int threads = 0;
};

struct Manifest {
    json config;
    std::string command;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;

    void write(const std::string& prefix) const {
        json j;
        j["command"] = command;
        j["config"] = config;
        j["tool_version"] = kVersion;
        j["rng"] = CounterRng::algorithm_name();
        j["seed"] = seed;
        auto now = std::chrono::system_clock::now().time_since_epoch();
        j["timestamp_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
        json outs = json::array();
        for (const auto& path : outputs)
            outs.push_back({{"path", path}, {"fnv1a", io::file_digest(path)}});
        j["outputs"] = outs;
        io::write_file(prefix + "_manifest.json", j.dump(2) + "\n");
    }
};

DiscreteDomain make_domain(const CommonOpts& o) {
    LatticeSpec spec;
    spec.kind = lattice_kind_from_string(o.lattice);
    spec.mesh = o.eps;
    double w = o.width, h = o.height;
    if (spec.kind == LatticeKind::Hexagonal) {
        // hexagonal widths are given in cells; a cell column spans sqrt(3) eps
        w *= std::sqrt(3.0) * o.eps;
        h *= std::sqrt(3.0) * o.eps;
    }
    return build_rectangle_domain(spec, w, h, corner_from_string(o.corner_a),
                                  corner_from_string(o.corner_b));
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--out", o.out, "output file prefix");
    cmd->add_option("--lattice", o.lattice,
                    "triangular-site | square-bond | hexagonal | square-medial");
    cmd->add_option("--width", o.width, "domain width (hexagonal: cells)");
    cmd->add_option("--height", o.height, "domain height (hexagonal: cells)");
    cmd->add_option("--eps", o.eps, "lattice mesh");
    cmd->add_option("--corner-a", o.corner_a, "marked corner a (sw|se|ne|nw)");
    cmd->add_option("--corner-b", o.corner_b, "marked corner b");
    cmd->add_option("--threads", o.threads, "worker threads (0 = library default)");
}

InterfaceCurve sample_curve(const std::string& model, const DiscreteDomain& d, double p, double q,
                            double beta, double n, double x, int sweeps, CounterRng& rng) {
    if (model == "percolation")
        return interfaces::trace_interface(models::sample_percolation(d, p, rng));
    if (model == "ising")
        return interfaces::trace_interface(models::sample_ising_spin(d, beta, sweeps, rng));
    if (model == "fk") {
        if (q == 2.0)
            return interfaces::trace_interface(
                models::sample_fk_edwards_sokal(d, models::p_sd(q), sweeps, rng));
        return interfaces::trace_interface(models::sample_fk(d, q, models::p_sd(q), sweeps, rng));
    }
    if (model == "loop")
        return interfaces::trace_interface(models::sample_loop_on(d, n, x, sweeps, rng));
    if (model == "harmonic-explorer") return models::sample_harmonic_explorer(d, rng);
    throw parameter_error("unknown model: " + model);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D critical lattice models and Schramm-Loewner evolution toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value configuration file");
    app.allow_config_extras(false);

    // ------------------------------------------------------------------ constants
    auto* c_const = app.add_subcommand("constants", "critical constants as JSON");
    double cq = -1, cn = -1, ckappa = -1;
    std::string const_out;
    c_const->add_option("--q", cq, "cluster weight");
    c_const->add_option("--n", cn, "loop weight");
    c_const->add_option("--kappa", ckappa, "SLE parameter");
    c_const->add_option("--out", const_out, "also write the JSON here");

    // ------------------------------------------------------------------ simulate
    auto* c_sim = app.add_subcommand("simulate", "sample configurations, write summary CSV");
    CommonOpts sim;
    std::string sim_model = "percolation";
    double sim_p = 0.5, sim_q = 2.0, sim_beta = 0.44, sim_n = 1.0, sim_x = 1.0;
    int sim_sweeps = -1;
    std::int64_t sim_samples = 10;
    add_common(c_sim, sim);
    c_sim->add_option("--model", sim_model, "percolation|ising|fk|loop");
    c_sim->add_option("--p", sim_p);
    c_sim->add_option("--q", sim_q);
    c_sim->add_option("--beta", sim_beta);
    c_sim->add_option("--n", sim_n);
    c_sim->add_option("--x", sim_x);
    c_sim->add_option("--sweeps", sim_sweeps, "-1 = burn-in default");
    c_sim->add_option("--samples", sim_samples);

    // ------------------------------------------------------------------ trace
    auto* c_trace = app.add_subcommand("trace", "sample one interface, write curve CSV");
    CommonOpts tr;
    std::string tr_model = "percolation";
    double tr_p = 0.5, tr_q = 2.0, tr_beta = 0.44, tr_n = 1.0, tr_x = 1.0;
    int tr_sweeps = -1;
    bool tr_svg = false;
    add_common(c_trace, tr);
    c_trace->add_option("--model", tr_model, "percolation|ising|fk|loop|harmonic-explorer");
    c_trace->add_option("--p", tr_p);
    c_trace->add_option("--q", tr_q);
    c_trace->add_option("--beta", tr_beta);
    c_trace->add_option("--n", tr_n);
    c_trace->add_option("--x", tr_x);
    c_trace->add_option("--sweeps", tr_sweeps);
    c_trace->add_flag("--svg", tr_svg, "also export an SVG polyline");

    // ------------------------------------------------------------------ extract
    auto* c_ext = app.add_subcommand("extract", "driving function of an interface");
    CommonOpts ex;
    std::string ex_model = "percolation", ex_in;
    double ex_p = 0.5, ex_q = 2.0, ex_beta = 0.44, ex_n = 1.0, ex_x = 1.0, ex_horizon = 0.05;
    int ex_sweeps = -1;
    add_common(c_ext, ex);
    c_ext->add_option("--model", ex_model);
    c_ext->add_option("--in", ex_in, "curve CSV to extract instead of sampling");
    c_ext->add_option("--p", ex_p);
    c_ext->add_option("--q", ex_q);
    c_ext->add_option("--beta", ex_beta);
    c_ext->add_option("--n", ex_n);
    c_ext->add_option("--x", ex_x);
    c_ext->add_option("--sweeps", ex_sweeps);
    c_ext->add_option("--horizon", ex_horizon, "capacity horizon");

    // ------------------------------------------------------------------ estimate-kappa
    auto* c_kap = app.add_subcommand("estimate-kappa", "kappa from interface drivings");
    CommonOpts ka;
    std::string ka_model = "percolation";
    double ka_p = 0.5, ka_q = 2.0, ka_beta = 0.44, ka_n = 1.0, ka_x = 1.0;
    double ka_horizon = 0.03, ka_grid_step = 0.004, ka_kappa = 6.0, ka_capacity = 0.06;
    int ka_sweeps = -1, ka_curves = 100, ka_steps = 1500;
    add_common(c_kap, ka);
    c_kap->add_option("--model", ka_model, "percolation|fk|harmonic-explorer|ising|sle");
    c_kap->add_option("--p", ka_p);
    c_kap->add_option("--q", ka_q);
    c_kap->add_option("--beta", ka_beta);
    c_kap->add_option("--n", ka_n);
    c_kap->add_option("--x", ka_x);
    c_kap->add_option("--sweeps", ka_sweeps);
    c_kap->add_option("--curves", ka_curves);
    c_kap->add_option("--horizon", ka_horizon);
    c_kap->add_option("--grid-step", ka_grid_step);
    c_kap->add_option("--kappa", ka_kappa, "kappa for --model sle");
    c_kap->add_option("--capacity", ka_capacity, "trace capacity for --model sle");
    c_kap->add_option("--steps", ka_steps, "trace steps for --model sle");

    // ------------------------------------------------------------------ crossing
    auto* c_cross = app.add_subcommand("crossing", "Cardy crossing probability");
    CommonOpts cr;
    cr.width = 64;
    cr.height = 64;
    double cr_p = 0.5;
    std::int64_t cr_samples = 10000;
    add_common(c_cross, cr);
    c_cross->add_option("--p", cr_p);
    c_cross->add_option("--samples", cr_samples);

    // ------------------------------------------------------------------ observable
    auto* c_obs = app.add_subcommand("observable", "FK fermionic observable on the medial lattice");
    CommonOpts ob;
    int ob_cx = 2, ob_cy = 2;
    double ob_q = 2.0;
    std::string ob_mode = "exact";
    std::int64_t ob_samples = 20000;
    c_obs->add_option("--seed", ob.seed);
    c_obs->add_option("--out", ob.out);
    c_obs->add_option("--cells-x", ob_cx, "primal cells across");
    c_obs->add_option("--cells-y", ob_cy);
    c_obs->add_option("--eps", ob.eps);
    c_obs->add_option("--corner-a", ob.corner_a);
    c_obs->add_option("--corner-b", ob.corner_b);
    c_obs->add_option("--q", ob_q);
    c_obs->add_option("--mode", ob_mode, "exact | mc");
    c_obs->add_option("--samples", ob_samples);
    c_obs->add_option("--threads", ob.threads);

    // ------------------------------------------------------------------ height
    auto* c_h = app.add_subcommand("height", "height function of the exact observable");
    CommonOpts hh;
    int h_cx = 2, h_cy = 2;
    double h_q = 2.0;
    c_h->add_option("--seed", hh.seed);
    c_h->add_option("--out", hh.out);
    c_h->add_option("--cells-x", h_cx);
    c_h->add_option("--cells-y", h_cy);
    c_h->add_option("--eps", hh.eps);
    c_h->add_option("--corner-a", hh.corner_a);
    c_h->add_option("--corner-b", hh.corner_b);
    c_h->add_option("--q", h_q);

    // ------------------------------------------------------------------ sle
    auto* c_sle = app.add_subcommand("sle", "sample an SLE trace");
    std::uint64_t sle_seed = 1;
    std::string sle_out = "run";
    double sle_kappa = 6.0, sle_T = 1.0;
    int sle_steps = 2000;
    c_sle->add_option("--seed", sle_seed);
    c_sle->add_option("--out", sle_out);
    c_sle->add_option("--kappa", sle_kappa);
    c_sle->add_option("--capacity", sle_T);
    c_sle->add_option("--steps", sle_steps);

    // ------------------------------------------------------------------ dimension
    auto* c_dim = app.add_subcommand("dimension", "box-counting dimension");
    CommonOpts dm;
    dm.width = 128;
    dm.height = 128;
    std::string dim_target = "sle";
    double dim_kappa = 6.0, dim_capacity = 0.4;
    int dim_steps = 30000;
    add_common(c_dim, dm);
    c_dim->add_option("--target", dim_target, "sle | percolation | line");
    c_dim->add_option("--kappa", dim_kappa);
    c_dim->add_option("--capacity", dim_capacity);
    c_dim->add_option("--steps", dim_steps);

    // ------------------------------------------------------------------ martingale
    auto* c_mart = app.add_subcommand("martingale", "SLE martingale observable test");
    std::uint64_t m_seed = 1;
    std::string m_out = "run", m_family = "phi";
    double m_kappa = 4.0, m_zre = 0.25, m_zim = 0.9;
    int m_traces = 4000;
    std::string m_cps = "0.02,0.05,0.1,0.15";
    c_mart->add_option("--seed", m_seed);
    c_mart->add_option("--out", m_out);
    c_mart->add_option("--family", m_family, "phi | psi");
    c_mart->add_option("--kappa", m_kappa);
    c_mart->add_option("--z-re", m_zre);
    c_mart->add_option("--z-im", m_zim);
    c_mart->add_option("--traces", m_traces);
    c_mart->add_option("--checkpoints", m_cps, "comma separated capacity times");

    // ------------------------------------------------------------------ markov
    auto* c_mark = app.add_subcommand("markov", "Markov property two-sample test");
    CommonOpts mk;
    mk.width = 20;
    mk.height = 20;
    int mk_prefix = 5;
    std::int64_t mk_n = 10000;
    bool mk_mismatch = false;
    double mk_p = 0.5;
    add_common(c_mark, mk);
    c_mark->add_option("--p", mk_p);
    c_mark->add_option("--prefix", mk_prefix);
    c_mark->add_option("--n", mk_n);
    c_mark->add_flag("--mismatch", mk_mismatch, "run the constructed violation");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*c_const) {
            json j;
            if (cq >= 0) {
                j["q"] = cq;
                j["p_sd"] = models::p_sd(cq);
                j["kappa"] = models::kappa_fk(cq);
                j["k"] = models::coulomb_k(cq);
                j["beffara_dim"] = models::beffara_dim(models::kappa_fk(cq));
            }
            if (cn >= 0) {
                j["n"] = cn;
                j["x_c"] = models::x_c(cn);
                j["x_tilde_c"] = models::x_tilde_c(cn);
                j["kappa_dilute"] = models::kappa_dilute(cn);
                j["kappa_dense"] = models::kappa_dense(cn);
            }
            if (ckappa >= 0) {
                j["kappa_in"] = ckappa;
                j["beffara_dim_of_kappa"] = models::beffara_dim(ckappa);
            }
            if (j.empty()) throw parameter_error("constants requires --q, --n or --kappa");
            std::cout << j.dump(2) << "\n";
            if (!const_out.empty()) io::write_file(const_out, j.dump(2) + "\n");
            return 0;
        }

        if (*c_sim) {
            if (sim.threads > 0) setenv("LATTICE_SLE_THREADS", std::to_string(sim.threads).c_str(), 1);
            auto d = make_domain(sim);
            int sweeps = sim_sweeps > 0 ? sim_sweeps : models::default_burnin_sweeps(d);
            std::vector<std::string> rows(sim_samples);
            par::for_each_index(sim_samples, [&](std::int64_t i) {
                CounterRng rng = CounterRng::substream(sim.seed, i);
                char buf[128];
                if (sim_model == "percolation") {
                    auto c = models::sample_percolation(d, sim_p, rng);
                    long open = 0, tot = 0;
                    for (size_t v = 0; v < d.pos.size(); ++v)
                        if (!d.is_boundary[v]) {
                            ++tot;
                            open += c.color[v] == +1;
                        }
                    std::snprintf(buf, sizeof(buf), "%lld,open_fraction,%.12g",
                                  static_cast<long long>(i), double(open) / double(tot));
                } else if (sim_model == "ising") {
                    auto c = models::sample_ising_spin(d, sim_beta, sweeps, rng);
                    long opp = 0;
                    for (auto [u, v] : d.edges) opp += c.color[u] != c.color[v];
                    std::snprintf(buf, sizeof(buf), "%lld,opposite_pairs,%lld",
                                  static_cast<long long>(i), static_cast<long long>(opp));
                } else if (sim_model == "fk") {
                    auto c = sim_q == 2.0
                                 ? models::sample_fk_edwards_sokal(d, models::p_sd(sim_q), sweeps, rng)
                                 : models::sample_fk(d, sim_q, models::p_sd(sim_q), sweeps, rng);
                    std::snprintf(buf, sizeof(buf), "%lld,loops,%d", static_cast<long long>(i),
                                  interfaces::count_loops(c));
                } else if (sim_model == "loop") {
                    auto c = models::sample_loop_on(d, sim_n, sim_x, sweeps, rng);
                    std::snprintf(buf, sizeof(buf), "%lld,loops,%d", static_cast<long long>(i),
                                  static_cast<int>(c.loops.size()));
                } else {
                    throw parameter_error("unknown model: " + sim_model);
                }
                rows[i] = buf;
            });
            std::string csv = "sample,statistic,value\n";
            for (auto& r : rows) csv += r + "\n";
            io::write_file(sim.out + "_summary.csv", csv);
            Manifest man;
            man.command = "simulate";
            man.seed = sim.seed;
            man.config = {{"model", sim_model}, {"p", sim_p},      {"q", sim_q},
                          {"beta", sim_beta},   {"n", sim_n},      {"x", sim_x},
                          {"sweeps", sweeps},   {"samples", sim_samples},
                          {"lattice", sim.lattice}, {"width", sim.width}, {"height", sim.height}};
            man.outputs = {sim.out + "_summary.csv"};
            man.write(sim.out);
            return 0;
        }

        if (*c_trace) {
            auto d = make_domain(tr);
            int sweeps = tr_sweeps > 0 ? tr_sweeps : models::default_burnin_sweeps(d);
            CounterRng rng = CounterRng::substream(tr.seed, 0);
            auto curve = sample_curve(tr_model, d, tr_p, tr_q, tr_beta, tr_n, tr_x, sweeps, rng);
            io::write_curve_csv(tr.out + "_curve.csv", curve);
            Manifest man;
            man.command = "trace";
            man.seed = tr.seed;
            man.config = {{"model", tr_model}, {"lattice", tr.lattice},
                          {"width", tr.width}, {"height", tr.height}};
            man.outputs = {tr.out + "_curve.csv"};
            if (tr_svg) {
                io::write_curve_svg(tr.out + "_curve.svg", curve);
                man.outputs.push_back(tr.out + "_curve.svg");
            }
            man.write(tr.out);
            return 0;
        }

        if (*c_ext) {
            auto d = make_domain(ex);
            lw::DrivingSample drv;
            if (!ex_in.empty()) {
                // curve CSV: index,x,y,turn
                auto text = io::read_file(ex_in);
                InterfaceCurve curve;
                std::istringstream in(text);
                std::string line;
                std::getline(in, line);
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    double xx, yy;
                    if (std::sscanf(line.c_str(), "%*d,%lf,%lf", &xx, &yy) == 2)
                        curve.points.push_back({xx, yy});
                }
                drv = analysis::interface_driving(d, curve, corner_from_string(ex.corner_a),
                                                  corner_from_string(ex.corner_b), ex_horizon);
            } else {
                int sweeps = ex_sweeps > 0 ? ex_sweeps : models::default_burnin_sweeps(d);
                CounterRng rng = CounterRng::substream(ex.seed, 0);
                auto curve =
                    sample_curve(ex_model, d, ex_p, ex_q, ex_beta, ex_n, ex_x, sweeps, rng);
                drv = analysis::interface_driving(d, curve, corner_from_string(ex.corner_a),
                                                  corner_from_string(ex.corner_b), ex_horizon);
            }
            io::write_driving_csv(ex.out + "_driving.csv", drv);
            Manifest man;
            man.command = "extract";
            man.seed = ex.seed;
            man.config = {{"model", ex_model}, {"horizon", ex_horizon}};
            man.outputs = {ex.out + "_driving.csv"};
            man.write(ex.out);
            return 0;
        }

        if (*c_kap) {
            if (ka.threads > 0) setenv("LATTICE_SLE_THREADS", std::to_string(ka.threads).c_str(), 1);
            std::vector<lw::DrivingSample> drivings(ka_curves);
            if (ka_model == "sle") {
                par::for_each_index(ka_curves, [&](std::int64_t i) {
                    CounterRng rng = CounterRng::substream(ka.seed, i);
                    drivings[i] = lw::sample_sle_driving(ka_kappa, ka_capacity, ka_steps, rng);
                });
            } else {
                auto d = make_domain(ka);
                int sweeps = ka_sweeps > 0 ? ka_sweeps : models::default_burnin_sweeps(d);
                par::for_each_index(ka_curves, [&](std::int64_t i) {
                    CounterRng rng = CounterRng::substream(ka.seed, i);
                    auto curve =
                        sample_curve(ka_model, d, ka_p, ka_q, ka_beta, ka_n, ka_x, sweeps, rng);
                    drivings[i] = analysis::interface_driving(
                        d, curve, corner_from_string(ka.corner_a),
                        corner_from_string(ka.corner_b), ka_horizon);
                });
            }
            std::vector<double> grid;
            double tmax = ka_model == "sle" ? ka_capacity * 0.92 : ka_horizon * 0.92;
            for (double t = ka_grid_step; t <= tmax; t += ka_grid_step) grid.push_back(t);
            auto est = analysis::estimate_kappa(drivings, grid, ka.seed ^ 0xcafe);
            json j = {{"test", "estimate-kappa"},
                      {"params", {{"model", ka_model}, {"curves", ka_curves},
                                  {"horizon", ka_horizon}, {"width", ka.width}}},
                      {"kappa_hat", est.kappa_hat},
                      {"ci", {est.ci95.first, est.ci95.second}},
                      {"drift_hat", est.drift_hat},
                      {"drift_ci", {est.drift_ci95.first, est.drift_ci95.second}},
                      {"n", est.n_curves},
                      {"seed", ka.seed}};
            std::cout << j.dump(2) << "\n";
            io::write_file(ka.out + "_kappa.json", j.dump(2) + "\n");
            Manifest man;
            man.command = "estimate-kappa";
            man.seed = ka.seed;
            man.config = j["params"];
            man.outputs = {ka.out + "_kappa.json"};
            man.write(ka.out);
            return 0;
        }

        if (*c_cross) {
            if (cr.threads > 0) setenv("LATTICE_SLE_THREADS", std::to_string(cr.threads).c_str(), 1);
            cr.lattice = "triangular-site";
            auto d = make_domain(cr);
            auto spec = observables::make_crossing_spec(
                d, corner_from_string(cr.corner_a), Corner::SW, corner_from_string(cr.corner_b),
                Corner::NE);
            auto [est, se] = observables::crossing_probability_mc(spec, cr_p, cr_samples, cr.seed);
            json j = {{"test", "crossing"},
                      {"params", {{"width", cr.width}, {"height", cr.height}, {"p", cr_p}}},
                      {"estimate", est},
                      {"stderr", se},
                      {"u", spec.u},
                      {"cardy_F", observables::cardy_F(spec.u)},
                      {"n", cr_samples},
                      {"seed", cr.seed}};
            std::cout << j.dump(2) << "\n";
            io::write_file(cr.out + "_crossing.json", j.dump(2) + "\n");
            Manifest man;
            man.command = "crossing";
            man.seed = cr.seed;
            man.config = j["params"];
            man.outputs = {cr.out + "_crossing.json"};
            man.write(cr.out);
            return 0;
        }

        if (*c_obs) {
            auto d = build_square_domain_cells(ob_cx, ob_cy, ob.eps,
                                               corner_from_string(ob.corner_a),
                                               corner_from_string(ob.corner_b));
            auto dom = std::make_shared<DiscreteDomain>(std::move(d));
            auto med = medial_graph(*dom);
            observables::EdgeObservable F = ob_mode == "exact"
                                                ? observables::fermionic_exact(med, ob_q)
                                                : observables::fermionic_mc(med, ob_q, ob_samples,
                                                                            ob.seed);
            io::write_observable_csv(ob.out + "_observable.csv", F);
            json j = {{"test", "observable"},
                      {"params", {{"cells_x", ob_cx}, {"cells_y", ob_cy}, {"q", ob_q},
                                  {"mode", ob_mode}}},
                      {"projection_residual", observables::check_projection_relation(F)},
                      {"cauchy_riemann_residual", observables::check_discrete_cr(F)},
                      {"n", ob_mode == "exact" ? 0 : ob_samples},
                      {"seed", ob.seed}};
            std::cout << j.dump(2) << "\n";
            io::write_file(ob.out + "_observable.json", j.dump(2) + "\n");
            Manifest man;
            man.command = "observable";
            man.seed = ob.seed;
            man.config = j["params"];
            man.outputs = {ob.out + "_observable.csv", ob.out + "_observable.json"};
            man.write(ob.out);
            return 0;
        }

        if (*c_h) {
            auto d = build_square_domain_cells(h_cx, h_cy, hh.eps,
                                               corner_from_string(hh.corner_a),
                                               corner_from_string(hh.corner_b));
            auto dom = std::make_shared<DiscreteDomain>(std::move(d));
            auto med = medial_graph(*dom);
            auto F = observables::fermionic_exact(med, h_q);
            auto H = observables::build_height(F);
            io::write_height_csv(hh.out + "_height.csv", H);
            json j = {{"test", "height"},
                      {"params", {{"cells_x", h_cx}, {"cells_y", h_cy}, {"q", h_q}}},
                      {"cycle_discrepancy", H.cycle_discrepancy},
                      {"boundary_value_error", H.boundary_value_error},
                      {"laplacian_sign_violation", H.max_laplacian_violation},
                      {"laplacian_identity_error", H.laplacian_identity_error},
                      {"max_local_gap", H.max_local_gap},
                      {"seed", hh.seed}};
            std::cout << j.dump(2) << "\n";
            io::write_file(hh.out + "_height.json", j.dump(2) + "\n");
            Manifest man;
            man.command = "height";
            man.seed = hh.seed;
            man.config = j["params"];
            man.outputs = {hh.out + "_height.csv", hh.out + "_height.json"};
            man.write(hh.out);
            return 0;
        }

        if (*c_sle) {
            CounterRng rng = CounterRng::substream(sle_seed, 0);
            auto drv = lw::sample_sle_driving(sle_kappa, sle_T, sle_steps, rng);
            auto trace = lw::forward_solve(drv);
            io::write_trace_csv(sle_out + "_trace.csv", trace, drv.times);
            io::write_driving_csv(sle_out + "_driving.csv", drv);
            Manifest man;
            man.command = "sle";
            man.seed = sle_seed;
            man.config = {{"kappa", sle_kappa}, {"capacity", sle_T}, {"steps", sle_steps}};
            man.outputs = {sle_out + "_trace.csv", sle_out + "_driving.csv"};
            man.write(sle_out);
            return 0;
        }

        if (*c_dim) {
            std::vector<cplx> pts;
            double diam_hint = 1.0;
            if (dim_target == "sle") {
                CounterRng rng = CounterRng::substream(dm.seed, 0);
                auto trace = lw::sample_sle(dim_kappa, dim_capacity, dim_steps, rng);
                pts = trace.points;
            } else if (dim_target == "percolation") {
                dm.lattice = "triangular-site";
                auto d = make_domain(dm);
                CounterRng rng = CounterRng::substream(dm.seed, 0);
                auto col = models::sample_percolation(d, 0.5, rng);
                pts = interfaces::trace_interface(col).points;
                diam_hint = dm.width;
            } else if (dim_target == "line") {
                for (int i = 0; i <= 100000; ++i) pts.push_back({i / 100000.0, 0.0});
            } else {
                throw parameter_error("unknown dimension target: " + dim_target);
            }
            double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
            for (auto p : pts) {
                xmin = std::min(xmin, p.real());
                xmax = std::max(xmax, p.real());
                ymin = std::min(ymin, p.imag());
                ymax = std::max(ymax, p.imag());
            }
            double diam = std::hypot(xmax - xmin, ymax - ymin);
            std::vector<double> scales;
            for (double s = diam / 12.0; s > diam / 500.0; s /= 1.6) scales.push_back(s);
            auto [dim, r2] = analysis::box_dimension(pts, scales);
            json j = {{"test", "dimension"},
                      {"params", {{"target", dim_target}, {"kappa", dim_kappa},
                                  {"steps", dim_steps}, {"width", diam_hint}}},
                      {"dimension", dim},
                      {"fit_r2", r2},
                      {"n", static_cast<long long>(pts.size())},
                      {"seed", dm.seed}};
            std::cout << j.dump(2) << "\n";
            io::write_file(dm.out + "_dimension.json", j.dump(2) + "\n");
            Manifest man;
            man.command = "dimension";
            man.seed = dm.seed;
            man.config = j["params"];
            man.outputs = {dm.out + "_dimension.json"};
            man.write(dm.out);
            return 0;
        }

        if (*c_mart) {
            std::vector<double> cps;
            std::stringstream ss(m_cps);
            std::string tok;
            while (std::getline(ss, tok, ',')) cps.push_back(std::stod(tok));
            cplx z{m_zre, m_zim};
            auto rep = m_family == "phi"
                           ? analysis::martingale_test_phi(m_kappa, z, m_traces, cps, m_seed)
                           : analysis::martingale_test_psi(m_kappa, z, m_traces, cps, m_seed);
            json j = {{"test", std::string("martingale-") + m_family},
                      {"params", {{"kappa", m_kappa}, {"z", {m_zre, m_zim}}, {"traces", m_traces}}},
                      {"statistic", rep.max_sigma},
                      {"pass", rep.pass},
                      {"swallowed", rep.swallowed},
                      {"n", m_traces},
                      {"seed", m_seed}};
            std::cout << j.dump(2) << "\n";
            io::write_file(m_out + "_martingale.json", j.dump(2) + "\n");
            Manifest man;
            man.command = "martingale";
            man.seed = m_seed;
            man.config = j["params"];
            man.outputs = {m_out + "_martingale.json"};
            man.write(m_out);
            return 0;
        }

        if (*c_mark) {
            mk.lattice = "triangular-site";
            auto d = make_domain(mk);
            auto rep = analysis::markov_test(d, mk_p, mk_prefix, mk_n, mk.seed, mk_mismatch);
            json j = {{"test", "markov"},
                      {"params", {{"prefix", mk_prefix}, {"n", mk_n}, {"mismatch", mk_mismatch},
                                  {"width", mk.width}}},
                      {"statistic", rep.statistic},
                      {"p_value", rep.p_value},
                      {"dof", rep.dof},
                      {"acceptance_rate", rep.acceptance_rate},
                      {"n", mk_n},
                      {"seed", mk.seed}};
            std::cout << j.dump(2) << "\n";
            io::write_file(mk.out + "_markov.json", j.dump(2) + "\n");
            Manifest man;
            man.command = "markov";
            man.seed = mk.seed;
            man.config = j["params"];
            man.outputs = {mk.out + "_markov.json"};
            man.write(mk.out);
            return 0;
        }
    } catch (const parameter_error& ex2) {
        std::cerr << "{\"error\":\"parameter\",\"what\":\"" << ex2.what() << "\"}\n";
        return 2;
    } catch (const std::invalid_argument& ex2) {
        std::cerr << "{\"error\":\"parameter\",\"what\":\"" << ex2.what() << "\"}\n";
        return 2;
    } catch (const std::exception& ex2) {
        std::cerr << "{\"error\":\"pipeline\",\"what\":\"" << ex2.what() << "\"}\n";
        return 3;
    }
    return 0;
}
