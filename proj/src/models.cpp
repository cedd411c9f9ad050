#include "lattice_sle/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

#include "lattice_sle/interfaces.hpp"

namespace lsle::models {

namespace {
constexpr double kPi = std::numbers::pi;
}

// ---------------------------------------------------------------------------
// Critical constants

double x_c(double n) {
    if (n < 0 || n > 2) throw parameter_error("x_c: n outside [0,2]");
    return 1.0 / std::sqrt(2.0 + std::sqrt(2.0 - n));
}

double x_tilde_c(double n) {
    if (n < 0 || n > 2) throw parameter_error("x_tilde_c: n outside [0,2]");
    return 1.0 / std::sqrt(2.0 - std::sqrt(2.0 - n));
}

double kappa_dilute(double n) {
    if (n < 0 || n > 2) throw parameter_error("kappa_dilute: n outside [0,2]");
    return 4.0 * kPi / (2.0 * kPi - std::acos(-n / 2.0));
}

double kappa_dense(double n) {
    if (n < 0 || n > 2) throw parameter_error("kappa_dense: n outside [0,2]");
    return 4.0 * kPi / std::acos(-n / 2.0);
}

double p_sd(double q) {
    if (q < 0 || q > 4) throw parameter_error("p_sd: q outside [0,4]");
    double s = std::sqrt(q);
    return s / (s + 1.0);
}

double kappa_fk(double q) {
    if (q < 0 || q > 4) throw parameter_error("kappa_fk: q outside [0,4]");
    return 4.0 * kPi / std::acos(-std::sqrt(q) / 2.0);
}

double coulomb_k(double q) {
    if (q < 0 || q > 4) throw parameter_error("coulomb_k: q outside [0,4]");
    return std::acos(std::sqrt(q) / 2.0) / (2.0 * kPi);
}

double beffara_dim(double kappa) {
    if (kappa < 0) throw parameter_error("beffara_dim: kappa must be >= 0");
    return std::min(1.0 + kappa / 8.0, 2.0);
}

double beta_c_triangular() { return std::log(3.0) / 4.0; }

double x_c_square_ising() { return std::sqrt(2.0) - 1.0; }

int default_burnin_sweeps(const DiscreteDomain& domain) {
    return 10 * static_cast<int>(domain.pos.size());
}

// ---------------------------------------------------------------------------
// Dobrushin helpers

namespace {

std::vector<std::int8_t> dobrushin_site_boundary(const DiscreteDomain& d) {
    std::vector<std::int8_t> color(d.pos.size(), 0);
    for (int v : d.boundary_cycle) color[v] = d.site_state_ab(v) ? +1 : -1;
    return color;
}

} // namespace

FkStructure classify_fk_edges(const DiscreteDomain& d) {
    if (d.lattice.kind != geometry::LatticeKind::SquareBond)
        throw unsupported_lattice_error("FK classification needs a square-bond domain");

    FkStructure st;
    st.cls.assign(d.edges.size(), EdgeClass::Free);

    auto fix_path = [&](const std::vector<int>& arc, EdgeClass c) {
        for (size_t i = 0; i + 1 < arc.size(); ++i) {
            int e = d.edge_index(arc[i], arc[i + 1]);
            if (e >= 0) st.cls[e] = c;
        }
    };
    fix_path(d.arc_ab, EdgeClass::FixedOpen);
    fix_path(d.arc_ba, EdgeClass::FixedClosed);

    std::vector<char> strict_ba(d.pos.size(), 0);
    for (size_t i = 1; i + 1 < d.arc_ba.size(); ++i) strict_ba[d.arc_ba[i]] = 1;
    for (size_t e = 0; e < d.edges.size(); ++e) {
        auto [u, v] = d.edges[e];
        if (st.cls[e] == EdgeClass::Free && (strict_ba[u] || strict_ba[v]))
            st.cls[e] = EdgeClass::FixedClosed;
    }
    for (size_t e = 0; e < d.edges.size(); ++e)
        if (st.cls[e] == EdgeClass::Free) st.free_edges.push_back(static_cast<int>(e));
    return st;
}

// ---------------------------------------------------------------------------
// Percolation

SiteColoring sample_percolation(const DiscreteDomain& domain, double p, CounterRng& rng) {
    if (domain.lattice.kind != geometry::LatticeKind::TriangularSite)
        throw unsupported_lattice_error("percolation sampler needs a triangular-site domain");
    if (p < 0 || p > 1) throw parameter_error("p outside [0,1]");
    SiteColoring c;
    c.domain = &domain;
    c.color = dobrushin_site_boundary(domain);
    for (size_t v = 0; v < domain.pos.size(); ++v)
        if (!domain.is_boundary[v]) c.color[v] = rng.bernoulli(p) ? +1 : -1;
    return c;
}

// ---------------------------------------------------------------------------
// Ising spin heat bath

double ising_conditional_plus(const DiscreteDomain& d, double x,
                              const std::vector<std::int8_t>& color, int site) {
    int m_plus = 0, m_minus = 0;
    for (int w : d.nbr[site]) {
        if (color[w] == +1) ++m_plus;
        else if (color[w] == -1) ++m_minus;
    }
    // P(+) = x^{m_minus} / (x^{m_minus} + x^{m_plus})
    return 1.0 / (1.0 + std::pow(x, static_cast<double>(m_plus - m_minus)));
}

SiteColoring sample_ising_spin_masked(const DiscreteDomain& domain, double x, int sweeps,
                                      const std::vector<std::int8_t>& fixed, CounterRng& rng) {
    SiteColoring c;
    c.domain = &domain;
    c.color.assign(domain.pos.size(), 0);
    std::vector<int> free_sites;
    for (size_t v = 0; v < domain.pos.size(); ++v) {
        if (fixed[v] == 0) free_sites.push_back(static_cast<int>(v));
        else if (fixed[v] == +1 || fixed[v] == -1) c.color[v] = fixed[v];
        // fixed == -2 marks sites excluded from the interaction (their edges
        // are absent in the coupled random cluster model); they stay 0
    }
    if (free_sites.empty()) return c;

    for (int s : free_sites) c.color[s] = rng.bernoulli(0.5) ? +1 : -1;

    // flatten adjacency and tabulate the heat-bath conditional per neighbor
    // spin sum (the inner loop runs billions of times at burn-in scale)
    std::vector<int> adj_start(domain.pos.size() + 1, 0);
    int maxdeg = 0;
    for (size_t v = 0; v < domain.pos.size(); ++v) {
        adj_start[v + 1] = adj_start[v] + static_cast<int>(domain.nbr[v].size());
        maxdeg = std::max(maxdeg, static_cast<int>(domain.nbr[v].size()));
    }
    std::vector<int> adj(adj_start.back());
    for (size_t v = 0; v < domain.pos.size(); ++v)
        std::copy(domain.nbr[v].begin(), domain.nbr[v].end(), adj.begin() + adj_start[v]);
    std::vector<double> p_plus(2 * maxdeg + 1);
    for (int d = -maxdeg; d <= maxdeg; ++d)
        p_plus[d + maxdeg] = 1.0 / (1.0 + std::pow(x, static_cast<double>(d)));

    const std::uint64_t n = free_sites.size();
    for (long sweep = 0; sweep < sweeps; ++sweep) {
        for (std::uint64_t k = 0; k < n; ++k) {
            int s = free_sites[rng.uniform_index(n)];
            int delta = 0;
            for (int j = adj_start[s]; j < adj_start[s + 1]; ++j) delta += c.color[adj[j]];
            c.color[s] = rng.bernoulli(p_plus[delta + maxdeg]) ? +1 : -1;
        }
    }
    return c;
}

SiteColoring sample_ising_spin(const DiscreteDomain& domain, double beta, int sweeps,
                               CounterRng& rng) {
    if (domain.lattice.kind != geometry::LatticeKind::SquareBond &&
        domain.lattice.kind != geometry::LatticeKind::TriangularSite)
        throw unsupported_lattice_error("Ising sampler needs square-bond or triangular-site");
    if (beta <= 0) throw parameter_error("beta must be positive");
    if (sweeps < 1) throw parameter_error("sweeps must be >= 1");
    return sample_ising_spin_masked(domain, x_of_beta(beta), sweeps,
                                    dobrushin_site_boundary(domain), rng);
}

// ---------------------------------------------------------------------------
// FK random cluster

namespace {

// endpoints connected by open edges other than `e`, with the wired arc
// identified to a single node
bool fk_connected_without(const DiscreteDomain& d, const std::vector<EdgeState>& state,
                          const std::vector<char>& wired, int e) {
    auto [su, sv] = d.edges[e];
    if (wired[su] && wired[sv]) return true;
    std::vector<char> seen(d.pos.size(), 0);
    std::vector<int> stack;
    bool wired_seen = false;
    auto push = [&](int v) {
        if (wired[v]) {
            if (wired_seen) return;
            wired_seen = true;
            for (size_t w = 0; w < d.pos.size(); ++w)
                if (wired[w] && !seen[w]) {
                    seen[w] = 1;
                    stack.push_back(static_cast<int>(w));
                }
        } else if (!seen[v]) {
            seen[v] = 1;
            stack.push_back(v);
        }
    };
    push(su);
    int target = sv;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (v == target || (wired[target] && wired[v])) return true;
        for (int w : d.nbr[v]) {
            int ee = d.edge_index(v, w);
            if (ee == e || state[ee] != EdgeState::Open) continue;
            if (w == target) return true;
            push(w);
        }
    }
    return wired[target] && wired_seen;
}

std::vector<char> wired_mask(const DiscreteDomain& d) {
    std::vector<char> wired(d.pos.size(), 0);
    for (int v : d.arc_ab) wired[v] = 1;
    return wired;
}

} // namespace

double fk_conditional_open(const DiscreteDomain& d, const FkStructure&,
                           const std::vector<EdgeState>& state, int e, double q, double p) {
    auto wired = wired_mask(d);
    if (fk_connected_without(d, state, wired, e)) return p;
    return p / (p + q * (1.0 - p));
}

BondConfig sample_fk(const DiscreteDomain& domain, double q, double p, int sweeps,
                     CounterRng& rng) {
    if (!(q > 0 && q <= 4)) throw parameter_error("q outside (0,4]");
    if (!(p > 0 && p < 1)) throw parameter_error("p outside (0,1)");
    auto st = classify_fk_edges(domain);

    BondConfig cfg;
    cfg.domain = &domain;
    cfg.state.assign(domain.edges.size(), EdgeState::Closed);
    for (size_t e = 0; e < domain.edges.size(); ++e)
        if (st.cls[e] == EdgeClass::FixedOpen) cfg.state[e] = EdgeState::Open;
    for (int e : st.free_edges) cfg.state[e] = rng.bernoulli(p) ? EdgeState::Open : EdgeState::Closed;

    const std::uint64_t n = st.free_edges.size();
    if (n == 0) return cfg;
    for (long sweep = 0; sweep < sweeps; ++sweep) {
        for (std::uint64_t k = 0; k < n; ++k) {
            int e = st.free_edges[rng.uniform_index(n)];
            double po = fk_conditional_open(domain, st, cfg.state, e, q, p);
            cfg.state[e] = rng.bernoulli(po) ? EdgeState::Open : EdgeState::Closed;
        }
    }
    return cfg;
}

BondConfig sample_fk_edwards_sokal(const DiscreteDomain& domain, double p, int sweeps,
                                   CounterRng& rng) {
    if (!(p > 0 && p < 1)) throw parameter_error("p outside (0,1)");
    auto st = classify_fk_edges(domain);

    // q=2 coupling: spin weight per opposite pair is x = 1 - p over the edges
    // the cluster model retains; the wired arc carries + spins and the
    // stranded dual-arc vertices are excluded from the interaction
    std::vector<std::int8_t> fixed(domain.pos.size(), 0);
    for (int v : domain.arc_ab) fixed[v] = +1;
    for (size_t i = 1; i + 1 < domain.arc_ba.size(); ++i) fixed[domain.arc_ba[i]] = -2;

    auto spins = sample_ising_spin_masked(domain, 1.0 - p, sweeps, fixed, rng);

    BondConfig cfg;
    cfg.domain = &domain;
    cfg.state.assign(domain.edges.size(), EdgeState::Closed);
    for (size_t e = 0; e < domain.edges.size(); ++e)
        if (st.cls[e] == EdgeClass::FixedOpen) cfg.state[e] = EdgeState::Open;
    for (int e : st.free_edges) {
        auto [u, v] = domain.edges[e];
        if (spins.color[u] == spins.color[v] && rng.bernoulli(p)) cfg.state[e] = EdgeState::Open;
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// O(n) loop model

void decompose_loop_config(LoopConfig& cfg) {
    const auto& d = *cfg.domain;
    std::vector<int> deg(d.pos.size(), 0);
    for (size_t e = 0; e < d.edges.size(); ++e)
        if (cfg.edge_on[e]) {
            deg[d.edges[e].first]++;
            deg[d.edges[e].second]++;
        }
    for (size_t v = 0; v < d.pos.size(); ++v) {
        int expect_odd = (static_cast<int>(v) == d.a || static_cast<int>(v) == d.b) ? 1 : 0;
        if (deg[v] > 2 || deg[v] % 2 != expect_odd)
            throw invalid_configuration_error("loop config degree constraint violated");
    }

    std::vector<char> used(d.edges.size(), 0);
    auto walk_from = [&](int v0, int forbid_edge) {
        std::vector<int> path{v0};
        int v = v0, prev_e = forbid_edge;
        while (true) {
            int next_e = -1;
            for (int w : d.nbr[v]) {
                int e = d.edge_index(v, w);
                if (e == prev_e || !cfg.edge_on[e] || used[e]) continue;
                next_e = e;
                break;
            }
            if (next_e < 0) break;
            used[next_e] = 1;
            int w = d.edges[next_e].first == v ? d.edges[next_e].second : d.edges[next_e].first;
            path.push_back(w);
            v = w;
            prev_e = next_e;
        }
        return path;
    };

    cfg.chord = walk_from(d.a, -1);
    if (cfg.chord.empty() || cfg.chord.back() != d.b)
        throw invalid_configuration_error("chord does not join a to b");

    cfg.loops.clear();
    for (size_t e = 0; e < d.edges.size(); ++e) {
        if (!cfg.edge_on[e] || used[e]) continue;
        used[e] = 1;
        auto [u, v] = d.edges[e];
        auto cyc = walk_from(v, static_cast<int>(e));
        cyc.insert(cyc.begin(), u);
        if (cyc.back() != u) throw invalid_configuration_error("loop does not close");
        cyc.pop_back();
        cfg.loops.push_back(std::move(cyc));
    }
}

namespace {

int count_loop_components(const DiscreteDomain& d, const std::vector<std::uint8_t>& on) {
    // components of the on-subgraph; the one containing a is the chord
    std::vector<char> seen(d.pos.size(), 0);
    int comps = 0;
    for (size_t v0 = 0; v0 < d.pos.size(); ++v0) {
        bool has_on = false;
        for (int w : d.nbr[v0])
            if (on[d.edge_index(static_cast<int>(v0), w)]) has_on = true;
        if (!has_on || seen[v0]) continue;
        ++comps;
        std::vector<int> stack{static_cast<int>(v0)};
        seen[v0] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : d.nbr[v])
                if (on[d.edge_index(v, w)] && !seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
        }
    }
    return comps;
}

} // namespace

LoopConfig sample_loop_on(const DiscreteDomain& domain, double n, double x, int sweeps,
                          CounterRng& rng) {
    if (domain.lattice.kind != geometry::LatticeKind::Hexagonal)
        throw unsupported_lattice_error("O(n) sampler needs a hexagonal domain");
    if (n < 0 || n > 2) throw parameter_error("n outside [0,2]");
    if (x <= 0) throw parameter_error("x must be positive");
    if (domain.face_vertices.empty())
        throw degenerate_domain_error("no flippable faces in domain");

    LoopConfig cfg;
    cfg.domain = &domain;
    cfg.edge_on.assign(domain.edges.size(), 0);
    for (size_t i = 0; i + 1 < domain.arc_ab.size(); ++i) {
        int e = domain.edge_index(domain.arc_ab[i], domain.arc_ab[i + 1]);
        cfg.edge_on[e] = 1;
    }

    int len = static_cast<int>(domain.arc_ab.size()) - 1;
    int comps = 1; // the chord
    const std::uint64_t nf = domain.face_vertices.size();

    for (long sweep = 0; sweep < sweeps; ++sweep) {
        for (std::uint64_t k = 0; k < nf; ++k) {
            int f = static_cast<int>(rng.uniform_index(nf));
            double u = rng.uniform01(); // drawn unconditionally: fixed stream layout

            const auto& fes = domain.face_edges[f];
            int dlen = 0;
            int da = 0, db = 0;
            for (int e : fes) {
                dlen += cfg.edge_on[e] ? -1 : +1;
                auto [p1, p2] = domain.edges[e];
                int dd = cfg.edge_on[e] ? -1 : +1;
                if (p1 == domain.a || p2 == domain.a) da += dd;
                if (p1 == domain.b || p2 == domain.b) db += dd;
            }
            // reject flips that push the marked points to degree 3
            auto deg_at = [&](int v) {
                int dg = 0;
                for (int w : domain.nbr[v]) dg += cfg.edge_on[domain.edge_index(v, w)];
                return dg;
            };
            if (deg_at(domain.a) + da > 2 || deg_at(domain.b) + db > 2) continue;

            for (int e : fes) cfg.edge_on[e] ^= 1;
            int comps_new = count_loop_components(domain, cfg.edge_on);
            int dloops = comps_new - comps;
            double ratio = std::pow(n, static_cast<double>(dloops)) *
                           std::pow(x, static_cast<double>(dlen));
            if (u < ratio) {
                len += dlen;
                comps = comps_new;
            } else {
                for (int e : fes) cfg.edge_on[e] ^= 1;
            }
        }
    }
    decompose_loop_config(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Harmonic Explorer

namespace {

struct HexFaceProblem {
    const DiscreteDomain* d;
    std::vector<int> edge_arc;  // per edge: -1 interior, 0 = arc_ab, 1 = arc_ba

    explicit HexFaceProblem(const DiscreteDomain& dom) : d(&dom) {
        edge_arc.assign(dom.edges.size(), -1);
        auto mark = [&](const std::vector<int>& arc, int id) {
            for (size_t i = 0; i + 1 < arc.size(); ++i) {
                int e = dom.edge_index(arc[i], arc[i + 1]);
                if (e >= 0) edge_arc[e] = id;
            }
        };
        mark(dom.arc_ab, 0);
        mark(dom.arc_ba, 1);
    }

    // initial colors: +1 (value 1, arc_ba side), -1 (value 0), 0 unknown
    std::vector<std::int8_t> initial_colors() const {
        std::vector<std::int8_t> col(d->face_vertices.size(), 0);
        for (size_t f = 0; f < d->face_vertices.size(); ++f) {
            bool ab = false, ba = false;
            for (int e : d->face_edges[f]) {
                if (edge_arc[e] == 0) ab = true;
                if (edge_arc[e] == 1) ba = true;
            }
            if (ab && !ba) col[f] = -1;
            if (ba && !ab) col[f] = +1;
        }
        return col;
    }

    // Dirichlet solve over unknown faces: 6 h(f) - sum_nbr h = boundary terms.
    // Across-boundary neighbors contribute their arc value.
    void solve(const std::vector<std::int8_t>& col, std::vector<double>& h) const {
        const int nf = static_cast<int>(d->face_vertices.size());
        std::vector<int> idx(nf, -1);
        std::vector<int> unknowns;
        for (int f = 0; f < nf; ++f)
            if (col[f] == 0) {
                idx[f] = static_cast<int>(unknowns.size());
                unknowns.push_back(f);
            }
        const int m = static_cast<int>(unknowns.size());
        if (m == 0) return;

        std::vector<double> rhs(m, 0.0);
        std::vector<std::vector<int>> link(m);
        for (int i = 0; i < m; ++i) {
            int f = unknowns[i];
            for (int e : d->face_edges[f]) {
                auto [f0, f1] = d->edge_faces[e];
                int g = f0 == f ? f1 : f0;
                if (g < 0) {
                    rhs[i] += edge_arc[e] == 1 ? 1.0 : 0.0;
                } else if (col[g] != 0) {
                    rhs[i] += col[g] == +1 ? 1.0 : 0.0;
                } else {
                    link[i].push_back(idx[g]);
                }
            }
        }

        // conjugate gradients on (6 I - A), warm-started from h
        std::vector<double> xv(m), r(m), pvec(m), ap(m);
        for (int i = 0; i < m; ++i) xv[i] = h[unknowns[i]];
        auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
            for (int i = 0; i < m; ++i) {
                double s = 6.0 * in[i];
                for (int j : link[i]) s -= in[j];
                out[i] = s;
            }
        };
        apply(xv, r);
        double rr = 0;
        for (int i = 0; i < m; ++i) {
            r[i] = rhs[i] - r[i];
            rr += r[i] * r[i];
        }
        pvec = r;
        const double tol2 = 1e-24 * std::max(1.0, static_cast<double>(m));
        int maxit = 10 * m + 100;
        int it = 0;
        while (rr > tol2 && it++ < maxit) {
            apply(pvec, ap);
            double pap = 0;
            for (int i = 0; i < m; ++i) pap += pvec[i] * ap[i];
            double alpha = rr / pap;
            double rr_new = 0;
            for (int i = 0; i < m; ++i) {
                xv[i] += alpha * pvec[i];
                r[i] -= alpha * ap[i];
                rr_new += r[i] * r[i];
            }
            double beta = rr_new / rr;
            rr = rr_new;
            for (int i = 0; i < m; ++i) pvec[i] = r[i] + beta * pvec[i];
        }
        if (rr > tol2 * 1e6)
            throw solver_error("harmonic solve did not converge", std::sqrt(rr));
        for (int i = 0; i < m; ++i) h[unknowns[i]] = xv[i];
    }
};

} // namespace

double harmonic_explorer_turn_probability(const DiscreteDomain& domain,
                                          const std::vector<std::int8_t>& face_color,
                                          int face) {
    HexFaceProblem prob(domain);
    if (face_color[face] != 0) return face_color[face] == +1 ? 1.0 : 0.0;
    std::vector<double> h(domain.face_vertices.size(), 0.5);
    prob.solve(face_color, h);
    return h[face];
}

std::vector<std::int8_t> harmonic_explorer_initial_colors(const DiscreteDomain& domain) {
    HexFaceProblem prob(domain);
    return prob.initial_colors();
}

InterfaceCurve sample_harmonic_explorer(const DiscreteDomain& domain, CounterRng& rng) {
    return run_harmonic_explorer(domain, rng).curve;
}

HarmonicExplorerRun run_harmonic_explorer(const DiscreteDomain& domain, CounterRng& rng) {
    if (domain.lattice.kind != geometry::LatticeKind::Hexagonal)
        throw unsupported_lattice_error("harmonic explorer needs a hexagonal domain");

    HexFaceProblem prob(domain);
    auto col = prob.initial_colors();
    std::vector<double> h(domain.face_vertices.size(), 0.5);

    InterfaceCurve curve;
    curve.lattice_step = domain.lattice.mesh;
    HarmonicExplorerRun run;

    int prev = -1, cur = domain.a;
    curve.points.push_back(domain.pos[cur]);
    const long cap = 4 * static_cast<long>(domain.edges.size()) + 16;
    long steps = 0;

    // chirality: which side of the walk the value-1 (arc_ba) cells stay on,
    // read off from the geometry of the arcs at the starting point
    double one_side = 0; // +1 = left, -1 = right
    {
        int first = -1;
        for (int w : domain.nbr[domain.a])
            if (!domain.is_boundary[w]) first = w;
        if (first < 0) first = domain.nbr[domain.a][0];
        complex d = domain.pos[first] - domain.pos[domain.a];
        int u_ba = domain.arc_ba[domain.arc_ba.size() - 2]; // neighbor of a on arc_ba
        complex to_ba = domain.pos[u_ba] - domain.pos[domain.a];
        one_side = std::imag(std::conj(d) * to_ba) > 0 ? +1.0 : -1.0;
    }

    while (cur != domain.b) {
        if (++steps > cap) throw invalid_configuration_error("harmonic explorer exceeded cap");

        std::vector<int> cand;
        for (int w : domain.nbr[cur])
            if (w != prev) cand.push_back(w);

        int next = -1;
        if (prev == -1) {
            // first move: into the domain along the interior edge at a
            for (int w : cand)
                if (!domain.is_boundary[w]) next = w;
            if (next == -1) {
                for (int w : cand) {
                    int e = domain.edge_index(cur, w);
                    if (domain.edge_faces[e][0] >= 0 || domain.edge_faces[e][1] >= 0) next = w;
                }
            }
            if (next == -1) throw degenerate_domain_error("a has no usable edge");
        } else if (cand.size() == 1) {
            next = cand[0];
        } else if (cand.size() == 2) {
            int e0 = domain.edge_index(cur, cand[0]);
            int e1 = domain.edge_index(cur, cand[1]);
            // face ahead: common to both outgoing edges
            int ahead = -1;
            for (int f : domain.edge_faces[e0])
                if (f >= 0 && (domain.edge_faces[e1][0] == f || domain.edge_faces[e1][1] == f))
                    ahead = f;

            double p1; // probability the cell ahead takes the arc_ba value 1
            if (ahead >= 0) {
                if (col[ahead] == 0) {
                    prob.solve(col, h);
                    p1 = h[ahead];
                    run.drawn_probabilities.push_back(p1);
                    col[ahead] = rng.bernoulli(p1) ? +1 : -1;
                }
                p1 = col[ahead] == +1 ? 1.0 : 0.0;
            } else {
                // outer region: both candidate edges are boundary edges on one arc
                int arc = prob.edge_arc[e0] >= 0 ? prob.edge_arc[e0] : prob.edge_arc[e1];
                p1 = arc == 1 ? 1.0 : 0.0;
            }

            // a value-1 cell ahead stays on the 1-side flank of the walk
            complex din = domain.pos[cur] - domain.pos[prev];
            double t0 = std::arg((domain.pos[cand[0]] - domain.pos[cur]) / din);
            int left = t0 > 0 ? cand[0] : cand[1];
            int right = t0 > 0 ? cand[1] : cand[0];
            bool ahead_is_one = p1 > 0.5;
            if (one_side > 0)
                next = ahead_is_one ? right : left;
            else
                next = ahead_is_one ? left : right;
        } else {
            throw unsupported_lattice_error("hexagonal domain is not trivalent");
        }

        prev = cur;
        cur = next;
        curve.points.push_back(domain.pos[cur]);
    }

    curve.turns.assign(curve.points.size(), 0.0);
    for (size_t i = 1; i + 1 < curve.points.size(); ++i)
        curve.turns[i] = std::arg((curve.points[i + 1] - curve.points[i]) /
                                  (curve.points[i] - curve.points[i - 1]));
    run.curve = std::move(curve);
    run.final_colors = std::move(col);
    return run;
}

} // namespace lsle::models
