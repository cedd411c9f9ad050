#include "lattice_sle/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "lattice_sle/parallel.hpp"
#include "lattice_sle/rng.hpp"

namespace lsle::observables {

using interfaces::trace_fk_chord;
using models::BondConfig;
using models::EdgeClass;
using models::EdgeState;

namespace {

constexpr double kPi = std::numbers::pi;
// Winding from b to the point: traverse the chord from the b-end toward the
// point (turn angles negate under the reversed traversal). Our plane
// orientation mirrors the usual figures, so the q=2 edge values land on the
// lines sqrt(e) R (e the black->white unit vector) after the global phase
// fixed at the sink edge, and the discrete Cauchy-Riemann relation holds
// with +i over counterclockwise corners.
constexpr double kWindingSign = -1.0;

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    if (depth > 40 || std::abs(left + right - whole) < 15 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, tol / 2, depth + 1) +
           simpson(f, m, b, fm, frm, fb, tol / 2, depth + 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return simpson(f, a, b, fa, fm, fb, tol, 0);
}

// int_0^u (v(1-v))^(-2/3) dv for u <= 1/2 via v = s^3
double cardy_half_integral(double u) {
    if (u <= 0) return 0.0;
    auto g = [](double s) { return 3.0 / std::pow(1.0 - s * s * s, 2.0 / 3.0); };
    return integrate(g, 0.0, std::cbrt(u), 1e-13);
}

} // namespace

double cardy_F(double u) {
    if (u < 0 || u > 1) throw parameter_error("cardy_F: u outside [0,1]");
    static const double norm = 2.0 * cardy_half_integral(0.5);
    if (u <= 0.5) return cardy_half_integral(u) / norm;
    return 1.0 - cardy_half_integral(1.0 - u) / norm;
}

double cardy_F_hypergeometric(double u) {
    if (u < 0 || u > 1) throw parameter_error("u outside [0,1]");
    if (u == 1.0) return 1.0;
    double c = std::tgamma(2.0 / 3.0) / (std::tgamma(1.0 / 3.0) * std::tgamma(4.0 / 3.0));
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 4000; ++k) {
        term *= (1.0 / 3 + k) * (2.0 / 3 + k) / ((4.0 / 3 + k) * (1.0 + k)) * u;
        sum += term;
        if (std::abs(term) < 1e-17 * sum) break;
    }
    return c * std::cbrt(u) * sum;
}

double cardy_ode_residual(double a) {
    if (!(a > 0.05 && a < 0.95)) throw parameter_error("a outside (0.05, 0.95)");
    const double h = 1e-4;
    double fp = (cardy_F(a + h) - cardy_F(a - h)) / (2 * h);
    double fpp = (cardy_F(a + h) - 2 * cardy_F(a) + cardy_F(a - h)) / (h * h);
    // hypergeometric ODE from the kappa = 6 martingale expansion at ratio a:
    // F'' + 2(1-2a) / (3 a (1-a)) F' = 0. (Expanding the crossing martingale
    // to order 1/x^2 gives the x/(x-y) = a coefficient with the factor a in
    // the denominator; at a = 1/3 it reduces to F'' + F' = 0, which the
    // hypergeometric form satisfies identically.)
    return fpp + 2.0 * (1.0 - 2.0 * a) / (3.0 * a * (1.0 - a)) * fp;
}

// ---------------------------------------------------------------------------
// Crossing probability

CrossingSpec make_crossing_spec(const DiscreteDomain& domain, geometry::Corner ca,
                                geometry::Corner cx, geometry::Corner cb, geometry::Corner cy) {
    CrossingSpec spec;
    spec.domain = &domain;
    auto corner_pos = [&](geometry::Corner c) -> complex {
        switch (c) {
            case geometry::Corner::SW: return {0, 0};
            case geometry::Corner::SE: return {domain.width, 0};
            case geometry::Corner::NE: return {domain.width, domain.height};
            case geometry::Corner::NW: return {0, domain.height};
        }
        return {0, 0};
    };
    auto snap = [&](geometry::Corner c) {
        complex t = corner_pos(c);
        int best = -1;
        double bd = 0;
        for (int v : domain.boundary_cycle) {
            double dist = std::abs(domain.pos[v] - t);
            if (best < 0 || dist < bd - 1e-12) {
                best = v;
                bd = dist;
            }
        }
        return best;
    };
    spec.a = snap(ca);
    spec.x = snap(cx);
    spec.b = snap(cb);
    spec.y = snap(cy);

    double aspect = domain.width / domain.height;
    auto m = geometry::rect_to_halfplane(aspect, ca, cb);
    double xi = m.corner_image(cx);
    double eta = m.corner_image(cy);
    spec.u = xi / (xi - eta);
    if (!(spec.u > 0 && spec.u < 1)) throw parameter_error("corner layout gives u outside (0,1)");
    return spec;
}

namespace {

struct UF {
    std::vector<int> p;
    explicit UF(size_t n) : p(n) {
        for (size_t i = 0; i < n; ++i) p[i] = static_cast<int>(i);
    }
    int find(int x) {
        while (p[x] != x) x = p[x] = p[p[x]];
        return x;
    }
    void unite(int x, int y) { p[find(x)] = find(y); }
};

std::vector<int> boundary_arc_vertices(const DiscreteDomain& d, int from, int to) {
    const auto& cyc = d.boundary_cycle;
    const int m = static_cast<int>(cyc.size());
    int i0 = -1, i1 = -1;
    for (int i = 0; i < m; ++i) {
        if (cyc[i] == from) i0 = i;
        if (cyc[i] == to) i1 = i;
    }
    std::vector<int> out;
    for (int i = i0;; i = (i + 1) % m) {
        out.push_back(cyc[i]);
        if (i == i1) break;
    }
    return out;
}

} // namespace

std::pair<double, double> crossing_probability_mc(const CrossingSpec& spec, double p,
                                                  std::int64_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw parameter_error("n_samples must be >= 1");
    if (p < 0 || p > 1) throw parameter_error("p outside [0,1]");
    const auto& d = *spec.domain;
    if (d.lattice.kind != geometry::LatticeKind::TriangularSite)
        throw unsupported_lattice_error("crossing estimate needs a triangular-site domain");

    auto arc1 = boundary_arc_vertices(d, spec.a, spec.x);
    auto arc2 = boundary_arc_vertices(d, spec.b, spec.y);
    const int nv = static_cast<int>(d.pos.size());
    const int SRC = nv, DST = nv + 1;

    std::vector<std::uint8_t> hit(n_samples, 0);
    par::for_each_index(n_samples, [&](std::int64_t idx) {
        CounterRng rng = CounterRng::substream(seed, static_cast<std::uint64_t>(idx));
        std::vector<char> open(nv);
        for (int v = 0; v < nv; ++v) open[v] = rng.bernoulli(p) ? 1 : 0;
        UF uf(nv + 2);
        for (auto [u, v] : d.edges)
            if (open[u] && open[v]) uf.unite(u, v);
        for (int v : arc1)
            if (open[v]) uf.unite(v, SRC);
        for (int v : arc2)
            if (open[v]) uf.unite(v, DST);
        hit[idx] = uf.find(SRC) == uf.find(DST) ? 1 : 0;
    });

    double k = 0;
    for (auto h : hit) k += h;
    double est = k / static_cast<double>(n_samples);
    double se = std::sqrt(std::max(est * (1 - est), 1e-12) / static_cast<double>(n_samples));
    return {est, se};
}

// ---------------------------------------------------------------------------
// Fermionic observable

complex medial_line_direction(const DiscreteDomain& medial, int medial_edge) {
    auto [v1, v2] = medial.edges[medial_edge];
    const auto& primal = *medial.primal;
    int e1 = medial.medial_vertex_primal_edge[v1];
    // black = horizontal primal edge midpoints
    int black = primal.edge_horizontal[e1] ? v1 : v2;
    int white = black == v1 ? v2 : v1;
    complex u = medial.pos[white] - medial.pos[black];
    u /= std::abs(u);
    complex dir = std::sqrt(u);
    return dir / std::abs(dir);
}

namespace {

struct FermionAccumulator {
    const DiscreteDomain* medial;
    std::vector<complex> vsum;
    std::vector<complex> esum;
    double zsum = 0;
    double theta; // winding weight exponent, 4k - 1

    // medial edge lookup: key (min vertex, max vertex)
    std::unordered_map<std::uint64_t, int> medge;

    explicit FermionAccumulator(const DiscreteDomain& m, double q)
        : medial(&m),
          vsum(m.pos.size()),
          esum(m.edges.size()),
          theta(4.0 * models::coulomb_k(q) - 1.0) {
        for (size_t e = 0; e < m.edges.size(); ++e) {
            auto [u, v] = m.edges[e];
            if (u > v) std::swap(u, v);
            medge[(static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v)] =
                static_cast<int>(e);
        }
    }

    int medial_edge(int u, int v) const {
        if (u > v) std::swap(u, v);
        auto it = medge.find((static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v));
        return it == medge.end() ? -1 : it->second;
    }

    void add(const interfaces::MedialChord& chord, double weight) {
        zsum += weight;
        const auto& vs = chord.vertices;
        const auto& turns = chord.curve.turns;
        const size_t M = vs.size();
        // winding from the b-end back to index i: the tip contributes no turn
        std::vector<double> w(M, 0.0);
        double suffix = 0;
        for (size_t i = M - 1; i-- > 0;) {
            suffix += turns[i + 1];
            w[i] = kWindingSign * suffix;
        }
        for (size_t i = 0; i < M; ++i)
            vsum[vs[i]] += weight * std::polar(1.0, theta * w[i]);
        for (size_t i = 0; i + 1 < M; ++i) {
            int e = medial_edge(vs[i], vs[i + 1]);
            if (e >= 0) esum[e] += weight * std::polar(1.0, theta * w[i]);
        }
    }
};

EdgeObservable finalize(FermionAccumulator& acc, const DiscreteDomain& medial, double q,
                        int sink_edge) {
    EdgeObservable F;
    F.medial = &medial;
    F.q = q;
    F.vertex_values.resize(medial.pos.size());
    F.edge_values.resize(medial.edges.size());
    complex phase = medial_line_direction(medial, sink_edge);
    F.global_phase = phase;
    F.normalization = 1.0 / (2.0 * std::cos(kPi / 8.0));
    for (size_t v = 0; v < medial.pos.size(); ++v)
        F.vertex_values[v] = phase * acc.vsum[v] / acc.zsum;
    for (size_t e = 0; e < medial.edges.size(); ++e)
        F.edge_values[e] = phase * acc.esum[e] / acc.zsum;
    return F;
}

int find_sink_edge(const interfaces::MedialChord& chord, const FermionAccumulator& acc) {
    const auto& vs = chord.vertices;
    return acc.medial_edge(vs[vs.size() - 2], vs[vs.size() - 1]);
}

} // namespace

EdgeObservable fermionic_exact_constrained(
    const DiscreteDomain& medial, double q,
    const std::vector<std::pair<int, models::EdgeState>>& forced,
    const interfaces::MedialStart* start) {
    if (!(q > 0 && q <= 4)) throw parameter_error("q outside (0,4]");
    if (!medial.primal) throw parameter_error("medial domain lacks its primal domain");
    const auto& primal = *medial.primal;

    auto st = models::classify_fk_edges(primal);
    std::vector<EdgeState> base(primal.edges.size(), EdgeState::Closed);
    for (size_t e = 0; e < primal.edges.size(); ++e)
        if (st.cls[e] == EdgeClass::FixedOpen) base[e] = EdgeState::Open;
    std::vector<char> is_forced(primal.edges.size(), 0);
    for (auto [e, s] : forced) {
        base[e] = s;
        is_forced[e] = 1;
    }
    std::vector<int> free_edges;
    for (int e : st.free_edges)
        if (!is_forced[e]) free_edges.push_back(e);

    const int nf = static_cast<int>(free_edges.size());
    if (nf > 22) throw enumeration_limit_error("too many free edges to enumerate");

    FermionAccumulator acc(medial, q);
    const double rq = std::sqrt(q);
    int sink_edge = -1;

    BondConfig cfg;
    cfg.domain = &primal;
    for (std::uint64_t mask = 0; mask < (1ULL << nf); ++mask) {
        cfg.state = base;
        for (int i = 0; i < nf; ++i)
            if (mask & (1ULL << i)) cfg.state[free_edges[i]] = EdgeState::Open;
        int loops = interfaces::medial_census(cfg).n_loops;
        double weight = std::pow(rq, static_cast<double>(loops));
        auto chord = trace_fk_chord(cfg, start);
        acc.add(chord, weight);
        if (sink_edge < 0) sink_edge = find_sink_edge(chord, acc);
    }
    return finalize(acc, medial, q, sink_edge);
}

EdgeObservable fermionic_exact(const DiscreteDomain& medial, double q) {
    if (medial.edges.size() > 24)
        throw enumeration_limit_error("domain has more than 24 medial edges");
    return fermionic_exact_constrained(medial, q, {});
}

EdgeObservable fermionic_mc(const DiscreteDomain& medial, double q, std::int64_t n_samples,
                            std::uint64_t seed) {
    if (!(q > 0 && q <= 4)) throw parameter_error("q outside (0,4]");
    if (!medial.primal) throw parameter_error("medial domain lacks its primal domain");
    const auto& primal = *medial.primal;
    const double p = models::p_sd(q);

    const int n_chains = 16;
    const std::int64_t per_chain = std::max<std::int64_t>(1, n_samples / n_chains);
    const int burnin = models::default_burnin_sweeps(primal);
    const int thin = 2;

    struct ChainOut {
        std::vector<complex> vmean, emean;
        int sink_edge = -1;
    };
    std::vector<ChainOut> chains(n_chains);

    par::for_each_index(n_chains, [&](std::int64_t c) {
        CounterRng rng = CounterRng::substream(seed, static_cast<std::uint64_t>(c));
        FermionAccumulator acc(medial, q);
        int sink_edge = -1;
        if (q == 2.0) {
            // Edwards-Sokal: evolve the coupled spin chain, draw bonds per sample
            auto st = models::classify_fk_edges(primal);
            std::vector<std::int8_t> fixed(primal.pos.size(), 0);
            for (int v : primal.arc_ab) fixed[v] = +1;
            for (size_t i = 1; i + 1 < primal.arc_ba.size(); ++i) fixed[primal.arc_ba[i]] = -2;
            auto spins = models::sample_ising_spin_masked(primal, 1.0 - p, burnin, fixed, rng);
            std::vector<int> free_sites;
            for (size_t v = 0; v < primal.pos.size(); ++v)
                if (fixed[v] == 0) free_sites.push_back(static_cast<int>(v));
            BondConfig cfg;
            cfg.domain = &primal;
            for (std::int64_t s = 0; s < per_chain; ++s) {
                const double x = 1.0 - p;
                for (int sweep = 0; sweep < thin; ++sweep)
                    for (size_t k2 = 0; k2 < free_sites.size(); ++k2) {
                        int site = free_sites[rng.uniform_index(free_sites.size())];
                        double pp = models::ising_conditional_plus(primal, x, spins.color, site);
                        spins.color[site] = rng.bernoulli(pp) ? +1 : -1;
                    }
                cfg.state.assign(primal.edges.size(), EdgeState::Closed);
                for (size_t e = 0; e < primal.edges.size(); ++e)
                    if (st.cls[e] == EdgeClass::FixedOpen) cfg.state[e] = EdgeState::Open;
                for (int e : st.free_edges) {
                    auto [u, v] = primal.edges[e];
                    if (spins.color[u] == spins.color[v] && rng.bernoulli(p))
                        cfg.state[e] = EdgeState::Open;
                }
                auto chord = trace_fk_chord(cfg);
                acc.add(chord, 1.0);
                if (sink_edge < 0) sink_edge = find_sink_edge(chord, acc);
            }
        } else {
            for (std::int64_t s = 0; s < per_chain; ++s) {
                auto cfg = models::sample_fk(primal, q, p, s == 0 ? burnin : thin, rng);
                auto chord = trace_fk_chord(cfg);
                acc.add(chord, 1.0);
                if (sink_edge < 0) sink_edge = find_sink_edge(chord, acc);
            }
        }
        ChainOut& out = chains[c];
        out.sink_edge = sink_edge;
        out.vmean.resize(acc.vsum.size());
        out.emean.resize(acc.esum.size());
        for (size_t i = 0; i < acc.vsum.size(); ++i) out.vmean[i] = acc.vsum[i] / acc.zsum;
        for (size_t i = 0; i < acc.esum.size(); ++i) out.emean[i] = acc.esum[i] / acc.zsum;
    });

    EdgeObservable F;
    F.medial = &medial;
    F.q = q;
    int sink_edge = chains[0].sink_edge;
    complex phase = medial_line_direction(medial, sink_edge);
    F.global_phase = phase;
    F.normalization = 1.0 / (2.0 * std::cos(kPi / 8.0));
    const size_t nv = medial.pos.size(), ne = medial.edges.size();
    F.vertex_values.assign(nv, {});
    F.edge_values.assign(ne, {});
    F.vertex_stderr.assign(nv, 0.0);
    F.edge_stderr.assign(ne, 0.0);
    for (size_t i = 0; i < nv; ++i) {
        complex m{};
        for (auto& c : chains) m += c.vmean[i];
        m /= static_cast<double>(n_chains);
        double var = 0;
        for (auto& c : chains) var += std::norm(c.vmean[i] - m);
        var /= (n_chains - 1.0) * n_chains;
        F.vertex_values[i] = phase * m;
        F.vertex_stderr[i] = std::sqrt(var);
    }
    for (size_t i = 0; i < ne; ++i) {
        complex m{};
        for (auto& c : chains) m += c.emean[i];
        m /= static_cast<double>(n_chains);
        double var = 0;
        for (auto& c : chains) var += std::norm(c.emean[i] - m);
        var /= (n_chains - 1.0) * n_chains;
        F.edge_values[i] = phase * m;
        F.edge_stderr[i] = std::sqrt(var);
    }
    return F;
}

// Interior of the Dobrushin domain: medial vertices sitting on free primal
// edges. The wired arc, the dual-wired arc and the closed edges hanging off
// it form the discrete boundary, where the relations take their (untested)
// boundary form.
std::vector<std::uint8_t> interior_medial_vertices(const DiscreteDomain& medial) {
    const auto& primal = *medial.primal;
    auto st = models::classify_fk_edges(primal);
    std::vector<std::uint8_t> interior(medial.pos.size(), 0);
    for (size_t v = 0; v < medial.pos.size(); ++v)
        interior[v] =
            st.cls[medial.medial_vertex_primal_edge[v]] == EdgeClass::Free ? 1 : 0;
    return interior;
}

double check_projection_relation(const EdgeObservable& F) {
    const auto& m = *F.medial;
    auto interior = interior_medial_vertices(m);
    double worst = 0;
    for (size_t e = 0; e < m.edges.size(); ++e) {
        auto [v1, v2] = m.edges[e];
        if (!interior[v1] || !interior[v2]) continue;
        complex dir = medial_line_direction(m, static_cast<int>(e));
        double p1 = std::real(std::conj(dir) * F.vertex_values[v1]);
        double p2 = std::real(std::conj(dir) * F.vertex_values[v2]);
        worst = std::max(worst, std::abs(p1 - p2));
    }
    return worst;
}

double check_discrete_cr(const EdgeObservable& F) {
    const auto& m = *F.medial;
    auto interior = interior_medial_vertices(m);
    double worst = 0;
    for (size_t f = 0; f < m.face_vertices.size(); ++f) {
        const auto& fv = m.face_vertices[f];
        if (fv.size() != 4) continue;
        bool ok = true;
        for (int v : fv)
            if (!interior[v]) ok = false;
        if (!ok) continue;
        complex u = F.vertex_values[fv[0]], v = F.vertex_values[fv[1]];
        complex w = F.vertex_values[fv[2]], z = F.vertex_values[fv[3]];
        worst = std::max(worst, std::abs(z - v - complex(0, 1) * (w - u)));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Height function

HeightFunction build_height(const EdgeObservable& F, double tau) {
    const auto& m = *F.medial;
    if (check_projection_relation(F) > tau)
        throw not_integrable_error("observable violates the projection relation");

    HeightFunction H;
    H.medial = &m;
    H.color.assign(m.face_black.begin(), m.face_black.end());
    const int nf = static_cast<int>(m.face_vertices.size());

    // Integration nodes: the medial faces plus the two outer regions along
    // the arcs. Crossing a medial edge from the black side to the white side
    // raises H by |F(e)|^2 (our plane orientation mirrors the usual figures,
    // which flips the sign of Im int F^2 dz); at a boundary medial edge the
    // outer region plays the black role. H is anchored at 0 on the outer
    // arc_ab region, and comes out exactly 1 on the outer arc_ba region.
    const auto& primal = *m.primal;
    std::vector<int> varc(primal.pos.size(), -1);
    for (size_t i = 1; i + 1 < primal.arc_ab.size(); ++i) varc[primal.arc_ab[i]] = 0;
    for (size_t i = 1; i + 1 < primal.arc_ba.size(); ++i) varc[primal.arc_ba[i]] = 1;

    const int outer_ab = nf, outer_ba = nf + 1;
    struct Link {
        int lo, hi; // H(hi) = H(lo) + inc
        double inc;
    };
    std::vector<Link> links;
    for (size_t e = 0; e < m.edges.size(); ++e) {
        auto [f0, f1] = m.edge_faces[e];
        double inc = std::norm(F.edge_values[e]);
        if (f0 >= 0 && f1 >= 0) {
            int black = m.face_black[f0] ? f0 : f1;
            int white = black == f0 ? f1 : f0;
            links.push_back({black, white, inc});
        } else {
            int f = f0 >= 0 ? f0 : f1;
            auto [mv1, mv2] = m.edges[e];
            int pe1 = m.medial_vertex_primal_edge[mv1];
            int pe2 = m.medial_vertex_primal_edge[mv2];
            auto [a1, b1] = primal.edges[pe1];
            auto [a2, b2] = primal.edges[pe2];
            int w = (a1 == a2 || a1 == b2) ? a1 : b1;
            if (w == primal.a || w == primal.b) continue; // jump at the marked points
            if (varc[w] < 0) continue;
            links.push_back({varc[w] == 0 ? outer_ab : outer_ba, f, inc});
        }
    }

    std::vector<double> val(nf + 2, 0.0);
    std::vector<char> seen(nf + 2, 0);
    seen[outer_ab] = 1;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& l : links) {
            if (seen[l.lo] && !seen[l.hi]) {
                val[l.hi] = val[l.lo] + l.inc;
                seen[l.hi] = 1;
                changed = true;
            } else if (seen[l.hi] && !seen[l.lo]) {
                val[l.lo] = val[l.hi] - l.inc;
                seen[l.lo] = 1;
                changed = true;
            }
        }
    }
    double disc = 0;
    for (const auto& l : links)
        if (seen[l.lo] && seen[l.hi])
            disc = std::max(disc, std::abs(val[l.hi] - val[l.lo] - l.inc));
    H.cycle_discrepancy = disc;
    if (disc > tau) throw not_integrable_error("height increments are not integrable");

    H.face_values.assign(val.begin(), val.begin() + nf);
    H.outer_ab_value = val[outer_ab];
    H.outer_ba_value = seen[outer_ba] ? val[outer_ba] : std::numeric_limits<double>::quiet_NaN();
    H.boundary_value_error =
        std::max(std::abs(H.outer_ab_value), std::abs(H.outer_ba_value - 1.0));

    for (size_t e = 0; e < m.edges.size(); ++e) {
        auto [f0, f1] = m.edge_faces[e];
        if (f0 < 0 || f1 < 0) continue;
        H.max_local_gap =
            std::max(H.max_local_gap, std::abs(H.face_values[f0] - H.face_values[f1]));
    }

    // same-color diagonal sublattices: in our orientation H is superharmonic
    // on black faces and subharmonic on white ones, with the exact identity
    // Delta H = -+ |F(x) - F(y)|^2 over opposite corners
    std::vector<std::vector<int>> diag(nf);
    for (size_t v = 0; v < m.pos.size(); ++v) {
        std::vector<int> bf, wf;
        for (int f = 0; f < nf; ++f)
            for (int fvv : m.face_vertices[f])
                if (fvv == static_cast<int>(v)) (m.face_black[f] ? bf : wf).push_back(f);
        auto link = [&](std::vector<int>& fs) {
            if (fs.size() == 2) {
                diag[fs[0]].push_back(fs[1]);
                diag[fs[1]].push_back(fs[0]);
            }
        };
        link(bf);
        link(wf);
    }
    auto interior = interior_medial_vertices(m);
    double viol = 0, dh_err = 0;
    for (int f = 0; f < nf; ++f) {
        if (diag[f].size() != 4) continue;
        bool good = true;
        for (int v : m.face_vertices[f])
            if (!interior[v]) good = false;
        if (!good) continue;
        double lap = -4.0 * H.face_values[f];
        for (int g : diag[f]) lap += H.face_values[g];
        if (m.face_black[f]) viol = std::max(viol, lap);
        else viol = std::max(viol, -lap);
        const auto& fv = m.face_vertices[f];
        double want = std::norm(F.vertex_values[fv[0]] - F.vertex_values[fv[2]]);
        double sign = m.face_black[f] ? -1.0 : 1.0;
        dh_err = std::max(dh_err, std::abs(lap - sign * want));
    }
    H.max_laplacian_violation = viol;
    H.laplacian_identity_error = dh_err;
    return H;
}

// ---------------------------------------------------------------------------
// Convergence to sqrt(Phi')

ConvergenceReport convergence_test(double width, double height, double eps0, int levels,
                                   std::int64_t n_samples, std::uint64_t seed) {
    if (levels < 2) throw parameter_error("need at least two mesh levels");
    ConvergenceReport rep;

    const double aspect = width / height;
    auto rh = geometry::rect_to_halfplane(aspect, geometry::Corner::NW, geometry::Corner::SE);

    for (int lvl = 0; lvl < levels; ++lvl) {
        double eps = eps0 / std::pow(2.0, lvl);
        geometry::LatticeSpec spec;
        spec.kind = geometry::LatticeKind::SquareBond;
        spec.mesh = eps;
        auto dom = geometry::build_rectangle_domain(spec, width, height, geometry::Corner::NW,
                                                    geometry::Corner::SE);
        auto medial = geometry::medial_graph(dom);
        auto F = fermionic_mc(medial, 2.0, n_samples, seed + lvl);

        // interior compact: central half of the rectangle
        double x0 = 0.25 * width, x1 = 0.75 * width;
        double y0 = 0.25 * height, y1 = 0.75 * height;

        // reference vertex: largest |F| inside the compact
        int ref = -1;
        double fbest = -1;
        std::vector<int> sel;
        for (size_t v = 0; v < medial.pos.size(); ++v) {
            complex z = medial.pos[v];
            if (z.real() < x0 || z.real() > x1 || z.imag() < y0 || z.imag() > y1) continue;
            sel.push_back(static_cast<int>(v));
            double av = std::abs(F.vertex_values[v]);
            if (av > fbest) {
                fbest = av;
                ref = static_cast<int>(v);
            }
        }
        if (ref < 0) throw degenerate_domain_error("compact contains no medial vertices");

        auto target = [&](complex z) {
            complex zz = z / height; // map defined on [0,aspect]x[0,1]
            complex phi_p = rh.dmap(zz) / (kPi * rh.map(zz) * height);
            return std::sqrt(phi_p);
        };

        complex c = (F.vertex_values[ref] / std::sqrt(eps)) / target(medial.pos[ref]);
        c /= std::abs(c); // phase convention from the reference edge; modulus free
        double scale = 0, cnt = 0;
        for (int v : sel) {
            scale += std::abs(F.vertex_values[v]) / std::sqrt(eps) / std::abs(target(medial.pos[v]));
            cnt += 1;
        }
        scale /= cnt;

        double sup = 0, noise = 0, signal = 0;
        for (int v : sel) {
            complex fhat = F.vertex_values[v] / std::sqrt(eps);
            complex tgt = c * scale * target(medial.pos[v]);
            sup = std::max(sup, std::abs(fhat - tgt));
            noise += F.vertex_stderr[v] / std::sqrt(eps);
            signal += std::abs(fhat);
        }
        noise /= cnt;
        signal /= cnt;
        if (noise > signal / 3.0)
            throw inconclusive_noise_error("MC noise dominates the observable");

        rep.eps.push_back(eps);
        rep.sup_error.push_back(sup);
        rep.noise_level.push_back(noise);

        if (lvl == levels - 1) {
            // fitted exponent on the finest level
            double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
            for (int v : sel) {
                double av = std::abs(F.vertex_values[v]);
                if (av <= 0) continue;
                double lx = std::log(std::abs(target(medial.pos[v])) *
                                     std::abs(target(medial.pos[v])));
                double ly = std::log(av);
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
                n += 1;
            }
            rep.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        }
    }
    for (size_t i = 1; i < rep.sup_error.size(); ++i)
        if (rep.sup_error[i] > rep.sup_error[i - 1] + rep.noise_level[i] + rep.noise_level[i - 1])
            rep.monotone = false;
    return rep;
}

} // namespace lsle::observables
