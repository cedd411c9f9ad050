#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "lattice_sle/geometry.hpp"
#include "lattice_sle/interfaces.hpp"
#include "lattice_sle/models.hpp"

using namespace lsle;
using namespace lsle::geometry;
using namespace lsle::models;

namespace {

LatticeSpec spec(LatticeKind k, double eps = 1.0) {
    LatticeSpec s;
    s.kind = k;
    s.mesh = eps;
    return s;
}

} // namespace

TEST_CASE("critical constants against their closed forms") {
    CHECK(x_c(0) == doctest::Approx(1.0 / std::sqrt(2.0 + std::sqrt(2.0))).epsilon(1e-14));
    CHECK(x_c(1) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(x_c(2) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(kappa_dilute(1) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(kappa_dilute(0) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
    CHECK(kappa_fk(2) == doctest::Approx(16.0 / 3.0).epsilon(1e-14));
    CHECK(kappa_fk(1) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(kappa_fk(0) == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(p_sd(1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p_sd(2) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
    CHECK(coulomb_k(2) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(beffara_dim(3) == doctest::Approx(11.0 / 8.0).epsilon(1e-14));
    CHECK(beffara_dim(16.0 / 3.0) == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
    CHECK(beffara_dim(9) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(x_of_beta(beta_c_triangular()) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK_THROWS_AS(x_c(2.5), parameter_error);
    CHECK_THROWS_AS(kappa_fk(4.5), parameter_error);
    CHECK_THROWS_AS(beffara_dim(-1), parameter_error);
}

TEST_CASE("dilute and dense branches sum their angles to 2 pi") {
    // 1/kd + 1/kD = 1/2: the two arccos branches sum to 2 pi. (The product
    // form does not hold for these formulas: n=1 gives 3 * 6 = 18.)
    for (double n : {0.0, 0.3, 1.0, 1.5, 2.0})
        CHECK(1.0 / kappa_dilute(n) + 1.0 / kappa_dense(n) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("self-duality of p_sd under the dual-weight relation") {
    for (double q : {0.5, 1.0, 2.0, 3.0, 4.0}) {
        double p = p_sd(q);
        double pstar = q * (1 - p) / p / (1.0 + q * (1 - p) / p);
        CHECK(pstar == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("alpha = 1 - 4k equals 8/kappa - 1 at the conjectured kappa(q)") {
    for (double q : {0.0, 1.0, 2.0, 4.0})
        CHECK(1.0 - 4.0 * coulomb_k(q) == doctest::Approx(8.0 / kappa_fk(q) - 1.0).epsilon(1e-12));
}

TEST_CASE("percolation sampler degenerate probabilities and statistics") {
    auto d = build_rectangle_domain(spec(LatticeKind::TriangularSite), 12, 12, Corner::NW,
                                    Corner::SE);
    CounterRng rng(1);
    auto all_closed = sample_percolation(d, 0.0, rng);
    auto all_open = sample_percolation(d, 1.0, rng);
    int interior = 0;
    for (size_t v = 0; v < d.pos.size(); ++v) {
        if (d.is_boundary[v]) continue;
        ++interior;
        CHECK(all_closed.color[v] == -1);
        CHECK(all_open.color[v] == +1);
    }
    CHECK(interior > 50);

    long open = 0, total = 0;
    auto big = build_rectangle_domain(spec(LatticeKind::TriangularSite), 110, 110, Corner::NW,
                                      Corner::SE);
    CounterRng rng2(7);
    auto c = sample_percolation(big, 0.5, rng2);
    for (size_t v = 0; v < big.pos.size(); ++v)
        if (!big.is_boundary[v]) {
            ++total;
            open += c.color[v] == +1;
        }
    CHECK(total > 10000);
    double frac = static_cast<double>(open) / total;
    CHECK(std::abs(frac - 0.5) < 4 * 0.5 / std::sqrt(static_cast<double>(total)));
}

TEST_CASE("samplers are deterministic in the seed") {
    auto d = build_rectangle_domain(spec(LatticeKind::TriangularSite), 10, 10, Corner::NW,
                                    Corner::SE);
    CounterRng a(99), b(99);
    CHECK(sample_percolation(d, 0.37, a).color == sample_percolation(d, 0.37, b).color);
}

TEST_CASE("Ising zero-temperature limit reaches a minimal interface") {
    auto d = build_rectangle_domain(spec(LatticeKind::SquareBond), 6, 6, Corner::NW, Corner::SE);
    CounterRng rng(5);
    auto c = sample_ising_spin(d, 8.0, 400, rng);
    long opp = 0;
    for (auto [u, v] : d.edges) opp += c.color[u] != c.color[v];
    CHECK(opp <= 13); // shortest two-arc separating set for opposite corners
    CHECK_THROWS_AS(sample_ising_spin(d, -1.0, 1, rng), parameter_error);
}

TEST_CASE("single free spin follows the two-state Gibbs ratio") {
    auto d = build_square_domain_cells(2, 2, 1.0, Corner::NW, Corner::SE);
    int center = -1;
    for (size_t v = 0; v < d.pos.size(); ++v)
        if (!d.is_boundary[v]) center = static_cast<int>(v);
    REQUIRE(center >= 0);

    double beta = 0.3, x = x_of_beta(beta);
    int m_plus = 0, m_minus = 0;
    for (int w : d.nbr[center]) (d.site_state_ab(w) ? m_plus : m_minus)++;
    double p_plus = std::pow(x, static_cast<double>(m_minus)) /
                    (std::pow(x, static_cast<double>(m_minus)) +
                     std::pow(x, static_cast<double>(m_plus)));

    const int N = 100000;
    long plus = 0;
    CounterRng rng(11);
    for (int i = 0; i < N; ++i) {
        auto c = sample_ising_spin(d, beta, 1, rng);
        plus += c.color[center] == +1;
    }
    double se = std::sqrt(p_plus * (1 - p_plus) / N);
    CHECK(std::abs(static_cast<double>(plus) / N - p_plus) < 4 * se);
}

TEST_CASE("FK heat bath reduces to Bernoulli(p) at q = 1") {
    auto d = build_square_domain_cells(3, 3, 1.0, Corner::NW, Corner::SE);
    auto st = classify_fk_edges(d);
    BondConfig cfg;
    cfg.domain = &d;
    cfg.state.assign(d.edges.size(), EdgeState::Closed);
    for (size_t e = 0; e < d.edges.size(); ++e)
        if (st.cls[e] == EdgeClass::FixedOpen) cfg.state[e] = EdgeState::Open;
    for (int e : st.free_edges)
        CHECK(fk_conditional_open(d, st, cfg.state, e, 1.0, 0.37) == doctest::Approx(0.37));
    CHECK_THROWS_AS(sample_fk(d, 4.5, 0.5, 1, *(new CounterRng(1))), parameter_error);
}

TEST_CASE("FK sampler matches brute-force enumeration at p_sd(2)") {
    auto d = build_square_domain_cells(2, 2, 1.0, Corner::NW, Corner::SE);
    auto st = classify_fk_edges(d);
    REQUIRE(st.free_edges.size() == 2);
    const double q = 2.0, p = p_sd(q);

    std::map<std::uint64_t, double> exact;
    double Z = 0;
    BondConfig cfg;
    cfg.domain = &d;
    for (std::uint64_t mask = 0; mask < 4; ++mask) {
        cfg.state.assign(d.edges.size(), EdgeState::Closed);
        for (size_t e = 0; e < d.edges.size(); ++e)
            if (st.cls[e] == EdgeClass::FixedOpen) cfg.state[e] = EdgeState::Open;
        for (size_t i = 0; i < 2; ++i)
            if (mask & (1ULL << i)) cfg.state[st.free_edges[i]] = EdgeState::Open;
        double w = std::pow(std::sqrt(q), interfaces::count_loops(cfg));
        exact[mask] = w;
        Z += w;
    }
    for (auto& [m, w] : exact) w /= Z;

    const int N = 100000;
    std::map<std::uint64_t, long> hits;
    CounterRng rng(123);
    for (int i = 0; i < N; ++i) {
        auto s = sample_fk(d, q, p, 10, rng);
        std::uint64_t mask = 0;
        for (size_t j = 0; j < 2; ++j)
            if (s.state[st.free_edges[j]] == EdgeState::Open) mask |= 1ULL << j;
        hits[mask]++;
    }
    for (auto& [mask, pexp] : exact) {
        double phat = static_cast<double>(hits[mask]) / N;
        CHECK(std::abs(phat - pexp) < 4 * std::sqrt(pexp * (1 - pexp) / N));
    }
}

TEST_CASE("heat-bath and Edwards-Sokal samplers agree on the edge density") {
    auto d = build_square_domain_cells(4, 3, 1.0, Corner::NW, Corner::SE);
    auto st = classify_fk_edges(d);
    const double p = p_sd(2.0);
    const int N = 3000;
    double hb = 0, es = 0, hb2 = 0, es2 = 0;
    CounterRng r1(17), r2(18);
    for (int i = 0; i < N; ++i) {
        auto a = sample_fk(d, 2.0, p, 6, r1);
        auto b = sample_fk_edwards_sokal(d, p, 60, r2);
        double da = 0, db = 0;
        for (int e : st.free_edges) {
            da += a.state[e] == EdgeState::Open;
            db += b.state[e] == EdgeState::Open;
        }
        da /= st.free_edges.size();
        db /= st.free_edges.size();
        hb += da;
        es += db;
        hb2 += da * da;
        es2 += db * db;
    }
    hb /= N;
    es /= N;
    double var = (hb2 / N - hb * hb) + (es2 / N - es * es);
    CHECK(std::abs(hb - es) < 4 * std::sqrt(var / N));
}

TEST_CASE("O(n) loop sampler matches exhaustive enumeration") {
    LatticeSpec hs = spec(LatticeKind::Hexagonal);
    auto d = build_rectangle_domain(hs, 6, 6, Corner::NW, Corner::SE);
    REQUIRE(d.edges.size() <= 24);

    auto enumerate = [&](double n, double x) {
        std::map<std::vector<std::uint8_t>, double> table;
        const int ne = static_cast<int>(d.edges.size());
        for (std::uint64_t mask = 0; mask < (1ULL << ne); ++mask) {
            LoopConfig cfg;
            cfg.domain = &d;
            cfg.edge_on.assign(ne, 0);
            int len = 0;
            for (int e = 0; e < ne; ++e)
                if (mask & (1ULL << e)) {
                    cfg.edge_on[e] = 1;
                    ++len;
                }
            try {
                decompose_loop_config(cfg);
            } catch (const invalid_configuration_error&) {
                continue;
            }
            table[cfg.edge_on] =
                std::pow(n, static_cast<double>(cfg.loops.size())) * std::pow(x, len);
        }
        double Z = 0;
        for (auto& [k, w] : table) Z += w;
        for (auto& [k, w] : table) w /= Z;
        return table;
    };

    for (auto [n, x] : {std::pair{1.0, 1.0}, {2.0, 1.0 / std::sqrt(2.0)}}) {
        auto exact = enumerate(n, x);
        REQUIRE(exact.size() >= 2);
        std::map<std::vector<std::uint8_t>, long> hits;
        const int N = 100000;
        CounterRng rng(31);
        for (int i = 0; i < N; ++i) hits[sample_loop_on(d, n, x, 4, rng).edge_on]++;
        for (auto& [key, pexp] : exact) {
            double phat = static_cast<double>(hits[key]) / N;
            CHECK(std::abs(phat - pexp) < 4.5 * std::sqrt(std::max(pexp * (1 - pexp), 1e-9) / N));
        }
    }
}

TEST_CASE("loop-model detailed balance on an enumerable domain") {
    LatticeSpec hs = spec(LatticeKind::Hexagonal);
    auto d = build_rectangle_domain(hs, 6, 6, Corner::NW, Corner::SE);
    const double n = 1.7, x = 0.8;
    const int ne = static_cast<int>(d.edges.size());
    const int nf = static_cast<int>(d.face_vertices.size());

    // enumerate valid states
    std::map<std::vector<std::uint8_t>, double> weight;
    for (std::uint64_t mask = 0; mask < (1ULL << ne); ++mask) {
        LoopConfig cfg;
        cfg.domain = &d;
        cfg.edge_on.assign(ne, 0);
        int len = 0;
        for (int e = 0; e < ne; ++e)
            if (mask & (1ULL << e)) {
                cfg.edge_on[e] = 1;
                ++len;
            }
        try {
            decompose_loop_config(cfg);
        } catch (const invalid_configuration_error&) {
            continue;
        }
        weight[cfg.edge_on] = std::pow(n, static_cast<double>(cfg.loops.size())) * std::pow(x, len);
    }

    auto deg_at = [&](const std::vector<std::uint8_t>& on, int v) {
        int dg = 0;
        for (int w : d.nbr[v]) dg += on[d.edge_index(v, w)];
        return dg;
    };
    auto flip = [&](const std::vector<std::uint8_t>& on, int f) {
        auto out = on;
        for (int e : d.face_edges[f]) out[e] ^= 1;
        return out;
    };

    // kernel: pick a face uniformly, accept with min(1, ratio); moves that
    // break the degree bound at a or b are rejected
    for (auto& [s, ws] : weight) {
        for (int f = 0; f < nf; ++f) {
            auto t = flip(s, f);
            if (deg_at(t, d.a) > 2 || deg_at(t, d.b) > 2) continue;
            auto it = weight.find(t);
            if (it == weight.end()) continue; // structurally invalid, rejected
            double fwd = std::min(1.0, it->second / ws) / nf;
            double back = std::min(1.0, ws / it->second) / nf;
            CHECK(ws * fwd == doctest::Approx(it->second * back).epsilon(1e-12));
        }
    }
}

TEST_CASE("loop sampler errors") {
    LatticeSpec hs = spec(LatticeKind::Hexagonal);
    auto d = build_rectangle_domain(hs, 6, 6, Corner::NW, Corner::SE);
    CounterRng rng(2);
    CHECK_THROWS_AS(sample_loop_on(d, 2.5, 1.0, 1, rng), parameter_error);
    CHECK_THROWS_AS(sample_loop_on(d, 1.0, -1.0, 1, rng), parameter_error);
}

TEST_CASE("harmonic explorer turn probabilities") {
    LatticeSpec hs = spec(LatticeKind::Hexagonal);
    auto d = build_rectangle_domain(hs, 8, 8, Corner::NW, Corner::SE);
    auto col0 = harmonic_explorer_initial_colors(d);

    SUBCASE("faces pinned by the arcs") {
        int pinned = 0;
        for (size_t f = 0; f < d.face_vertices.size(); ++f) {
            if (col0[f] == +1) {
                CHECK(harmonic_explorer_turn_probability(d, col0, static_cast<int>(f)) == 1.0);
                ++pinned;
            }
            if (col0[f] == -1) {
                CHECK(harmonic_explorer_turn_probability(d, col0, static_cast<int>(f)) == 0.0);
                ++pinned;
            }
        }
        CHECK(pinned >= 4);
    }

    SUBCASE("dense solve oracle on the free faces") {
        std::vector<int> unknowns;
        std::vector<int> idx(d.face_vertices.size(), -1);
        for (size_t f = 0; f < d.face_vertices.size(); ++f)
            if (col0[f] == 0) {
                idx[f] = static_cast<int>(unknowns.size());
                unknowns.push_back(static_cast<int>(f));
            }
        const int m = static_cast<int>(unknowns.size());
        REQUIRE(m >= 3);
        std::vector<std::vector<double>> A(m, std::vector<double>(m + 1, 0.0));
        std::vector<int> earc(d.edges.size(), -1);
        auto mark = [&](const std::vector<int>& arc, int id) {
            for (size_t i = 0; i + 1 < arc.size(); ++i) {
                int e = d.edge_index(arc[i], arc[i + 1]);
                if (e >= 0) earc[e] = id;
            }
        };
        mark(d.arc_ab, 0);
        mark(d.arc_ba, 1);
        for (int i = 0; i < m; ++i) {
            int f = unknowns[i];
            A[i][i] = 6.0;
            for (int e : d.face_edges[f]) {
                auto [f0, f1] = d.edge_faces[e];
                int g = f0 == f ? f1 : f0;
                if (g < 0) A[i][m] += earc[e] == 1 ? 1.0 : 0.0;
                else if (col0[g] != 0) A[i][m] += col0[g] == +1 ? 1.0 : 0.0;
                else A[i][idx[g]] -= 1.0;
            }
        }
        for (int c = 0; c < m; ++c) {
            int piv = c;
            for (int r = c; r < m; ++r)
                if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
            std::swap(A[c], A[piv]);
            for (int r = 0; r < m; ++r) {
                if (r == c) continue;
                double fr = A[r][c] / A[c][c];
                for (int k = c; k <= m; ++k) A[r][k] -= fr * A[c][k];
            }
        }
        for (int i = 0; i < m; ++i)
            CHECK(std::abs(A[i][m] / A[i][i] -
                           harmonic_explorer_turn_probability(d, col0, unknowns[i])) < 1e-10);
    }

    SUBCASE("side-of-curve law equals the harmonic value (martingale oracle)") {
        const int N = 1500;
        std::vector<double> cnt(d.face_vertices.size(), 0);
        for (int i = 0; i < N; ++i) {
            CounterRng rng = CounterRng::substream(2718, i);
            auto run = run_harmonic_explorer(d, rng);
            CHECK(std::abs(run.curve.points.back() - d.pos[d.b]) < 1e-9);
            std::vector<char> used(d.edges.size(), 0);
            std::vector<int> vids(run.curve.points.size(), -1);
            for (size_t k = 0; k < run.curve.points.size(); ++k)
                for (size_t v = 0; v < d.pos.size(); ++v)
                    if (std::abs(d.pos[v] - run.curve.points[k]) < 1e-9) {
                        vids[k] = static_cast<int>(v);
                        break;
                    }
            for (size_t k = 1; k < vids.size(); ++k) used[d.edge_index(vids[k - 1], vids[k])] = 1;
            std::vector<char> side(d.face_vertices.size(), 0);
            std::vector<int> stack;
            for (size_t f = 0; f < d.face_vertices.size(); ++f)
                if (col0[f] == +1) {
                    side[f] = 1;
                    stack.push_back(static_cast<int>(f));
                }
            while (!stack.empty()) {
                int f = stack.back();
                stack.pop_back();
                for (int e : d.face_edges[f]) {
                    if (used[e]) continue;
                    auto [f0, f1] = d.edge_faces[e];
                    int g = f0 == f ? f1 : f0;
                    if (g >= 0 && !side[g]) {
                        side[g] = 1;
                        stack.push_back(g);
                    }
                }
            }
            for (size_t f = 0; f < d.face_vertices.size(); ++f) cnt[f] += side[f];
        }
        for (size_t f = 0; f < d.face_vertices.size(); ++f) {
            if (col0[f] != 0) continue;
            double h0 = harmonic_explorer_turn_probability(d, col0, static_cast<int>(f));
            double phat = cnt[f] / N;
            CHECK(std::abs(phat - h0) < 4.5 * std::sqrt(std::max(h0 * (1 - h0), 1e-6) / N));
        }
    }
}
