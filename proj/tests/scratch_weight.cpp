#include <cmath>
#include <cstdio>
#include <set>
#include <vector>
#include "lattice_sle/geometry.hpp"
#include "lattice_sle/interfaces.hpp"
#include "lattice_sle/models.hpp"
using namespace lsle;
using namespace lsle::geometry;
using namespace lsle::interfaces;
using namespace lsle::models;

int main() {
    auto d = build_square_domain_cells(3, 2, 1.0, Corner::NW, Corner::SE);
    auto st = classify_fk_edges(d);
    const double q = 2.0, p = p_sd(q);
    BondConfig cfg; cfg.domain = &d;
    double ratio_min = 1e300, ratio_max = -1e300;
    for (std::uint64_t mask = 0; mask < (1ULL << st.free_edges.size()); ++mask) {
        cfg.state.assign(d.edges.size(), EdgeState::Closed);
        for (size_t e = 0; e < d.edges.size(); ++e)
            if (st.cls[e] == EdgeClass::FixedOpen) cfg.state[e] = EdgeState::Open;
        int nopen = 0;
        for (size_t i = 0; i < st.free_edges.size(); ++i)
            if (mask & (1ULL << i)) { cfg.state[st.free_edges[i]] = EdgeState::Open; ++nopen; }
        int loops = medial_census(cfg).n_loops;
        // clusters: all vertices, wired arc identified, over open edges
        std::vector<int> par(d.pos.size());
        for (size_t i = 0; i < par.size(); ++i) par[i] = (int)i;
        std::function<int(int)> find = [&](int x) { while (par[x] != x) x = par[x] = par[par[x]]; return x; };
        auto uni = [&](int a, int b) { par[find(a)] = find(b); };
        for (size_t i = 0; i + 1 < d.arc_ab.size(); ++i) uni(d.arc_ab[i], d.arc_ab[i + 1]);
        for (size_t e = 0; e < d.edges.size(); ++e)
            if (cfg.state[e] == EdgeState::Open) uni(d.edges[e].first, d.edges[e].second);
        std::set<int> roots;
        for (size_t v = 0; v < d.pos.size(); ++v) roots.insert(find((int)v));
        int k = (int)roots.size();
        int nfree = (int)st.free_edges.size();
        double w_fk = std::pow(p, nopen) * std::pow(1 - p, nfree - nopen) * std::pow(q, k);
        double w_loop = std::pow(std::sqrt(q), loops);
        double r = w_loop / w_fk;
        ratio_min = std::min(ratio_min, r);
        ratio_max = std::max(ratio_max, r);
    }
    std::printf("ratio min %.12e max %.12e  rel spread %.3e\n", ratio_min, ratio_max,
                (ratio_max - ratio_min) / ratio_min);
    return 0;
}
