// development probe: prints the empirical structure of the FK loop
// representation and the fermionic observable on small domains
#include <cstdio>
#include <map>

#include "lattice_sle/geometry.hpp"
#include "lattice_sle/interfaces.hpp"
#include "lattice_sle/models.hpp"
#include "lattice_sle/observables.hpp"

using namespace lsle;
using namespace lsle::geometry;
using namespace lsle::models;
using namespace lsle::interfaces;

int main() {
    LatticeSpec s;
    s.kind = LatticeKind::SquareBond;
    s.mesh = 1.0;
    auto d = build_rectangle_domain(s, 4, 4, Corner::NW, Corner::SE);
    std::printf("4x4: vertices=%zu edges=%zu faces=%zu\n", d.pos.size(), d.edges.size(),
                d.face_vertices.size());

    auto st = classify_fk_edges(d);
    std::printf("free edges: %zu\n", st.free_edges.size());

    // enumerate a smaller domain for full checks: use mesh=1 width=height=4 -> 4x4 cells: too many
    // free edges; rebuild at 4x4 with mesh 2 => 2x2 cells
    auto d2 = build_square_domain_cells(2, 2, 1.0, Corner::NW, Corner::SE);
    auto st2 = classify_fk_edges(d2);
    std::printf("2x2-ish: vertices=%zu edges=%zu faces=%zu free=%zu\n", d2.pos.size(),
                d2.edges.size(), d2.face_vertices.size(), st2.free_edges.size());

    BondConfig cfg;
    cfg.domain = &d2;
    int bad_euler = 0;
    std::map<int, int> loop_hist;
    for (std::uint64_t mask = 0; mask < (1ULL << st2.free_edges.size()); ++mask) {
        cfg.state.assign(d2.edges.size(), EdgeState::Closed);
        for (size_t e = 0; e < d2.edges.size(); ++e)
            if (st2.cls[e] == EdgeClass::FixedOpen) cfg.state[e] = EdgeState::Open;
        for (size_t i = 0; i < st2.free_edges.size(); ++i)
            if (mask & (1ULL << i)) cfg.state[st2.free_edges[i]] = EdgeState::Open;
        auto census = medial_census(cfg);
        int euler = euler_loop_count(cfg);
        if (census.n_loops != euler) {
            ++bad_euler;
            if (bad_euler < 5)
                std::printf("mask %llu: census loops=%d euler=%d arcs=%zu chord=%zu\n",
                            (unsigned long long)mask, census.n_loops, euler, census.arcs.size(),
                            census.chord.size());
        }
        loop_hist[census.n_loops]++;
        auto chord = trace_fk_chord(cfg);
        if (chord.vertices != census.chord && !census.chord.empty()) {
            std::printf("mask %llu: chord mismatch between trace and census\n",
                        (unsigned long long)mask);
        }
    }
    std::printf("euler mismatches: %d\n", bad_euler);
    for (auto [l, c] : loop_hist) std::printf("  loops=%d x%d\n", l, c);

    // degenerate configs: all free closed / all open
    for (int allopen = 0; allopen < 2; ++allopen) {
        cfg.state.assign(d2.edges.size(), EdgeState::Closed);
        for (size_t e = 0; e < d2.edges.size(); ++e)
            if (st2.cls[e] == EdgeClass::FixedOpen) cfg.state[e] = EdgeState::Open;
        if (allopen)
            for (int e : st2.free_edges) cfg.state[e] = EdgeState::Open;
        auto chord = trace_fk_chord(cfg);
        std::printf("%s: chord len %zu, points:", allopen ? "all-open " : "all-closed",
                    chord.vertices.size());
        for (auto p : chord.curve.points) std::printf(" (%.1f,%.1f)", p.real(), p.imag());
        std::printf("\n");
    }

    // fermionic observable structure at q=2 on the 2x2 domain
    auto medial = medial_graph(d2);
    std::printf("medial: vertices=%zu edges=%zu faces=%zu\n", medial.pos.size(),
                medial.edges.size(), medial.face_vertices.size());
    auto F = observables::fermionic_exact(medial, 2.0);

    // check line membership per edge
    double worst_line = 0;
    for (size_t e = 0; e < medial.edges.size(); ++e) {
        auto v = F.edge_values[e];
        if (std::abs(v) < 1e-14) continue;
        auto dir = observables::medial_line_direction(medial, (int)e);
        double off = std::abs(std::imag(std::conj(dir) * v));
        worst_line = std::max(worst_line, off);
    }
    std::printf("worst line offset (edges): %.3e\n", worst_line);
    std::printf("projection relation: %.3e\n", observables::check_projection_relation(F));
    std::printf("discrete CR: %.3e\n", observables::check_discrete_cr(F));

    // vertex/edge normalization relation: proj(F(v)) vs F(e)
    double worst_rel1 = 0, worst_rel2 = 0;
    for (size_t e = 0; e < medial.edges.size(); ++e) {
        auto dir = observables::medial_line_direction(medial, (int)e);
        auto [v1, v2] = medial.edges[e];
        double p1 = std::real(std::conj(dir) * F.vertex_values[v1]);
        double pe = std::real(std::conj(dir) * F.edge_values[e]);
        worst_rel1 = std::max(worst_rel1, std::abs(p1 - pe));
        worst_rel2 = std::max(worst_rel2, std::abs(p1 - pe / (2 * std::cos(M_PI / 8)) * 2 * std::cos(M_PI / 8)));
    }
    std::printf("proj(Fv) vs F(e): %.3e ; x-check: %.3e\n", worst_rel1, worst_rel2);

    // height function
    try {
        auto H = observables::build_height(F, 1e-8);
        std::printf("H: cycle=%.3e boundary_err=%.3e lap_viol=%.3e gap=%.3e\n",
                    H.cycle_discrepancy, H.boundary_value_error, H.max_laplacian_violation,
                    H.max_local_gap);
    } catch (const std::exception& ex) {
        std::printf("height failed: %s\n", ex.what());
    }
    return 0;
}
