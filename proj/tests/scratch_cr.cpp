#include <cmath>
#include <cstdio>
#include <vector>
#include "lattice_sle/geometry.hpp"
#include "lattice_sle/interfaces.hpp"
#include "lattice_sle/models.hpp"
#include "lattice_sle/observables.hpp"
using namespace lsle;
using namespace lsle::geometry;
using namespace lsle::interfaces;
using namespace lsle::models;
using cplx = std::complex<double>;

int main() {
    auto d = build_square_domain_cells(4, 4, 1.0, Corner::NW, Corner::SE);
    auto st = classify_fk_edges(d);
    auto medial = medial_graph(d);
    const double rq = std::sqrt(2.0), theta = -0.5;
    auto medge = [&](int u, int v) {
        for (size_t e = 0; e < medial.edges.size(); ++e) {
            auto [x, y] = medial.edges[e];
            if ((x == u && y == v) || (x == v && y == u)) return (int)e;
        }
        return -1;
    };
    double Z = 0;
    std::vector<cplx> vsum(medial.pos.size());
    BondConfig cfg; cfg.domain = &d;
    for (std::uint64_t mask = 0; mask < (1ULL << st.free_edges.size()); ++mask) {
        cfg.state.assign(d.edges.size(), EdgeState::Closed);
        for (size_t e = 0; e < d.edges.size(); ++e)
            if (st.cls[e] == EdgeClass::FixedOpen) cfg.state[e] = EdgeState::Open;
        for (size_t i = 0; i < st.free_edges.size(); ++i)
            if (mask & (1ULL << i)) cfg.state[st.free_edges[i]] = EdgeState::Open;
        double weight = std::pow(rq, medial_census(cfg).n_loops);
        Z += weight;
        auto chord = trace_fk_chord(cfg);
        const auto& vs = chord.vertices;
        const auto& turns = chord.curve.turns;
        const size_t M = vs.size();
        double suffix = 0;
        std::vector<double> w(M, 0.0);
        for (size_t i = M - 1; i-- > 0;) { suffix += turns[i + 1]; w[i] = suffix; }
        for (size_t i = 0; i < M; ++i) vsum[vs[i]] += weight * std::polar(1.0, theta * w[i]);
    }
    for (auto& v : vsum) v /= Z;
    // find faces with center (2,2) and (2.5,2.5)-ish
    for (size_t f = 0; f < medial.face_vertices.size(); ++f) {
        cplx c = medial.face_center[f];
        bool want = std::abs(c - cplx(2, 2)) < 0.01 || std::abs(c - cplx(2.5, 2.5)) < 0.01 ||
                    std::abs(c - cplx(2.5, 1.5)) < 0.01;
        if (!want) continue;
        std::printf("face (%g,%g) black=%d corners ccw:\n", c.real(), c.imag(),
                    (int)medial.face_black[f]);
        for (int v : medial.face_vertices[f]) {
            int pe = medial.medial_vertex_primal_edge[v];
            std::printf("  v at (%.1f,%.1f) %s: % .10f %+.10f i\n", medial.pos[v].real(),
                        medial.pos[v].imag(), d.edge_horizontal[pe] ? "H" : "V",
                        vsum[v].real(), vsum[v].imag());
        }
    }
    return 0;
}
