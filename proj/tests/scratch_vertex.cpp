// development probe: which vertex-value convention satisfies the projection
// relation and discrete CR exactly?
#include <cmath>
#include <cstdio>
#include <map>
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
    auto d = build_square_domain_cells(3, 2, 1.0, Corner::NW, Corner::SE);
    auto st = classify_fk_edges(d);
    auto medial = medial_graph(d);
    const double q = 2.0, rq = std::sqrt(q);
    const double theta = 4.0 * coulomb_k(q) - 1.0;

    auto medge = [&](int u, int v) {
        for (size_t e = 0; e < medial.edges.size(); ++e) {
            auto [x, y] = medial.edges[e];
            if ((x == u && y == v) || (x == v && y == u)) return (int)e;
        }
        return -1;
    };

    double Z = 0;
    std::vector<cplx> esum(medial.edges.size());
    const int NV = (int)medial.pos.size();
    // candidate vertex sums
    std::vector<cplx> A(NV), B(NV), Bm(NV), C(NV);

    BondConfig cfg;
    cfg.domain = &d;
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
        std::vector<double> w(M, 0.0);
        double suffix = 0;
        for (size_t i = M - 1; i-- > 0;) {
            suffix += turns[i + 1];
            w[i] = suffix;
        }
        for (size_t i = 0; i + 1 < M; ++i) esum[medge(vs[i], vs[i + 1])] += weight * std::polar(1.0, theta * w[i]);
        for (size_t i = 0; i < M; ++i) {
            A[vs[i]] += weight * std::polar(1.0, theta * w[i]);
            B[vs[i]] += weight * std::polar(1.0, theta * (w[i] + turns[i]));
            Bm[vs[i]] += weight * std::polar(1.0, theta * (w[i] - turns[i]));
        }
    }
    for (auto& v : esum) v /= Z;
    for (int v = 0; v < NV; ++v) {
        A[v] /= Z;
        B[v] /= Z;
        Bm[v] /= Z;
        for (int u : medial.nbr[v]) C[v] += esum[medge(v, u)];
    }

    auto proj_resid = [&](const std::vector<cplx>& V) {
        double worst = 0;
        for (size_t e = 0; e < medial.edges.size(); ++e) {
            auto dir = observables::medial_line_direction(medial, (int)e);
            auto [v1, v2] = medial.edges[e];
            worst = std::max(worst, std::abs(std::real(std::conj(dir) * V[v1]) -
                                             std::real(std::conj(dir) * V[v2])));
        }
        return worst;
    };
    auto proj_vs_edge = [&](const std::vector<cplx>& V, double scale) {
        double worst = 0;
        for (size_t e = 0; e < medial.edges.size(); ++e) {
            auto dir = observables::medial_line_direction(medial, (int)e);
            auto [v1, v2] = medial.edges[e];
            double pe = std::real(std::conj(dir) * esum[e]);
            worst = std::max(worst, std::abs(std::real(std::conj(dir) * V[v1]) - scale * pe));
        }
        return worst;
    };
    auto cr_resid = [&](const std::vector<cplx>& V) {
        double worst = 0;
        for (size_t f = 0; f < medial.face_vertices.size(); ++f) {
            const auto& fv = medial.face_vertices[f];
            if (fv.size() != 4) continue;
            bool interior = true;
            for (int e : medial.face_edges[f]) {
                auto [f0, f1] = medial.edge_faces[e];
                if (f0 < 0 || f1 < 0) interior = false;
            }
            if (!interior) continue;
            worst = std::max(worst, std::abs(V[fv[3]] - V[fv[1]] -
                                             cplx(0, 1) * (V[fv[2]] - V[fv[0]])));
        }
        return worst;
    };

    const double inv2cos = 1.0 / (2.0 * std::cos(M_PI / 8));
    std::printf("A  : proj %.3e  cr %.3e  vs-edge(1) %.3e  vs-edge(2cos) %.3e\n", proj_resid(A),
                cr_resid(A), proj_vs_edge(A, 1.0), proj_vs_edge(A, 2.0 * std::cos(M_PI / 8)));
    std::printf("B(+own turn) : proj %.3e  cr %.3e  vs-edge(2cos) %.3e vs-edge(1) %.3e\n", proj_resid(B), cr_resid(B),
                proj_vs_edge(B, 2.0 * std::cos(M_PI / 8)), proj_vs_edge(B, 1.0));
    std::printf("Bm(-own turn): proj %.3e  cr %.3e  vs-edge(2cos) %.3e vs-edge(1) %.3e\n", proj_resid(Bm), cr_resid(Bm),
                proj_vs_edge(Bm, 2.0 * std::cos(M_PI / 8)), proj_vs_edge(Bm, 1.0));
    std::printf("C  : proj %.3e  cr %.3e  vs-edge(1) %.3e\n", proj_resid(C), cr_resid(C),
                proj_vs_edge(C, 1.0));
    std::printf("inv2cos=%.6f  2cos=%.6f\n", inv2cos, 2.0 * std::cos(M_PI / 8));

    // vertex relation: opposite-pair sums of the four edge values agree?
    double worst_pair = 0;
    std::vector<cplx> C2(NV);
    for (int v = 0; v < NV; ++v) {
        if (medial.nbr[v].size() != 4) continue;
        // classify the four neighbors by direction
        cplx ne{0,0}, nw{0,0}, se{0,0}, sw{0,0};
        for (int u : medial.nbr[v]) {
            cplx dvec = medial.pos[u] - medial.pos[v];
            cplx val = esum[medge(v, u)];
            if (dvec.real() > 0 && dvec.imag() > 0) ne = val;
            if (dvec.real() < 0 && dvec.imag() > 0) nw = val;
            if (dvec.real() > 0 && dvec.imag() < 0) se = val;
            if (dvec.real() < 0 && dvec.imag() < 0) sw = val;
        }
        worst_pair = std::max(worst_pair, std::abs(nw + se - ne - sw));
    }
    std::printf("vertex pair relation |F(nw)+F(se)-F(ne)-F(sw)|: %.3e\n", worst_pair);
    for (int v = 0; v < NV; ++v) {
        for (int u : medial.nbr[v]) C2[v] += esum[medge(v, u)];
        C2[v] *= 0.5;
    }
    std::printf("C2 : proj %.3e  cr %.3e  vs-edge(1) %.3e\n", proj_resid(C2), cr_resid(C2),
                proj_vs_edge(C2, 1.0));
    return 0;
}
