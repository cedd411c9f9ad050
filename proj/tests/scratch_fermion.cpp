// development probe: per-edge winding structure of the fermionic observable
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
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
    auto d = build_square_domain_cells(2, 2, 1.0, Corner::NW, Corner::SE);
    auto st = classify_fk_edges(d);
    auto medial = medial_graph(d);
    const double q = 2.0, rq = std::sqrt(q);
    const double theta = 4.0 * coulomb_k(q) - 1.0; // -1/2

    // medial edge lookup
    auto medge = [&](int u, int v) {
        for (size_t e = 0; e < medial.edges.size(); ++e) {
            auto [x, y] = medial.edges[e];
            if ((x == u && y == v) || (x == v && y == u)) return (int)e;
        }
        return -1;
    };

    struct Acc {
        double z = 0;
        std::map<int, std::vector<std::pair<double, double>>> windings; // edge -> (w, weight)
        std::map<int, std::vector<std::pair<double, double>>> vwind;    // vertex -> (w, weight)
    } acc;

    BondConfig cfg;
    cfg.domain = &d;
    for (std::uint64_t mask = 0; mask < (1ULL << st.free_edges.size()); ++mask) {
        cfg.state.assign(d.edges.size(), EdgeState::Closed);
        for (size_t e = 0; e < d.edges.size(); ++e)
            if (st.cls[e] == EdgeClass::FixedOpen) cfg.state[e] = EdgeState::Open;
        for (size_t i = 0; i < st.free_edges.size(); ++i)
            if (mask & (1ULL << i)) cfg.state[st.free_edges[i]] = EdgeState::Open;
        int loops = medial_census(cfg).n_loops;
        double weight = std::pow(rq, loops);
        acc.z += weight;
        auto chord = trace_fk_chord(cfg);
        const auto& vs = chord.vertices;
        const auto& turns = chord.curve.turns;
        const size_t M = vs.size();
        std::vector<double> w(M, 0.0);
        double suffix = 0;
        for (size_t i = M - 1; i-- > 0;) {
            suffix += turns[i + 1];
            w[i] = -suffix; // reversed-traversal winding from b
        }
        for (size_t i = 0; i + 1 < M; ++i)
            acc.windings[medge(vs[i], vs[i + 1])].push_back({w[i], weight});
        for (size_t i = 0; i < M; ++i) acc.vwind[vs[i]].push_back({w[i], weight});
    }

    std::printf("theta = %.4f, Z = %.6f\n", theta, acc.z);
    std::printf("== edges: windings seen (w/pi), raw value, line angle/pi ==\n");
    for (auto& [e, ws] : acc.windings) {
        auto [v1, v2] = medial.edges[e];
        cplx mid = 0.5 * (medial.pos[v1] + medial.pos[v2]);
        cplx val{0, 0};
        std::set<double> wset;
        for (auto [w, wt] : ws) {
            val += wt * std::polar(1.0, theta * w);
            wset.insert(w / M_PI);
        }
        val /= acc.z;
        auto dir = observables::medial_line_direction(medial, e);
        std::printf("edge %2d mid(%.1f,%.1f): |F|=%.4f argF/pi=%+.4f line/pi=%+.4f windings:", e,
                    mid.real(), mid.imag(), std::abs(val), std::arg(val) / M_PI,
                    std::arg(dir) / M_PI);
        for (double w : wset) std::printf(" %+.2f", w);
        std::printf("\n");
    }
    std::printf("== vertices ==\n");
    for (auto& [v, ws] : acc.vwind) {
        cplx val{0, 0};
        std::set<double> wset;
        for (auto [w, wt] : ws) {
            val += wt * std::polar(1.0, theta * w);
            wset.insert(w / M_PI);
        }
        val /= acc.z;
        std::printf("vertex %2d (%.1f,%.1f): |F|=%.4f argF/pi=%+.4f windings:", v,
                    medial.pos[v].real(), medial.pos[v].imag(), std::abs(val),
                    std::arg(val) / M_PI);
        for (double w : wset) std::printf(" %+.2f", w);
        std::printf("\n");
    }
    return 0;
}
