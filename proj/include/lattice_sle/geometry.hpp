#pragma once

#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "lattice_sle/errors.hpp"

namespace lsle::geometry {

using complex = std::complex<double>;

enum class LatticeKind { TriangularSite, SquareBond, Hexagonal, SquareMedial };
enum class Corner { SW = 0, SE = 1, NE = 2, NW = 3 };

const char* to_string(LatticeKind k);
const char* to_string(Corner c);
LatticeKind lattice_kind_from_string(const std::string& s);
Corner corner_from_string(const std::string& s);

struct LatticeSpec {
    LatticeKind kind = LatticeKind::TriangularSite;
    double mesh = 1.0;           // epsilon
    complex origin{0.0, 0.0};
    double orientation = 0.0;    // radians
};

// A lattice approximation of a simply connected domain with two marked
// boundary points and the Dobrushin arcs between them.
//
// Immutable after construction; all sampler/trace operations are pure
// functions over it, so instances are safe to share across threads.
struct DiscreteDomain {
    LatticeSpec lattice;

    std::vector<complex> pos;                   // vertex embedding
    std::vector<std::vector<int>> nbr;          // adjacency, ccw-sorted by angle
    std::vector<std::pair<int, int>> edges;     // u < v
    std::vector<std::array<int, 2>> vertex_edges_lookup_unused; // (reserved)

    // interior faces, each a ccw vertex cycle
    std::vector<std::vector<int>> face_vertices;
    std::vector<std::vector<int>> face_edges;   // edge ids, face_edges[f][i] joins fv[i], fv[i+1]
    std::vector<complex> face_center;
    std::vector<std::array<int, 2>> edge_faces; // adjacent interior faces, -1 = outer

    std::vector<int> boundary_cycle;            // ccw, no repeated endpoint
    int a = -1, b = -1;                         // marked boundary vertices
    std::vector<int> arc_ab;                    // ccw a..b inclusive
    std::vector<int> arc_ba;                    // ccw b..a inclusive

    // square-bond extras
    std::vector<std::uint8_t> edge_horizontal;  // per edge, local frame

    // medial extras (kind == SquareMedial)
    std::shared_ptr<const DiscreteDomain> primal;  // the square-bond domain
    std::vector<int> medial_vertex_primal_edge;    // identity mapping
    std::vector<std::uint8_t> face_black;          // medial face colors

    // local-frame rectangle extents (before origin/orientation transform)
    double width = 0, height = 0;

    int edge_index(int u, int v) const;         // -1 if absent
    bool on_arc_ab(int v) const;                // membership incl. endpoints
    bool on_arc_ba(int v) const;
    int degree(int v) const { return static_cast<int>(nbr[v].size()); }

    // Half-open Dobrushin coloring: arc_ab \ {b} gets the ab-state, the rest
    // of the boundary gets the ba-state. Yields exactly one color transition
    // adjacent to each marked point.
    bool site_state_ab(int v) const;            // true if v takes the arc_ab state

    std::vector<std::uint8_t> is_boundary;      // per vertex
};

DiscreteDomain build_rectangle_domain(const LatticeSpec& lattice, double width, double height,
                                      Corner a_corner, Corner b_corner);

// Low-level square-bond constructor by cell counts (down to 1x1); used for
// the small enumerable Dobrushin domains that the exact fermionic machinery
// runs on, where the 4-mesh-unit floor of build_rectangle_domain would be
// too coarse.
DiscreteDomain build_square_domain_cells(int nx, int ny, double mesh, Corner a_corner,
                                         Corner b_corner);

// Medial (square) lattice of a square-bond domain: one vertex per primal edge,
// edges between consecutive primal edges around each interior face. The
// marked points are the source/sink medial vertices: the midpoints of the
// arc_ba boundary edges incident to a and b (our convention; the chord of the
// loop representation starts and ends there).
DiscreteDomain medial_graph(const DiscreteDomain& domain);

// ---------------------------------------------------------------------------
// Conformal maps

struct ConformalMap {
    enum class Tag { RectToHalfplane, HalfplaneToStrip, HalfplaneNormalized };
    Tag domain_tag;
    std::function<complex(complex)> evaluation;
    std::function<complex(complex)> derivative;
};

// Rectangle [0,aspect] x [0,1] -> upper half-plane, a_corner -> 0,
// b_corner -> infinity. Jacobi sn via theta series with the nome
// q = exp(-2 pi / aspect); complete integral K cross-checked against
// AGM iteration at 1e-12.
struct RectHalfplaneMap {
    double aspect;
    double modulus_k;
    double K, Kprime;
    double nome;
    std::array<double, 4> corner_sn;   // sn images of SW,SE,NE,NW (pre-Moebius)
    Corner corner_a, corner_b;
    double sn_a, sn_b;                 // Moebius parameters

    complex sn(complex u) const;       // Jacobi sn with modulus_k
    complex sn_deriv(complex u) const; // cn * dn
    complex map(complex z) const;      // full rectangle -> half-plane, a->0, b->inf
    complex dmap(complex z) const;
    double corner_image(Corner c) const;  // Moebius image (b -> inf not allowed)

    ConformalMap as_conformal_map() const;
};

RectHalfplaneMap rect_to_halfplane(double aspect, Corner a_corner, Corner b_corner);

// Strip map derivative: Phi(z) = log(z)/pi sends C+ to R x [0,1] with
// 0 -> -inf, inf -> +inf; Phi'(z) = 1/(pi z).
complex phi_prime(complex z);

// Half-plane self map with a=0 -> inf, b_image -> 0: Psi(z) = (z - b)/z up to
// scale; Psi'(z) = b / z^2.
complex psi_prime(complex z, double b_image);

// Arithmetic-geometric mean, fixed tolerance 1e-12.
double agm(double x, double y);

complex rotate(complex z, double angle);

} // namespace lsle::geometry
