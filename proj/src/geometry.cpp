#include "lattice_sle/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <unordered_map>

namespace lsle::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

// integer lattice key for vertex dedup
std::uint64_t ikey(int i, int j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
}

std::uint64_t ekey(int u, int v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
}

} // namespace

const char* to_string(LatticeKind k) {
    switch (k) {
        case LatticeKind::TriangularSite: return "triangular-site";
        case LatticeKind::SquareBond: return "square-bond";
        case LatticeKind::Hexagonal: return "hexagonal";
        case LatticeKind::SquareMedial: return "square-medial";
    }
    return "?";
}

const char* to_string(Corner c) {
    switch (c) {
        case Corner::SW: return "sw";
        case Corner::SE: return "se";
        case Corner::NE: return "ne";
        case Corner::NW: return "nw";
    }
    return "?";
}

LatticeKind lattice_kind_from_string(const std::string& s) {
    if (s == "triangular-site") return LatticeKind::TriangularSite;
    if (s == "square-bond") return LatticeKind::SquareBond;
    if (s == "hexagonal") return LatticeKind::Hexagonal;
    if (s == "square-medial") return LatticeKind::SquareMedial;
    throw parameter_error("unknown lattice kind: " + s);
}

Corner corner_from_string(const std::string& s) {
    if (s == "sw") return Corner::SW;
    if (s == "se") return Corner::SE;
    if (s == "ne") return Corner::NE;
    if (s == "nw") return Corner::NW;
    throw parameter_error("unknown corner: " + s);
}

complex rotate(complex z, double angle) {
    return z * std::polar(1.0, angle);
}

int DiscreteDomain::edge_index(int u, int v) const {
    // linear scan over the shorter adjacency; domains are sparse
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        auto [x, y] = edges[e];
        if ((x == u && y == v) || (x == v && y == u)) return e;
    }
    return -1;
}

bool DiscreteDomain::on_arc_ab(int v) const {
    return std::find(arc_ab.begin(), arc_ab.end(), v) != arc_ab.end();
}

bool DiscreteDomain::on_arc_ba(int v) const {
    return std::find(arc_ba.begin(), arc_ba.end(), v) != arc_ba.end();
}

bool DiscreteDomain::site_state_ab(int v) const {
    if (v == b) return false;
    if (v == a) return true;
    return on_arc_ab(v);
}

namespace {

struct Builder {
    std::vector<complex> pos;
    std::vector<std::vector<int>> nbr;

    int add_vertex(complex p) {
        pos.push_back(p);
        nbr.emplace_back();
        return static_cast<int>(pos.size()) - 1;
    }

    void add_edge(int u, int v) {
        nbr[u].push_back(v);
        nbr[v].push_back(u);
    }
};

// Iteratively remove degree<=1 vertices (dangling lattice whiskers at the
// rectangle boundary), then compact indices.
void prune_and_compact(Builder& b) {
    size_t n = b.pos.size();
    std::vector<char> alive(n, 1);
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t v = 0; v < n; ++v) {
            if (!alive[v]) continue;
            int deg = 0;
            for (int w : b.nbr[v])
                if (alive[w]) ++deg;
            if (deg <= 1) {
                alive[v] = 0;
                changed = true;
            }
        }
    }
    std::vector<int> remap(n, -1);
    int m = 0;
    for (size_t v = 0; v < n; ++v)
        if (alive[v]) remap[v] = m++;
    Builder c;
    c.pos.resize(m);
    c.nbr.resize(m);
    for (size_t v = 0; v < n; ++v) {
        if (!alive[v]) continue;
        c.pos[remap[v]] = b.pos[v];
        for (int w : b.nbr[v])
            if (alive[w] && remap[w] > remap[v]) {
                c.nbr[remap[v]].push_back(remap[w]);
                c.nbr[remap[w]].push_back(remap[v]);
            }
    }
    b = std::move(c);
}

// Sort adjacency counterclockwise and extract planar faces. Interior faces
// come out ccw (positive area); the outer face is the unique negative-area
// one, traversed cw, which reversed gives the ccw boundary cycle. Medial
// graphs of one-cell-wide strips have cut vertices on the outer walk, so the
// simplicity requirement can be waived for them.
void finalize_topology(DiscreteDomain& d, bool allow_nonsimple_boundary = false) {
    const size_t n = d.pos.size();
    if (n < 3) throw degenerate_domain_error("domain has fewer than 3 vertices");

    for (size_t v = 0; v < n; ++v) {
        auto& lst = d.nbr[v];
        std::sort(lst.begin(), lst.end(), [&](int x, int y) {
            complex dx = d.pos[x] - d.pos[v], dy = d.pos[y] - d.pos[v];
            return std::atan2(dx.imag(), dx.real()) < std::atan2(dy.imag(), dy.real());
        });
    }

    // edges
    d.edges.clear();
    std::unordered_map<std::uint64_t, int> eid;
    for (int v = 0; v < static_cast<int>(n); ++v)
        for (int w : d.nbr[v])
            if (w > v) {
                eid[ekey(v, w)] = static_cast<int>(d.edges.size());
                d.edges.emplace_back(v, w);
            }

    // half-edge face traversal: next(u->v) = (v->w) where w precedes u in the
    // ccw order around v
    auto next_he = [&](int u, int v) -> std::pair<int, int> {
        const auto& lst = d.nbr[v];
        int idx = -1;
        for (size_t i = 0; i < lst.size(); ++i)
            if (lst[i] == u) { idx = static_cast<int>(i); break; }
        int w = lst[(idx + lst.size() - 1) % lst.size()];
        return {v, w};
    };

    std::unordered_map<std::uint64_t, char> used; // directed half-edge key
    auto hkey = [](int u, int v) {
        return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
    };

    d.face_vertices.clear();
    d.face_edges.clear();
    d.face_center.clear();
    std::vector<std::vector<int>> raw_faces;
    std::vector<double> raw_area;
    for (int v = 0; v < static_cast<int>(n); ++v) {
        for (int w : d.nbr[v]) {
            if (used.count(hkey(v, w))) continue;
            std::vector<int> cycle;
            int cu = v, cv = w;
            double area2 = 0;
            while (!used.count(hkey(cu, cv))) {
                used[hkey(cu, cv)] = 1;
                cycle.push_back(cu);
                area2 += d.pos[cu].real() * d.pos[cv].imag() - d.pos[cv].real() * d.pos[cu].imag();
                auto [nu, nv] = next_he(cu, cv);
                cu = nu;
                cv = nv;
            }
            raw_faces.push_back(std::move(cycle));
            raw_area.push_back(area2 / 2);
        }
    }

    int outer = -1;
    for (size_t f = 0; f < raw_faces.size(); ++f)
        if (raw_area[f] < 0) {
            if (outer >= 0) throw degenerate_domain_error("domain is not simply connected");
            outer = static_cast<int>(f);
        }
    if (outer < 0) throw degenerate_domain_error("no outer face found");

    d.edge_faces.assign(d.edges.size(), {-1, -1});
    for (size_t f = 0; f < raw_faces.size(); ++f) {
        if (static_cast<int>(f) == outer) continue;
        const auto& cyc = raw_faces[f];
        int id = static_cast<int>(d.face_vertices.size());
        complex c{0, 0};
        std::vector<int> fes;
        for (size_t i = 0; i < cyc.size(); ++i) {
            int u = cyc[i], v2 = cyc[(i + 1) % cyc.size()];
            c += d.pos[u];
            int e = eid.at(ekey(u, v2));
            fes.push_back(e);
            if (d.edge_faces[e][0] < 0)
                d.edge_faces[e][0] = id;
            else
                d.edge_faces[e][1] = id;
        }
        d.face_center.push_back(c / static_cast<double>(cyc.size()));
        d.face_vertices.push_back(cyc);
        d.face_edges.push_back(std::move(fes));
    }

    // boundary: outer face reversed
    d.boundary_cycle.assign(raw_faces[outer].rbegin(), raw_faces[outer].rend());
    if (!allow_nonsimple_boundary) {
        std::vector<char> seen(n, 0);
        for (int v : d.boundary_cycle) {
            if (seen[v]) throw degenerate_domain_error("boundary cycle is not simple");
            seen[v] = 1;
        }
    }
    d.is_boundary.assign(n, 0);
    for (int v : d.boundary_cycle) d.is_boundary[v] = 1;

    if (d.face_vertices.empty())
        throw degenerate_domain_error("rectangle too small to contain an interior face");
}

// Nearest boundary vertex to a target point; ties toward smaller cycle index.
int snap_to_boundary(const DiscreteDomain& d, complex target) {
    int best = -1;
    double bd = 0;
    for (size_t i = 0; i < d.boundary_cycle.size(); ++i) {
        int v = d.boundary_cycle[i];
        double dist = std::abs(d.pos[v] - target);
        if (best < 0 || dist < bd - 1e-12) {
            best = static_cast<int>(i);
            bd = dist;
        }
    }
    return best;
}

void assign_arcs(DiscreteDomain& d, int ia, int ib) {
    const auto& cyc = d.boundary_cycle;
    const int m = static_cast<int>(cyc.size());
    d.a = cyc[ia];
    d.b = cyc[ib];
    if (d.a == d.b) throw degenerate_domain_error("marked points snapped to the same vertex");
    d.arc_ab.clear();
    d.arc_ba.clear();
    for (int i = ia;; i = (i + 1) % m) {
        d.arc_ab.push_back(cyc[i]);
        if (i == ib) break;
    }
    for (int i = ib;; i = (i + 1) % m) {
        d.arc_ba.push_back(cyc[i]);
        if (i == ia) break;
    }
}

complex corner_point(Corner c, double w, double h) {
    switch (c) {
        case Corner::SW: return {0, 0};
        case Corner::SE: return {w, 0};
        case Corner::NE: return {w, h};
        case Corner::NW: return {0, h};
    }
    return {0, 0};
}

} // namespace

DiscreteDomain build_rectangle_domain(const LatticeSpec& lattice, double width, double height,
                                      Corner a_corner, Corner b_corner) {
    if (lattice.mesh <= 0) throw parameter_error("mesh must be positive");
    if (a_corner == b_corner) throw parameter_error("a_corner and b_corner must differ");
    if (width < 4 * lattice.mesh || height < 4 * lattice.mesh)
        throw degenerate_domain_error("rectangle smaller than 4 mesh units");

    const double eps = lattice.mesh;
    const double tol = 1e-9 * eps;
    Builder bld;
    std::unordered_map<std::uint64_t, int> vid;

    auto inside = [&](complex p) {
        return p.real() >= -tol && p.real() <= width + tol && p.imag() >= -tol &&
               p.imag() <= height + tol;
    };

    switch (lattice.kind) {
        case LatticeKind::SquareBond: {
            int nx = static_cast<int>(std::floor(width / eps + tol));
            int ny = static_cast<int>(std::floor(height / eps + tol));
            for (int j = 0; j <= ny; ++j)
                for (int i = 0; i <= nx; ++i)
                    vid[ikey(i, j)] = bld.add_vertex({i * eps, j * eps});
            for (int j = 0; j <= ny; ++j)
                for (int i = 0; i <= nx; ++i) {
                    if (i < nx) bld.add_edge(vid[ikey(i, j)], vid[ikey(i + 1, j)]);
                    if (j < ny) bld.add_edge(vid[ikey(i, j)], vid[ikey(i, j + 1)]);
                }
            break;
        }
        case LatticeKind::TriangularSite: {
            // v(i,j) = (i + j/2, j*sqrt(3)/2) * eps
            const double rt3h = std::sqrt(3.0) / 2.0;
            int jmax = static_cast<int>(std::floor(height / (eps * rt3h) + tol));
            for (int j = 0; j <= jmax; ++j) {
                double y = j * rt3h * eps;
                for (int i = -(j + 1) / 2 - 1;; ++i) {
                    double x = (i + j * 0.5) * eps;
                    if (x < -tol) continue;
                    if (x > width + tol) break;
                    vid[ikey(i, j)] = bld.add_vertex({x, y});
                }
            }
            for (auto& [key, v] : vid) {
                int i = static_cast<int>(static_cast<std::int64_t>(key) >> 32);
                int j = static_cast<int>(static_cast<std::uint32_t>(key));
                auto link = [&](int di, int dj) {
                    auto it = vid.find(ikey(i + di, j + dj));
                    if (it != vid.end()) bld.add_edge(v, it->second);
                };
                link(1, 0);
                link(0, 1);
                link(-1, 1);
            }
            break;
        }
        case LatticeKind::Hexagonal: {
            // honeycomb as the dual of a triangular lattice with step eps*sqrt(3):
            // vertices at triangle centroids, edges between adjacent triangles
            const double s = eps * std::sqrt(3.0);
            const double rt3h = std::sqrt(3.0) / 2.0;
            auto tri_pos = [&](int i, int j) { return complex((i + j * 0.5) * s, j * rt3h * s); };
            // up triangle U(i,j): v(i,j), v(i+1,j), v(i,j+1); down D(i,j): v(i+1,j), v(i,j+1), v(i+1,j+1)
            auto up_center = [&](int i, int j) {
                return (tri_pos(i, j) + tri_pos(i + 1, j) + tri_pos(i, j + 1)) / 3.0;
            };
            auto down_center = [&](int i, int j) {
                return (tri_pos(i + 1, j) + tri_pos(i, j + 1) + tri_pos(i + 1, j + 1)) / 3.0;
            };
            int range = static_cast<int>((width + height) / s) + 4;
            std::unordered_map<std::uint64_t, int> uid, did;
            for (int j = -range; j <= range; ++j)
                for (int i = -range; i <= range; ++i) {
                    complex cu = up_center(i, j);
                    if (inside(cu)) uid[ikey(i, j)] = bld.add_vertex(cu);
                    complex cd = down_center(i, j);
                    if (inside(cd)) did[ikey(i, j)] = bld.add_vertex(cd);
                }
            // adjacency: U(i,j) ~ D(i,j) (shared edge v(i+1,j)-v(i,j+1)),
            // U(i,j) ~ D(i-1,j) (shared v(i,j)-v(i,j+1)), U(i,j) ~ D(i,j-1) (shared v(i,j)-v(i+1,j))
            for (auto& [key, v] : uid) {
                int i = static_cast<int>(static_cast<std::int64_t>(key) >> 32);
                int j = static_cast<int>(static_cast<std::uint32_t>(key));
                auto link = [&](int di, int dj) {
                    auto it = did.find(ikey(i + di, j + dj));
                    if (it != did.end()) bld.add_edge(v, it->second);
                };
                link(0, 0);
                link(-1, 0);
                link(0, -1);
            }
            break;
        }
        case LatticeKind::SquareMedial:
            throw unsupported_lattice_error("square-medial domains are built via medial_graph");
    }

    prune_and_compact(bld);
    if (bld.pos.empty()) throw degenerate_domain_error("no lattice vertices inside rectangle");

    DiscreteDomain d;
    d.lattice = lattice;
    d.width = width;
    d.height = height;
    d.pos = std::move(bld.pos);
    d.nbr = std::move(bld.nbr);
    finalize_topology(d);

    if (lattice.kind == LatticeKind::SquareBond) {
        d.edge_horizontal.resize(d.edges.size());
        for (size_t e = 0; e < d.edges.size(); ++e) {
            auto [u, v] = d.edges[e];
            d.edge_horizontal[e] =
                std::abs((d.pos[u] - d.pos[v]).imag()) < 1e-9 ? 1 : 0;
        }
    }

    int ia = snap_to_boundary(d, corner_point(a_corner, width, height));
    int ib = snap_to_boundary(d, corner_point(b_corner, width, height));

    if (lattice.kind == LatticeKind::Hexagonal) {
        // hex snapping rule: advance to the nearest boundary vertex carrying an
        // interior edge, so the explorer can start/terminate there
        auto has_interior_edge = [&](int v) {
            for (int w : d.nbr[v])
                if (!d.is_boundary[w]) return true;
            // an edge between two boundary vertices that is not a boundary-cycle
            // edge also counts (cut across a notch); rare, ignore
            return false;
        };
        auto adjust = [&](int idx) {
            const int m = static_cast<int>(d.boundary_cycle.size());
            for (int off = 0; off < m; ++off) {
                for (int sgn : {+1, -1}) {
                    int i = ((idx + sgn * off) % m + m) % m;
                    if (has_interior_edge(d.boundary_cycle[i])) return i;
                }
            }
            throw degenerate_domain_error("no boundary vertex with interior edge");
        };
        ia = adjust(ia);
        ib = adjust(ib);
    }
    if (ia == ib) throw degenerate_domain_error("marked corners collapse to one vertex");
    assign_arcs(d, ia, ib);

    if (lattice.orientation != 0.0 || lattice.origin != complex{0, 0}) {
        for (auto& p : d.pos) p = lattice.origin + rotate(p, lattice.orientation);
        for (auto& p : d.face_center) p = lattice.origin + rotate(p, lattice.orientation);
    }
    return d;
}

DiscreteDomain build_square_domain_cells(int nx, int ny, double mesh, Corner a_corner,
                                         Corner b_corner) {
    if (nx < 1 || ny < 1) throw degenerate_domain_error("need at least one cell");
    if (mesh <= 0) throw parameter_error("mesh must be positive");
    if (a_corner == b_corner) throw parameter_error("a_corner and b_corner must differ");

    DiscreteDomain d;
    d.lattice.kind = LatticeKind::SquareBond;
    d.lattice.mesh = mesh;
    d.width = nx * mesh;
    d.height = ny * mesh;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) d.pos.push_back({i * mesh, j * mesh});
    d.nbr.assign(d.pos.size(), {});
    auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            if (i < nx) {
                d.nbr[vid(i, j)].push_back(vid(i + 1, j));
                d.nbr[vid(i + 1, j)].push_back(vid(i, j));
            }
            if (j < ny) {
                d.nbr[vid(i, j)].push_back(vid(i, j + 1));
                d.nbr[vid(i, j + 1)].push_back(vid(i, j));
            }
        }
    finalize_topology(d);
    d.edge_horizontal.resize(d.edges.size());
    for (size_t e = 0; e < d.edges.size(); ++e) {
        auto [u, v] = d.edges[e];
        d.edge_horizontal[e] = std::abs((d.pos[u] - d.pos[v]).imag()) < 1e-9 ? 1 : 0;
    }
    int ia = snap_to_boundary(d, corner_point(a_corner, d.width, d.height));
    int ib = snap_to_boundary(d, corner_point(b_corner, d.width, d.height));
    assign_arcs(d, ia, ib);
    return d;
}

DiscreteDomain medial_graph(const DiscreteDomain& domain) {
    if (domain.lattice.kind != LatticeKind::SquareBond)
        throw unsupported_lattice_error("medial_graph requires a square-bond domain");

    DiscreteDomain m;
    m.lattice = domain.lattice;
    m.lattice.kind = LatticeKind::SquareMedial;
    m.width = domain.width;
    m.height = domain.height;
    m.primal = std::make_shared<DiscreteDomain>(domain);

    const int ne = static_cast<int>(domain.edges.size());
    m.pos.resize(ne);
    m.nbr.assign(ne, {});
    m.medial_vertex_primal_edge.resize(ne);
    for (int e = 0; e < ne; ++e) {
        auto [u, v] = domain.edges[e];
        m.pos[e] = 0.5 * (domain.pos[u] + domain.pos[v]);
        m.medial_vertex_primal_edge[e] = e;
    }
    for (const auto& fes : domain.face_edges) {
        const size_t k = fes.size();
        for (size_t i = 0; i < k; ++i) {
            int e1 = fes[i], e2 = fes[(i + 1) % k];
            m.nbr[e1].push_back(e2);
            m.nbr[e2].push_back(e1);
        }
    }
    finalize_topology(m, true);

    // face colors: black if centered on a primal vertex
    m.face_black.assign(m.face_vertices.size(), 0);
    for (size_t f = 0; f < m.face_vertices.size(); ++f) {
        complex c = m.face_center[f];
        double best = 1e300;
        for (const auto& p : domain.pos) best = std::min(best, std::abs(p - c));
        m.face_black[f] = best < 0.25 * domain.lattice.mesh ? 1 : 0;
    }

    // marked medial vertices: midpoints of the arc_ba edges at a and b
    int ea = domain.edge_index(domain.arc_ba[domain.arc_ba.size() - 2], domain.a);
    int eb = domain.edge_index(domain.arc_ba[0], domain.arc_ba[1]);
    if (ea < 0 || eb < 0) throw degenerate_domain_error("missing arc_ba edges at marked points");

    int ia = -1, ib = -1;
    for (size_t i = 0; i < m.boundary_cycle.size(); ++i) {
        if (m.boundary_cycle[i] == ea) ia = static_cast<int>(i);
        if (m.boundary_cycle[i] == eb) ib = static_cast<int>(i);
    }
    if (ia < 0 || ib < 0) throw degenerate_domain_error("source/sink not on medial boundary");
    assign_arcs(m, ia, ib);
    return m;
}

// ---------------------------------------------------------------------------
// Elliptic machinery

double agm(double x, double y) {
    for (int it = 0; it < 64; ++it) {
        double ax = 0.5 * (x + y), gy = std::sqrt(x * y);
        x = ax;
        y = gy;
        if (std::abs(x - y) < 1e-12 * std::abs(x)) break;
    }
    return 0.5 * (x + y);
}

namespace {

// theta series; q real in (0,1), v complex. Truncated when terms drop below
// 1e-18 of the running scale.
complex theta1(complex v, double q) {
    complex s{0, 0};
    double qp = std::pow(q, 0.25);
    for (int n = 0;; ++n) {
        double coef = (n % 2 ? -2.0 : 2.0) * qp * std::pow(q, n * (n + 1));
        complex term = coef * std::sin((2.0 * n + 1.0) * v);
        s += term;
        if (n > 2 && std::abs(term) < 1e-18 * (1.0 + std::abs(s))) break;
        if (n > 64) break;
    }
    return s;
}

complex theta2(complex v, double q) {
    complex s{0, 0};
    double qp = std::pow(q, 0.25);
    for (int n = 0;; ++n) {
        double coef = 2.0 * qp * std::pow(q, n * (n + 1));
        complex term = coef * std::cos((2.0 * n + 1.0) * v);
        s += term;
        if (n > 2 && std::abs(term) < 1e-18 * (1.0 + std::abs(s))) break;
        if (n > 64) break;
    }
    return s;
}

complex theta3(complex v, double q) {
    complex s{1, 0};
    for (int n = 1;; ++n) {
        complex term = 2.0 * std::pow(q, n * n) * std::cos(2.0 * n * v);
        s += term;
        if (n > 2 && std::abs(term) < 1e-18 * (1.0 + std::abs(s))) break;
        if (n > 64) break;
    }
    return s;
}

complex theta4(complex v, double q) {
    complex s{1, 0};
    for (int n = 1;; ++n) {
        complex term = 2.0 * (n % 2 ? -1.0 : 1.0) * std::pow(q, n * n) * std::cos(2.0 * n * v);
        s += term;
        if (n > 2 && std::abs(term) < 1e-18 * (1.0 + std::abs(s))) break;
        if (n > 64) break;
    }
    return s;
}

} // namespace

complex RectHalfplaneMap::sn(complex u) const {
    complex v = kPi * u / (2.0 * K);
    double t2 = theta2(complex{0, 0}, nome).real();
    double t3 = theta3(complex{0, 0}, nome).real();
    return (t3 / t2) * theta1(v, nome) / theta4(v, nome);
}

complex RectHalfplaneMap::sn_deriv(complex u) const {
    complex v = kPi * u / (2.0 * K);
    double t2 = theta2(complex{0, 0}, nome).real();
    double t3 = theta3(complex{0, 0}, nome).real();
    double t4 = theta4(complex{0, 0}, nome).real();
    complex th4 = theta4(v, nome);
    complex cn = (t4 / t2) * theta2(v, nome) / th4;
    complex dn = (t4 / t3) * theta3(v, nome) / th4;
    return cn * dn;
}

complex RectHalfplaneMap::map(complex z) const {
    complex u = (2.0 * K / aspect) * z - K;
    complex s = sn(u);
    if (sn_b > sn_a) return (s - sn_a) / (sn_b - s);
    return (sn_a - s) / (s - sn_b);
}

complex RectHalfplaneMap::dmap(complex z) const {
    complex u = (2.0 * K / aspect) * z - K;
    complex s = sn(u);
    complex ds = sn_deriv(u) * (2.0 * K / aspect);
    double num = std::abs(sn_b - sn_a);
    return ds * num / ((sn_b - s) * (sn_b - s));
}

double RectHalfplaneMap::corner_image(Corner c) const {
    double s = corner_sn[static_cast<int>(c)];
    if (sn_b > sn_a) return (s - sn_a) / (sn_b - s);
    return (sn_a - s) / (s - sn_b);
}

ConformalMap RectHalfplaneMap::as_conformal_map() const {
    ConformalMap cm;
    cm.domain_tag = ConformalMap::Tag::RectToHalfplane;
    RectHalfplaneMap self = *this;
    cm.evaluation = [self](complex z) { return self.map(z); };
    cm.derivative = [self](complex z) { return self.dmap(z); };
    return cm;
}

RectHalfplaneMap rect_to_halfplane(double aspect, Corner a_corner, Corner b_corner) {
    if (!(aspect >= 0.1 && aspect <= 10.0))
        throw parameter_error("aspect outside [0.1, 10]");
    if (a_corner == b_corner) throw parameter_error("corners must differ");

    RectHalfplaneMap m;
    m.aspect = aspect;
    m.nome = std::exp(-2.0 * kPi / aspect);

    double t2 = theta2(complex{0, 0}, m.nome).real();
    double t3 = theta3(complex{0, 0}, m.nome).real();
    m.modulus_k = (t2 * t2) / (t3 * t3);
    m.K = 0.5 * kPi * t3 * t3;
    m.Kprime = 2.0 * m.K / aspect;

    // AGM cross-check of the complete integral; both routes agree to 1e-12
    double kp = std::sqrt(std::max(0.0, 1.0 - m.modulus_k * m.modulus_k));
    double K_agm = kPi / (2.0 * agm(1.0, kp));
    if (std::abs(K_agm - m.K) > 1e-9 * m.K)
        throw solver_error("elliptic K mismatch between theta and AGM", std::abs(K_agm - m.K));

    m.corner_sn = {-1.0, 1.0, 1.0 / m.modulus_k, -1.0 / m.modulus_k};
    m.corner_a = a_corner;
    m.corner_b = b_corner;
    m.sn_a = m.corner_sn[static_cast<int>(a_corner)];
    m.sn_b = m.corner_sn[static_cast<int>(b_corner)];
    return m;
}

complex phi_prime(complex z) {
    if (z.imag() <= 0.0)
        throw singular_evaluation_error("phi_prime requires Im z > 0");
    return 1.0 / (kPi * z);
}

complex psi_prime(complex z, double b_image) {
    if (z.imag() <= 0.0)
        throw singular_evaluation_error("psi_prime requires Im z > 0");
    return b_image / (z * z);
}

} // namespace lsle::geometry
