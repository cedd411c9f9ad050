#include "lattice_sle/interfaces.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace lsle::interfaces {

using models::EdgeClass;
using models::EdgeState;

namespace {

double cross(complex u, complex v) { return std::imag(std::conj(u) * v); }

double turn_angle(complex d1, complex d2) { return std::arg(d2 / d1); }

void fill_turns(InterfaceCurve& c) {
    const size_t m = c.points.size();
    c.turns.assign(m, 0.0);
    for (size_t i = 1; i + 1 < m; ++i)
        c.turns[i] = turn_angle(c.points[i] - c.points[i - 1], c.points[i + 1] - c.points[i]);
}

// transition edges next to the marked points under the half-open arc coloring
int entry_edge(const DiscreteDomain& d) {
    int prev_a = d.arc_ba[d.arc_ba.size() - 2];
    int e = d.edge_index(prev_a, d.a);
    if (e < 0) throw degenerate_domain_error("missing boundary edge at a");
    return e;
}

int exit_edge(const DiscreteDomain& d) {
    int prev_b = d.arc_ab[d.arc_ab.size() - 2];
    int e = d.edge_index(prev_b, d.b);
    if (e < 0) throw degenerate_domain_error("missing boundary edge at b");
    return e;
}

int interior_face_of(const DiscreteDomain& d, int edge) {
    auto [f0, f1] = d.edge_faces[edge];
    int f = f0 >= 0 ? f0 : f1;
    if (f < 0 || (f0 >= 0 && f1 >= 0))
        throw degenerate_domain_error("expected a boundary edge with one interior face");
    return f;
}

} // namespace

// ---------------------------------------------------------------------------
// Site-model explorer

SiteWalkLog run_site_walk_limited(const DiscreteDomain& domain,
                                  const std::function<std::int8_t(int)>& oracle,
                                  const SiteWalkState* resume, long max_steps) {
    if (domain.lattice.kind != geometry::LatticeKind::TriangularSite &&
        domain.lattice.kind != geometry::LatticeKind::SquareBond)
        throw unsupported_lattice_error("site walk needs a triangular-site or square-bond domain");

    SiteWalkLog log;
    log.curve.lattice_step = domain.lattice.mesh;
    SiteWalkState st;

    if (resume) {
        st = *resume;
        if (st.done) return log;
        log.curve.points.push_back(domain.face_center[st.cur_face]);
        log.faces.push_back(st.cur_face);
    } else {
        int e_a = entry_edge(domain);
        int f0 = interior_face_of(domain, e_a);
        auto [u, v] = domain.edges[e_a];
        complex mid = 0.5 * (domain.pos[u] + domain.pos[v]);
        complex dir = domain.face_center[f0] - mid;
        st.cur_face = f0;
        st.crossed_edge = e_a;
        st.left_site = cross(dir, domain.pos[u] - mid) > 0 ? u : v;
        st.right_site = st.left_site == u ? v : u;
        if (oracle(st.left_site) != -1 || oracle(st.right_site) != +1)
            throw invalid_configuration_error("Dobrushin boundary violated at a");
        log.curve.points.push_back(domain.face_center[f0]);
        log.faces.push_back(f0);
    }

    const int e_b = exit_edge(domain);
    const long step_cap = 4 * static_cast<long>(domain.edges.size()) + 16;
    long steps = 0;

    while (true) {
        if (max_steps >= 0 && steps >= max_steps) break;
        if (++steps > step_cap)
            throw invalid_configuration_error("interface walk exceeded step cap");

        const auto& fv = domain.face_vertices[st.cur_face];
        const int fs = static_cast<int>(fv.size());
        int exit_u = -1, exit_v = -1; // next crossed edge, (closed, open) roles set after
        int new_left = -1, new_right = -1;

        if (fs == 3) {
            int w = -1;
            for (int x : fv)
                if (x != st.left_site && x != st.right_site) w = x;
            std::int8_t cw = oracle(w);
            log.consulted_sites.push_back(w);
            if (cw == +1) {
                exit_u = st.left_site;
                exit_v = w;
                new_left = st.left_site;
                new_right = w;
            } else {
                exit_u = st.right_site;
                exit_v = w;
                new_left = w;
                new_right = st.right_site;
            }
        } else if (fs == 4) {
            // corners p (left rear), q (right rear), r (right front), s (left front)
            int ip = -1, iq = -1;
            for (int i = 0; i < 4; ++i) {
                if (fv[i] == st.left_site) ip = i;
                if (fv[i] == st.right_site) iq = i;
            }
            auto adj = [&](int i, int j) { return (i + 1) % 4 == j || (j + 1) % 4 == i; };
            if (ip < 0 || iq < 0 || !adj(ip, iq))
                throw invalid_configuration_error("walker lost in square face");
            int ir = -1, is = -1;
            for (int i = 0; i < 4; ++i) {
                if (i == ip || i == iq) continue;
                if (adj(i, iq)) ir = i;
                else is = i;
            }
            int r = fv[ir], s = fv[is];
            std::int8_t cr = oracle(r);
            log.consulted_sites.push_back(r);
            if (cr == -1) {
                // right turn; the consistent right-hand rule keeps the grey
                // cluster on the right when the diagonal is ambiguous
                exit_u = st.right_site;
                exit_v = r;
                new_left = r;
                new_right = st.right_site;
            } else {
                std::int8_t cs = oracle(s);
                log.consulted_sites.push_back(s);
                if (cs == -1) {
                    exit_u = r;
                    exit_v = s;
                    new_left = s;
                    new_right = r;
                } else {
                    exit_u = s;
                    exit_v = st.left_site;
                    new_left = st.left_site;
                    new_right = s;
                }
            }
        } else {
            throw unsupported_lattice_error("site walk supports size-3 and size-4 faces only");
        }

        int e_next = domain.edge_index(exit_u, exit_v);
        if (e_next < 0) throw invalid_configuration_error("exit edge missing");
        auto [f0, f1] = domain.edge_faces[e_next];
        int f_next = f0 == st.cur_face ? f1 : f0;

        st.crossed_edge = e_next;
        st.left_site = new_left;
        st.right_site = new_right;

        if (f_next < 0) {
            if (e_next != e_b)
                throw invalid_configuration_error("interface exited through a non-marked edge");
            st.done = true;
            break;
        }
        st.cur_face = f_next;
        log.curve.points.push_back(domain.face_center[f_next]);
        log.faces.push_back(f_next);
    }

    log.final_state = st;
    fill_turns(log.curve);
    return log;
}

SiteWalkLog run_site_walk(const DiscreteDomain& domain,
                          const std::function<std::int8_t(int)>& oracle,
                          const SiteWalkState* resume) {
    return run_site_walk_limited(domain, oracle, resume, -1);
}

// ---------------------------------------------------------------------------
// FK medial machinery

namespace {

struct Slot {
    int face; // -1 = outer
    int vtx;
};

// the other edge of `face` incident to `vtx`
int other_edge_at(const DiscreteDomain& d, int face, int vtx, int edge) {
    const auto& fes = d.face_edges[face];
    for (int e : fes) {
        if (e == edge) continue;
        auto [u, v] = d.edges[e];
        if (u == vtx || v == vtx) return e;
    }
    throw invalid_configuration_error("face corner without a second edge");
}

int other_face(const DiscreteDomain& d, int edge, int face) {
    auto [f0, f1] = d.edge_faces[edge];
    return f0 == face ? f1 : f0;
}

// pairing of medial slots at medial vertex `e`: strands never cross an open
// primal edge (pair within a face) nor the dual of a closed one (pair within
// an endpoint)
Slot partner_slot(const DiscreteDomain& d, int e, EdgeState state, Slot s) {
    auto [u, v] = d.edges[e];
    if (state == EdgeState::Open) return Slot{s.face, s.vtx == u ? v : u};
    return Slot{other_face(d, e, s.face), s.vtx};
}

struct FkEndpoints {
    int e_source, e_sink;
    int f_source, f_sink;
};

FkEndpoints fk_endpoints(const DiscreteDomain& d) {
    FkEndpoints ep;
    ep.e_source = d.edge_index(d.arc_ba[d.arc_ba.size() - 2], d.a);
    ep.e_sink = d.edge_index(d.arc_ba[0], d.arc_ba[1]);
    if (ep.e_source < 0 || ep.e_sink < 0)
        throw degenerate_domain_error("missing arc_ba edges at marked points");
    ep.f_source = interior_face_of(d, ep.e_source);
    ep.f_sink = interior_face_of(d, ep.e_sink);
    return ep;
}

void check_fk_dobrushin(const BondConfig& cfg) {
    const auto& d = *cfg.domain;
    auto st = models::classify_fk_edges(d);
    for (size_t e = 0; e < d.edges.size(); ++e) {
        if (st.cls[e] == EdgeClass::FixedOpen && cfg.state[e] != EdgeState::Open)
            throw invalid_configuration_error("wired arc edge is closed");
        if (st.cls[e] == EdgeClass::FixedClosed && cfg.state[e] != EdgeState::Closed)
            throw invalid_configuration_error("dual-wired arc edge is open");
    }
}

} // namespace

std::pair<int, int> medial_exit_slot(const DiscreteDomain& domain, int vertex,
                                     models::EdgeState state, int arrival_face, int arrival_vtx) {
    Slot p = partner_slot(domain, vertex, state, Slot{arrival_face, arrival_vtx});
    return {p.face, p.vtx};
}

MedialChord trace_fk_chord(const BondConfig& config, const MedialStart* start) {
    const auto& d = *config.domain;
    if (d.lattice.kind != geometry::LatticeKind::SquareBond)
        throw unsupported_lattice_error("FK trace needs a square-bond domain");
    check_fk_dobrushin(config);

    auto ep = fk_endpoints(d);
    auto mid = [&](int e) {
        auto [u, v] = d.edges[e];
        return 0.5 * (d.pos[u] + d.pos[v]);
    };

    MedialChord out;
    out.curve.lattice_step = d.lattice.mesh;

    int cur = start ? start->vertex : ep.e_source;
    Slot s = start ? Slot{start->face, start->vtx} : Slot{ep.f_source, d.a};
    out.vertices.push_back(cur);
    out.curve.points.push_back(mid(cur));
    out.exit_slots.emplace_back(s.face, s.vtx);

    const long cap = 8 * static_cast<long>(d.edges.size()) + 16;
    long steps = 0;
    while (true) {
        if (++steps > cap) throw invalid_configuration_error("medial walk exceeded step cap");
        int nxt = other_edge_at(d, s.face, s.vtx, cur);
        cur = nxt;
        out.vertices.push_back(cur);
        out.curve.points.push_back(mid(cur));
        Slot p = partner_slot(d, cur, config.state[cur], s);
        if (p.face < 0) {
            out.exit_slots.emplace_back(-1, p.vtx);
            if (cur == ep.e_sink && p.vtx == d.b) break;
            throw invalid_configuration_error("medial walk hit a dangling slot away from b");
        }
        out.exit_slots.emplace_back(p.face, p.vtx);
        s = p;
    }
    fill_turns(out.curve);
    return out;
}

MedialCensus medial_census(const BondConfig& config) {
    const auto& d = *config.domain;
    if (d.lattice.kind != geometry::LatticeKind::SquareBond)
        throw unsupported_lattice_error("medial census needs a square-bond domain");
    check_fk_dobrushin(config);
    auto ep = fk_endpoints(d);

    // medial edges keyed by (face, corner vertex)
    struct MEdge {
        int face, vtx, e1, e2;
        bool used = false;
    };
    std::vector<MEdge> medges;
    std::map<std::pair<int, int>, int> mindex; // (face, vtx) -> medial edge id
    for (int f = 0; f < static_cast<int>(d.face_vertices.size()); ++f) {
        const auto& fv = d.face_vertices[f];
        const auto& fe = d.face_edges[f];
        const int k = static_cast<int>(fv.size());
        for (int i = 0; i < k; ++i) {
            // corner at fv[(i+1)%k] joins fe[i] and fe[(i+1)%k]
            int w = fv[(i + 1) % k];
            mindex[{f, w}] = static_cast<int>(medges.size());
            medges.push_back({f, w, fe[i], fe[(i + 1) % k], false});
        }
    }

    MedialCensus census;
    for (auto& me : medges) {
        if (me.used) continue;
        // traverse the strand containing this medial edge in both directions
        std::vector<int> verts;
        bool is_loop = false;
        bool touches_source = false, touches_sink = false;

        auto walk = [&](int start_vertex, Slot slot, std::vector<int>& acc) {
            int cur = start_vertex;
            while (true) {
                Slot p = partner_slot(d, cur, config.state[cur], slot);
                if (p.face < 0) {
                    if (cur == ep.e_source && p.vtx == d.a) touches_source = true;
                    if (cur == ep.e_sink && p.vtx == d.b) touches_sink = true;
                    return false; // open end
                }
                int nxt = other_edge_at(d, p.face, p.vtx, cur);
                auto it = mindex.find({p.face, p.vtx});
                MEdge& used_edge = medges[it->second];
                if (used_edge.used) return true; // closed up
                used_edge.used = true;
                acc.push_back(nxt);
                cur = nxt;
                slot = p;
            }
        };

        me.used = true;
        std::vector<int> fwd{me.e1, me.e2}, bwd;
        // forward: arrived at e2 via slot (face, vtx)
        bool closed_f = walk(me.e2, Slot{me.face, me.vtx}, fwd);
        if (closed_f && fwd.front() == fwd.back()) fwd.pop_back();
        if (closed_f) {
            verts = fwd;
            is_loop = true;
        } else {
            // backwards from e1
            bool closed_b = walk(me.e1, Slot{me.face, me.vtx}, bwd);
            (void)closed_b;
            verts.assign(bwd.rbegin(), bwd.rend());
            verts.insert(verts.end(), fwd.begin(), fwd.end());
        }

        if (is_loop) {
            census.loops.push_back(std::move(verts));
        } else if (touches_source && touches_sink) {
            census.chord = std::move(verts);
        } else {
            census.arcs.push_back(std::move(verts));
        }
    }
    census.n_loops = static_cast<int>(census.loops.size());
    return census;
}

// ---------------------------------------------------------------------------
// Spec operations

InterfaceCurve trace_interface(const SiteColoring& config) {
    const auto& d = *config.domain;
    for (int v : d.boundary_cycle)
        if (config.color[v] != (d.site_state_ab(v) ? +1 : -1))
            throw invalid_configuration_error("Dobrushin boundary coloring violated");
    auto oracle = [&](int s) { return config.color[s]; };
    return run_site_walk(d, oracle).curve;
}

InterfaceCurve trace_interface(const BondConfig& config) {
    return trace_fk_chord(config).curve;
}

InterfaceCurve trace_interface(const LoopConfig& config) {
    const auto& d = *config.domain;
    InterfaceCurve c;
    c.lattice_step = d.lattice.mesh;
    for (int v : config.chord) c.points.push_back(d.pos[v]);
    fill_turns(c);
    return c;
}

double winding(const InterfaceCurve& curve, std::size_t upto) {
    if (upto >= curve.points.size()) throw parameter_error("winding index out of range");
    double w = 0;
    for (size_t j = upto + 1; j + 1 < curve.points.size(); ++j) w += curve.turns[j];
    return w;
}

int count_loops(const BondConfig& config) { return medial_census(config).n_loops; }

int count_loops(const LoopConfig& config) { return static_cast<int>(config.loops.size()); }

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int x, int y) { parent[find(x)] = find(y); }
};

} // namespace

int euler_loop_count(const BondConfig& config) {
    const auto& d = *config.domain;
    const int nv = static_cast<int>(d.pos.size());
    const int nf = static_cast<int>(d.face_vertices.size());

    std::vector<char> strict_ba(nv, 0);
    for (size_t i = 1; i + 1 < d.arc_ba.size(); ++i) strict_ba[d.arc_ba[i]] = 1;

    UnionFind pu(nv);
    for (size_t i = 0; i + 1 < d.arc_ab.size(); ++i) pu.unite(d.arc_ab[i], d.arc_ab[i + 1]);
    for (size_t e = 0; e < d.edges.size(); ++e) {
        if (config.state[e] != EdgeState::Open) continue;
        auto [u, v] = d.edges[e];
        if (strict_ba[u] || strict_ba[v]) continue;
        pu.unite(u, v);
    }
    std::unordered_set<int> proots;
    for (int v = 0; v < nv; ++v)
        if (!strict_ba[v]) proots.insert(pu.find(v));

    UnionFind du(nf + 1); // nf = outer
    for (size_t e = 0; e < d.edges.size(); ++e) {
        if (config.state[e] != EdgeState::Closed) continue;
        auto [f0, f1] = d.edge_faces[e];
        du.unite(f0 < 0 ? nf : f0, f1 < 0 ? nf : f1);
    }
    std::unordered_set<int> droots;
    for (int f = 0; f <= nf; ++f) droots.insert(du.find(f));

    return static_cast<int>(proots.size()) + static_cast<int>(droots.size()) - 2;
}

// ---------------------------------------------------------------------------
// Slit domains

SlitDomain slit(const DiscreteDomain& domain, const SiteColoring& config, int prefix_steps) {
    if (prefix_steps < 0) throw parameter_error("prefix length must be >= 0");
    auto oracle = [&](int s) { return config.color[s]; };
    auto log = run_site_walk_limited(domain, oracle, nullptr, prefix_steps);

    SlitDomain sd;
    sd.base = &domain;
    sd.consumed_prefix = log.curve;
    sd.resume = log.final_state;
    sd.new_a = domain.face_center[log.final_state.cur_face];
    for (int s : log.consulted_sites) sd.forced_sites.emplace_back(s, config.color[s]);

    // connectivity of the unrevealed interior must survive the slit
    std::vector<char> blocked(domain.pos.size(), 0);
    for (int v : domain.boundary_cycle) blocked[v] = 1;
    for (auto& [s, c] : sd.forced_sites) blocked[s] = 1;
    int start = -1, nfree = 0;
    for (size_t v = 0; v < domain.pos.size(); ++v)
        if (!blocked[v]) {
            if (start < 0) start = static_cast<int>(v);
            ++nfree;
        }
    if (nfree > 0) {
        std::vector<char> seen(domain.pos.size(), 0);
        std::vector<int> stack{start};
        seen[start] = 1;
        int cnt = 0;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            ++cnt;
            for (int w : domain.nbr[v])
                if (!blocked[w] && !seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
        }
        if (cnt != nfree) throw invalid_slit_error("prefix disconnects the free region");
    }
    return sd;
}

SlitDomain slit(const DiscreteDomain& domain, const BondConfig& config, int prefix_steps) {
    if (prefix_steps < 0) throw parameter_error("prefix length must be >= 0");
    auto chord = trace_fk_chord(config);
    if (prefix_steps + 1 >= static_cast<int>(chord.vertices.size()))
        throw parameter_error("prefix longer than the chord");

    SlitDomain sd;
    sd.base = &domain;
    sd.consumed_prefix.lattice_step = domain.lattice.mesh;
    // after k steps the states at vertices 0..k-1 are revealed; the state at
    // the tip vertex k is the next random event
    for (int i = 0; i <= prefix_steps; ++i)
        sd.consumed_prefix.points.push_back(chord.curve.points[i]);
    for (int i = 0; i < prefix_steps; ++i)
        sd.forced_edges.emplace_back(chord.vertices[i], config.state[chord.vertices[i]]);
    if (prefix_steps > 0)
        sd.medial_resume = MedialStart{chord.vertices[prefix_steps - 1],
                                       chord.exit_slots[prefix_steps - 1].first,
                                       chord.exit_slots[prefix_steps - 1].second};
    sd.new_a = chord.curve.points[prefix_steps];
    auto& c = sd.consumed_prefix;
    c.turns.assign(c.points.size(), 0.0);
    for (size_t i = 1; i + 1 < c.points.size(); ++i)
        c.turns[i] = std::arg((c.points[i + 1] - c.points[i]) / (c.points[i] - c.points[i - 1]));
    return sd;
}

InterfaceCurve continue_percolation_interface(const SlitDomain& sd, double p, CounterRng& rng) {
    const auto& d = *sd.base;
    std::vector<std::int8_t> color(d.pos.size(), 0);
    for (int v : d.boundary_cycle) color[v] = d.site_state_ab(v) ? +1 : -1;
    for (auto& [s, c] : sd.forced_sites) color[s] = c;
    auto oracle = [&](int s) -> std::int8_t {
        if (color[s] == 0) color[s] = rng.bernoulli(p) ? +1 : -1;
        return color[s];
    };
    return run_site_walk(d, oracle, &sd.resume).curve;
}

} // namespace lsle::interfaces
