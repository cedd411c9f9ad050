#pragma once

#include <functional>
#include <vector>

#include "lattice_sle/curve.hpp"
#include "lattice_sle/models.hpp"

namespace lsle::interfaces {

using geometry::DiscreteDomain;
using geometry::complex;
using models::BondConfig;
using models::LoopConfig;
using models::SiteColoring;

// ---------------------------------------------------------------------------
// Site-model explorer (triangular percolation / Ising, square-lattice spin
// Ising). Walks across faces of the primal domain; emitted points are the
// face centers (dual vertices). The color oracle is consulted once per step
// for the unexplored site ahead, which lets the Harmonic Explorer share the
// machinery.

struct SiteWalkState {
    int cur_face = -1;
    int crossed_edge = -1;
    int left_site = -1, right_site = -1; // closed on the left, open on the right
    bool done = false;
};

struct SiteWalkLog {
    InterfaceCurve curve;
    std::vector<int> faces;            // visited faces, parallel to curve.points
    std::vector<int> consulted_sites;  // ahead site per step
    SiteWalkState final_state;
};

// oracle(site) -> +1 open / -1 closed
SiteWalkLog run_site_walk(const DiscreteDomain& domain,
                          const std::function<std::int8_t(int)>& oracle,
                          const SiteWalkState* resume = nullptr);

// ---------------------------------------------------------------------------
// FK medial walk

struct MedialChord {
    std::vector<int> vertices;   // medial vertex = primal edge ids
    InterfaceCurve curve;
    std::vector<std::pair<int, int>> exit_slots; // (face, vertex) per step
};

// custom chord start: medial vertex plus the exit slot, used to trace
// continuations inside slit domains
struct MedialStart {
    int vertex;
    int face;
    int vtx;
};

MedialChord trace_fk_chord(const BondConfig& config, const MedialStart* start = nullptr);

// pairing rule at a medial vertex: the slot the walk leaves through after
// arriving via (face, vtx), given the primal edge state at `vertex`
std::pair<int, int> medial_exit_slot(const DiscreteDomain& domain, int vertex,
                                     models::EdgeState state, int arrival_face, int arrival_vtx);

struct MedialCensus {
    int n_loops = 0;
    std::vector<std::vector<int>> loops;     // medial vertex cycles
    std::vector<std::vector<int>> arcs;      // boundary artifacts along arc_ba
    std::vector<int> chord;                  // must match trace_fk_chord
};

MedialCensus medial_census(const BondConfig& config);

// ---------------------------------------------------------------------------
// Spec operations

InterfaceCurve trace_interface(const SiteColoring& config);
InterfaceCurve trace_interface(const BondConfig& config);
InterfaceCurve trace_interface(const LoopConfig& config);

// Sum of the stored turning angles between the indexed point and the b-end of
// the curve (the tip contributes no turn). Additive over index triples.
double winding(const InterfaceCurve& curve, std::size_t upto);

int count_loops(const BondConfig& config);
int count_loops(const LoopConfig& config);

// Planar-duality cross check for bond configs: number of loops equals
// (#primal clusters, wired arc identified, strict arc_ba vertices excluded)
// + (#dual clusters, outer wired along arc_ba) - 2.
int euler_loop_count(const BondConfig& config);

struct SlitDomain {
    const DiscreteDomain* base = nullptr;
    InterfaceCurve consumed_prefix;
    complex new_a{0, 0};
    // states revealed by the prefix
    std::vector<std::pair<int, std::int8_t>> forced_sites;
    std::vector<std::pair<int, models::EdgeState>> forced_edges;
    SiteWalkState resume;      // site-model walker state to continue from
    MedialStart medial_resume{-1, -1, -1};
};

SlitDomain slit(const DiscreteDomain& domain, const SiteColoring& config, int prefix_steps);
SlitDomain slit(const DiscreteDomain& domain, const BondConfig& config, int prefix_steps);

// continue a percolation interface in a slit domain with fresh randomness
InterfaceCurve continue_percolation_interface(const SlitDomain& sd, double p, CounterRng& rng);

} // namespace lsle::interfaces
