#pragma once

#include <cstdint>
#include <vector>

#include "lattice_sle/curve.hpp"
#include "lattice_sle/geometry.hpp"
#include "lattice_sle/rng.hpp"

namespace lsle::models {

using geometry::DiscreteDomain;
using geometry::LatticeKind;
using geometry::complex;

// ---------------------------------------------------------------------------
// Exact critical constants (closed forms).

double x_c(double n);            // 1/sqrt(2 + sqrt(2-n))
double x_tilde_c(double n);      // 1/sqrt(2 - sqrt(2-n))
double kappa_dilute(double n);   // 4pi / (2pi - arccos(-n/2))
double kappa_dense(double n);    // 4pi / arccos(-n/2)
double p_sd(double q);           // sqrt(q) / (sqrt(q)+1)
double kappa_fk(double q);       // 4pi / arccos(-sqrt(q)/2)
double coulomb_k(double q);      // arccos(sqrt(q)/2) / (2pi)
double beffara_dim(double kappa);// min(1 + kappa/8, 2)

inline double x_of_beta(double beta) { return std::exp(-2.0 * beta); }
// triangular-lattice critical temperature, beta_c = log(3)/4
double beta_c_triangular();
// square-lattice spin Ising at the self-dual point, x = sqrt(2) - 1
double x_c_square_ising();

// ---------------------------------------------------------------------------
// Configurations

// +1 = open/grey, -1 = closed/white
struct SiteColoring {
    const DiscreteDomain* domain = nullptr;
    std::vector<std::int8_t> color;
};

enum class EdgeState : std::uint8_t { Closed = 0, Open = 1 };

// Dobrushin edge classification for the random cluster model: the wired arc's
// edges are open, the dual-wired arc's edges and the interior edges hanging
// off its strict vertices are closed (closing an edge is equivalent to
// deleting it for the FK measure), the rest are free.
enum class EdgeClass : std::uint8_t { Free = 0, FixedOpen = 1, FixedClosed = 2 };

struct FkStructure {
    std::vector<EdgeClass> cls;   // per primal edge
    std::vector<int> free_edges;  // indices of free edges
};
FkStructure classify_fk_edges(const DiscreteDomain& domain);

struct BondConfig {
    const DiscreteDomain* domain = nullptr;
    std::vector<EdgeState> state;
};

struct LoopConfig {
    const DiscreteDomain* domain = nullptr;   // hexagonal
    std::vector<std::uint8_t> edge_on;
    std::vector<int> chord;                   // vertex path a..b
    std::vector<std::vector<int>> loops;      // closed vertex cycles
};

// decompose an even-degree edge set (odd exactly at a and b) into chord+loops
void decompose_loop_config(LoopConfig& cfg);

// ---------------------------------------------------------------------------
// Samplers. Deterministic functions of (domain, params, rng key). All chains
// use random-scan single-variable updates so the one-update kernel satisfies
// detailed balance exactly (checked on enumerable domains in the tests).

SiteColoring sample_percolation(const DiscreteDomain& domain, double p, CounterRng& rng);

SiteColoring sample_ising_spin(const DiscreteDomain& domain, double beta, int sweeps,
                               CounterRng& rng);

// Internal variant with an arbitrary fixed-site mask (used by Edwards-Sokal).
SiteColoring sample_ising_spin_masked(const DiscreteDomain& domain, double x, int sweeps,
                                      const std::vector<std::int8_t>& fixed, CounterRng& rng);

// heat-bath conditional P(spin = +1 | neighbors) at weight x per opposite pair
double ising_conditional_plus(const DiscreteDomain& domain, double x,
                              const std::vector<std::int8_t>& color, int site);

// Single-bond heat bath; connectivity decided by breadth-first search with the
// wired arc identified to one vertex.
BondConfig sample_fk(const DiscreteDomain& domain, double q, double p, int sweeps,
                     CounterRng& rng);

// Edwards-Sokal coupled sampler for q = 2 (spin sample, then open each
// equal-spin free edge with probability p). Agrees with sample_fk in
// distribution; cross-checked in the tests.
BondConfig sample_fk_edwards_sokal(const DiscreteDomain& domain, double p, int sweeps,
                                   CounterRng& rng);

// conditional probability that edge `e` is open given the rest (heat bath)
double fk_conditional_open(const DiscreteDomain& domain, const FkStructure& st,
                           const std::vector<EdgeState>& state, int e, double q, double p);

LoopConfig sample_loop_on(const DiscreteDomain& domain, double n, double x, int sweeps,
                          CounterRng& rng);

// Harmonic Explorer on a hexagonal domain: grows the curve from a; at each
// step the hexagon ahead is colored 1 (arc_ba side) with probability equal to
// the discrete harmonic function there, solved with boundary values 1 on
// arc_ba, 0 on arc_ab and all previously colored hexagons.
InterfaceCurve sample_harmonic_explorer(const DiscreteDomain& domain, CounterRng& rng);

// Dirichlet value at one face for the current Harmonic Explorer state;
// exposed for the dense-solve oracle tests.
double harmonic_explorer_turn_probability(const DiscreteDomain& domain,
                                          const std::vector<std::int8_t>& face_color,
                                          int face);

// initial face coloring of the explorer: +1 on the arc_ba ring, -1 on the
// arc_ab ring, 0 unknown
std::vector<std::int8_t> harmonic_explorer_initial_colors(const DiscreteDomain& domain);

// the final coloring alongside the curve (every face resolved by the side of
// the chord it ends on)
struct HarmonicExplorerRun {
    InterfaceCurve curve;
    std::vector<std::int8_t> final_colors; // drawn cells only; 0 = untouched
    std::vector<double> drawn_probabilities; // h value at each fresh draw
};
HarmonicExplorerRun run_harmonic_explorer(const DiscreteDomain& domain, CounterRng& rng);

// number of sweeps used by default before sampling (10 * #sites)
int default_burnin_sweeps(const DiscreteDomain& domain);

} // namespace lsle::models
