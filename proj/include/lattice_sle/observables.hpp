#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "lattice_sle/geometry.hpp"
#include "lattice_sle/interfaces.hpp"
#include "lattice_sle/models.hpp"

namespace lsle::observables {

using geometry::DiscreteDomain;
using geometry::complex;

// ---------------------------------------------------------------------------
// Cardy's formula

// F(u) = int_0^u (v(1-v))^(-2/3) dv / int_0^1 (v(1-v))^(-2/3) dv, evaluated by
// adaptive quadrature after the substitution v = s^3 (or 1-v = s^3) that
// removes the endpoint singularity. Absolute error < 1e-10.
double cardy_F(double u);

// hypergeometric route: c * u^(1/3) * 2F1(1/3, 2/3; 4/3; u); used as an
// independent oracle in the tests
double cardy_F_hypergeometric(double u);

// residual of F'' + 2(1-2a)/(3(1-a)) F' with central differences, step 1e-4
double cardy_ode_residual(double a);

// ---------------------------------------------------------------------------
// Crossing probability

struct CrossingSpec {
    const DiscreteDomain* domain;
    int a, x, b, y;   // ccw boundary vertices
    double u;         // conformal modulus: cross-ratio of half-plane images
};

// marked points snapped to the rectangle corners (ccw a,x,b,y); u from the
// elliptic map with a -> 0, b -> inf: u = xi / (xi - eta)
CrossingSpec make_crossing_spec(const DiscreteDomain& domain, geometry::Corner a,
                                geometry::Corner x, geometry::Corner b, geometry::Corner y);

// open-crossing probability between arcs [a,x] and [b,y]; all sites i.i.d.
// open with probability p (no Dobrushin forcing). Returns (estimate, stderr).
std::pair<double, double> crossing_probability_mc(const CrossingSpec& spec, double p,
                                                  std::int64_t n_samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// FK fermionic observable

struct EdgeObservable {
    const DiscreteDomain* medial = nullptr;   // square-medial domain
    double q = 2.0;
    std::vector<complex> vertex_values;       // per medial vertex, visit sums
    std::vector<complex> edge_values;         // per medial edge, traversal expectation
    std::vector<double> vertex_stderr;        // MC only
    std::vector<double> edge_stderr;          // MC only
    double normalization = 1.0;               // 1/(2 cos(pi/8)) recorded when applied
    complex global_phase{1.0, 0.0};           // rotation fixing the boundary line
};

// unit direction of the line l(e) for a medial edge: sqrt(conj(e)) with e the
// black -> white unit vector (black = horizontal primal edge midpoints)
complex medial_line_direction(const DiscreteDomain& medial, int medial_edge);

// Exact expectation by exhaustive enumeration over the free edges, weights
// proportional to (sqrt q)^(#loops). Requires <= 24 medial edges.
EdgeObservable fermionic_exact(const DiscreteDomain& medial, double q);

// same, conditioned on forced edge states and an optional chord start
// (used for slit-domain martingale checks)
EdgeObservable fermionic_exact_constrained(
    const DiscreteDomain& medial, double q,
    const std::vector<std::pair<int, models::EdgeState>>& forced,
    const interfaces::MedialStart* start = nullptr);

// Monte Carlo estimate of the same expectation from sample_fk configurations
// (Edwards-Sokal at q=2); per-value standard errors from independent chains.
EdgeObservable fermionic_mc(const DiscreteDomain& medial, double q, std::int64_t n_samples,
                            std::uint64_t seed);

// max over medial edges of |Proj_l(e) F(v1) - Proj_l(e) F(v2)|
double check_projection_relation(const EdgeObservable& F);

// max over interior medial squares (ccw corners u,v,w,z) of
// |F(z) - F(v) - i (F(w) - F(u))|
double check_discrete_cr(const EdgeObservable& F);

// ---------------------------------------------------------------------------
// Height function

struct HeightFunction {
    const DiscreteDomain* medial = nullptr;
    std::vector<double> face_values;
    std::vector<std::int8_t> color;          // 1 = black (primal-centered)
    double cycle_discrepancy = 0;            // max inconsistency of eq increments
    double max_laplacian_violation = 0;      // sub/superharmonic sign slack
    double laplacian_identity_error = 0;     // |Delta H| vs |F(x)-F(y)|^2
    double max_local_gap = 0;                // max |H(b)-H(w)| over edges
    double outer_ab_value = 0;               // H on the outer arc_ab region (anchor, 0)
    double outer_ba_value = 0;               // H on the outer arc_ba region (exactly 1)
    double boundary_value_error = 0;         // deviation from exact 0/1 arcs
};

// integrates H(black) - H(white) = |F(e)|^2 from a zero face on the arc_ab
// side; throws not_integrable_error when the cycle discrepancy exceeds tau
HeightFunction build_height(const EdgeObservable& F, double tau = 1e-8);

// ---------------------------------------------------------------------------
// Convergence of F / sqrt(eps) to sqrt(Phi')

struct ConvergenceReport {
    std::vector<double> eps;
    std::vector<double> sup_error;     // on the interior compact, per eps
    double exponent = 0;               // fitted alpha in |F| ~ |Phi'|^alpha
    bool monotone = true;
    std::vector<double> noise_level;   // mean stderr per eps
};

ConvergenceReport convergence_test(double width, double height, double eps0, int levels,
                                   std::int64_t n_samples, std::uint64_t seed);

} // namespace lsle::observables
