#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lattice_sle/geometry.hpp"
#include "lattice_sle/loewner.hpp"

namespace lsle::analysis {

using geometry::complex;
using loewner::DrivingSample;

// ---------------------------------------------------------------------------
// kappa estimation

struct KappaEstimate {
    double kappa_hat = 0;
    std::pair<double, double> ci95{0, 0};
    double drift_hat = 0;
    std::pair<double, double> drift_ci95{0, 0};
    int n_curves = 0;
    std::vector<double> grid;
};

// Weighted least squares of the sample variance of w(t) against t through the
// origin (weights 1/t^2), drift from the sample mean; 95% CIs from a seeded
// bootstrap over curves (1000 resamples).
KappaEstimate estimate_kappa(const std::vector<DrivingSample>& drivings,
                             const std::vector<double>& grid, std::uint64_t seed);

// ---------------------------------------------------------------------------
// increment diagnostics

struct IncrementReport {
    std::vector<double> ad_pvalues;      // Anderson-Darling per grid interval
    double lag1_corr = 0;
    double lag1_pvalue = 1;
    double frac_below_001 = 0;
    bool sufficient = true;
};

IncrementReport increment_tests(const std::vector<DrivingSample>& drivings,
                                const std::vector<double>& grid);

// ---------------------------------------------------------------------------
// martingale observables along the SLE flow

struct MartingaleReport {
    std::vector<double> t;
    std::vector<complex> mean;
    std::vector<double> stderr_abs;
    complex reference{0, 0};    // value at t = 0
    double max_sigma = 0;       // max |mean - reference| / stderr over checkpoints
    int swallowed = 0;
    bool pass = false;
};

// E[ (g_t'(z) / (pi (g_t(z)-w_t)))^alpha ] with alpha = 8/kappa - 1 (or the
// supplied override); constant in t for SLE(kappa).
MartingaleReport martingale_test_phi(double kappa, complex z, int n_traces,
                                     const std::vector<double>& checkpoints, std::uint64_t seed,
                                     double alpha_override = std::numeric_limits<double>::quiet_NaN());

// E[ (g_t'(z) / (g_t(z)-w_t)^2)^alpha ] with alpha = 3/kappa - 1/2.
MartingaleReport martingale_test_psi(double kappa, complex z, int n_traces,
                                     const std::vector<double>& checkpoints, std::uint64_t seed,
                                     double alpha_override = std::numeric_limits<double>::quiet_NaN());

// ---------------------------------------------------------------------------
// box-counting dimension

std::pair<double, double> box_dimension(std::span<const complex> points,
                                        const std::vector<double>& scales);

// ---------------------------------------------------------------------------
// Markov property test (percolation)

struct MarkovReport {
    double p_value = 1;
    double statistic = 0;
    int dof = 0;
    std::int64_t n_conditioned = 0, n_fresh = 0;
    double acceptance_rate = 1;
};

// Two-sample chi-square comparing the exit position (first crossing of a fixed
// horizontal cross-section) of interfaces conditioned on a prefix against
// fresh interfaces in the slit domain. mismatch=true inverts the slit colors
// as a constructed violation.
MarkovReport markov_test(const geometry::DiscreteDomain& domain, double p, int prefix_steps,
                         std::int64_t n_per_arm, std::uint64_t seed, bool mismatch);

// helpers shared with the tests
double normal_cdf(double x);
double chi2_sf(double stat, int dof);   // survival function
double anderson_darling_pvalue(std::vector<double> sample);

// Interface -> half-plane driving: normalizes by the domain's true bounding
// box, maps through the elliptic rectangle map anchored at the marked
// corners, and runs the zipper up to the capacity horizon.
loewner::DrivingSample interface_driving(const geometry::DiscreteDomain& domain,
                                         const InterfaceCurve& curve,
                                         geometry::Corner a_corner, geometry::Corner b_corner,
                                         double capacity_horizon);

} // namespace lsle::analysis
