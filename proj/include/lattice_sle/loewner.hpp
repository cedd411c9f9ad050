#pragma once

#include <complex>
#include <limits>
#include <vector>

#include "lattice_sle/curve.hpp"
#include "lattice_sle/geometry.hpp"
#include "lattice_sle/rng.hpp"

namespace lsle::loewner {

using geometry::complex;

// Capacity-parameterized driving function {(t_i, w_i)} of a chordal Loewner
// chain under the hydrodynamic normalization g_t(z) = z + 2t/z + O(1/z^2).
struct DrivingSample {
    enum class Interp { PiecewiseConstant, Linear };
    std::vector<double> times;    // strictly increasing, times[0] == 0
    std::vector<double> values;   // values[0] is the base point (usually 0)
    Interp interp = Interp::PiecewiseConstant;

    double value_at(double t) const;   // interpolated
    double total_time() const { return times.empty() ? 0.0 : times.back(); }
};

struct HalfPlaneCurve {
    std::vector<complex> points;  // starts at a real base point, Im > 0 after
    double capacity = std::numeric_limits<double>::quiet_NaN();
};

// Trace of the Loewner chain driven by `driving`, computed by composing
// inverse vertical-slit maps. z_resolution > 0 refines time steps until each
// sub-step's slit height 2 sqrt(dt) is below it. Piecewise-constant driving
// with per-step |dw| > 20 sqrt(dt) raises refinement_required_error.
HalfPlaneCurve forward_solve(const DrivingSample& driving, double z_resolution = 0.0);

struct ZipperOptions {
    std::size_t max_points = 20000;        // Douglas-Peucker cap
    double dp_tolerance_factor = 0.5;      // times the median segment length
    double capacity_horizon = std::numeric_limits<double>::infinity();
    // Tilted slits are exact for straight segments and suited to lattice
    // polylines; the vertical-slit map is the exact inverse of forward_solve's
    // discretization and is the robust choice for raw SLE traces, whose
    // roughness is self-similar at every step size.
    enum class Elementary { Tilted, Vertical } elementary = Elementary::Tilted;
};

// Inverse problem (zipper): peel one curve segment per step with the exact
// two-parameter tilted-slit map (angle + capacity), accumulating capacity and
// tip image. extract_driving(gamma) then forward_solve reproduces gamma to
// discretization tolerance.
DrivingSample extract_driving(const HalfPlaneCurve& curve, const ZipperOptions& opt = {});

// Pointwise image of an interface under a domain -> half-plane map; the image
// of a is prepended as the base point and rounding onto the axis is lifted by
// +i * 1e-12.
HalfPlaneCurve map_curve_to_halfplane(const InterfaceCurve& curve,
                                      const geometry::ConformalMap& map);

DrivingSample sample_sle_driving(double kappa, double capacity_T, int steps, CounterRng& rng);
HalfPlaneCurve sample_sle(double kappa, double capacity_T, int steps, CounterRng& rng);

// polyline simplification used before extraction
std::vector<complex> douglas_peucker(const std::vector<complex>& pts, double tol);

inline constexpr double kDeltaFloor = 1e-12;

} // namespace lsle::loewner
