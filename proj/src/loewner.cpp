#include "lattice_sle/loewner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lattice_sle/errors.hpp"
#include "lattice_sle/parallel.hpp"

namespace lsle::loewner {

namespace {

constexpr double kPi = std::numbers::pi;

// square root with Im >= 0; on the real axis keep the sign of `like`
complex sqrt_upper(complex w, complex like) {
    complex s = std::sqrt(w);
    if (s.imag() < 0) s = -s;
    if (s.imag() == 0 && like.real() < 0) s = -s;
    return s;
}

void validate_driving(const DrivingSample& d) {
    if (d.times.size() != d.values.size() || d.times.empty())
        throw parameter_error("driving sample: times/values size mismatch");
    if (d.times[0] != 0.0) throw parameter_error("driving sample must start at t = 0");
    for (size_t i = 1; i < d.times.size(); ++i) {
        if (!(d.times[i] > d.times[i - 1]))
            throw parameter_error("driving times must be strictly increasing");
        if (!std::isfinite(d.values[i])) throw parameter_error("driving value not finite");
    }
}

} // namespace

double DrivingSample::value_at(double t) const {
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    size_t k = static_cast<size_t>(it - times.begin());
    if (interp == Interp::PiecewiseConstant) return values[k - 1];
    double f = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return values[k - 1] + f * (values[k] - values[k - 1]);
}

HalfPlaneCurve forward_solve(const DrivingSample& driving, double z_resolution) {
    validate_driving(driving);

    if (driving.interp == DrivingSample::Interp::PiecewiseConstant) {
        for (size_t k = 1; k < driving.times.size(); ++k) {
            double dt = driving.times[k] - driving.times[k - 1];
            double dw = std::abs(driving.values[k] - driving.values[k - 1]);
            if (dw > 20.0 * std::sqrt(dt))
                throw refinement_required_error("driving step too large for stable tracing");
        }
    }

    // sub-step grid: piecewise-constant driving value per sub-step
    std::vector<double> dt, cw;
    for (size_t k = 1; k < driving.times.size(); ++k) {
        double t0 = driving.times[k - 1], t1 = driving.times[k];
        int nsub = 1;
        if (z_resolution > 0) {
            double dt_max = z_resolution * z_resolution / 4.0;
            nsub = std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt_max)));
        }
        for (int j = 0; j < nsub; ++j) {
            double ta = t0 + (t1 - t0) * j / nsub;
            dt.push_back((t1 - t0) / nsub);
            cw.push_back(driving.interp == DrivingSample::Interp::PiecewiseConstant
                             ? driving.values[k - 1]
                             : driving.value_at(ta));
        }
    }

    const int n = static_cast<int>(dt.size());
    HalfPlaneCurve out;
    out.points.assign(n + 1, complex{driving.values[0], 0.0});
    out.capacity = driving.total_time();

    // gamma(t_k) by composing inverse slit maps f(w) = c + sqrt((w-c)^2 - 4dt);
    // points are independent, so the loop parallelizes over the output index
    par::for_each_index(n, [&](std::int64_t idx) {
        int k = static_cast<int>(idx) + 1;
        complex z = complex(cw[k - 1], 0.0) + complex(0.0, 2.0 * std::sqrt(dt[k - 1]));
        for (int j = k - 2; j >= 0; --j) {
            complex s = z - cw[j];
            z = cw[j] + sqrt_upper(s * s - 4.0 * dt[j], s);
        }
        out.points[k] = z;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Tilted-slit zipper

namespace {

struct TiltedSlit {
    double alpha, m, p, q;
    double tip_abs;
    double capacity;  // half-plane capacity of the slit
    double w0;        // image of the tip under the unzip map
};

TiltedSlit slit_for_tip(complex tip) {
    TiltedSlit s;
    double th = std::arg(tip); // in (0, pi)
    s.alpha = 1.0 - th / kPi;
    s.alpha = std::min(1.0 - 1e-9, std::max(1e-9, s.alpha));
    double a = s.alpha;
    // h(w0) = (m/a)^(1-a) (m/(1-a))^a e^{i pi (1-a)} must equal the tip
    s.m = std::abs(tip) * std::pow(a, 1.0 - a) * std::pow(1.0 - a, a);
    s.p = s.m / (1.0 - a);
    s.q = s.m / a;
    s.tip_abs = std::abs(tip);
    s.capacity = s.m * s.m / (4.0 * a * (1.0 - a));
    s.w0 = s.m * (2.0 * a - 1.0) / (a * (1.0 - a));
    return s;
}

// zip map h(x) = (x-p)^(1-alpha) (x+q)^alpha, C+ -> C+ minus slit
complex zip_eval(const TiltedSlit& s, complex x) {
    return std::exp((1.0 - s.alpha) * std::log(x - s.p) + s.alpha * std::log(x + s.q));
}

complex zip_deriv_ratio(const TiltedSlit& s, complex x) {
    // h'(x) / h(x)
    return (1.0 - s.alpha) / (x - s.p) + s.alpha / (x + s.q);
}

// Newton solve of h(x) = target. Working with log h keeps the iteration
// branch-safe: iterates are reflected into the closed upper half-plane where
// both principal logarithms are continuous, and arg h in (0, pi) matches
// arg target, so the log equation has the single root we want.
complex unzip_point(const TiltedSlit& s, complex target, int step_index) {
    const double a = s.alpha;
    const complex logt = std::log(target);
    auto G = [&](complex x) {
        return (1.0 - a) * std::log(x - s.p) + a * std::log(x + s.q) - logt;
    };
    auto Gp = [&](complex x) { return (1.0 - a) / (x - s.p) + a / (x + s.q); };
    auto lift = [](complex x) {
        return x.imag() < 1e-14 ? complex(x.real(), std::max(1e-14, -x.imag())) : x;
    };

    auto try_from = [&](complex x) -> std::pair<bool, complex> {
        x = lift(x);
        complex g = G(x);
        for (int it = 0; it < 80; ++it) {
            if (std::abs(g) < 1e-13) return {true, x};
            complex dx = g / Gp(x);
            double lim = 4.0 * (s.p + s.q) + std::abs(x);
            if (std::abs(dx) > lim) dx *= lim / std::abs(dx);
            // damped step: shrink until the log-residual decreases
            double lambda = 1.0;
            complex xn;
            complex gn;
            for (int half = 0; half < 25; ++half) {
                xn = lift(x - lambda * dx);
                gn = G(xn);
                if (std::abs(gn) < std::abs(g)) break;
                lambda *= 0.5;
            }
            if (!(std::abs(gn) < std::abs(g))) return {false, x};
            x = xn;
            g = gn;
        }
        return {std::abs(g) < 1e-11, x};
    };

    auto [ok1, x1] = try_from(target);
    if (ok1) return x1;

    // near-tip start from the quadratic critical-point expansion
    complex tip = std::polar(std::pow(s.p, 1.0 - a) * std::pow(s.q, a), kPi * (1.0 - a));
    complex d2 = tip * (-(1.0 - a) / ((s.w0 - s.p) * (s.w0 - s.p)) -
                        a / ((s.w0 + s.q) * (s.w0 + s.q)));
    complex delta = std::sqrt(2.0 * (target - tip) / d2);
    for (complex cand :
         {complex(s.w0, 0.0) + delta, complex(s.w0, 0.0) - delta, complex(s.w0, std::abs(delta)),
          complex(s.p + std::abs(delta), std::abs(delta)),
          complex(-s.q - std::abs(delta), std::abs(delta))}) {
        auto [ok2, x2] = try_from(cand);
        if (ok2) return x2;
    }
    throw degenerate_step_error("zipper failed to invert slit map", step_index);
}

} // namespace

std::vector<complex> douglas_peucker(const std::vector<complex>& pts, double tol) {
    if (pts.size() < 3) return pts;
    std::vector<char> keep(pts.size(), 0);
    keep.front() = keep.back() = 1;
    std::vector<std::pair<size_t, size_t>> stack{{0, pts.size() - 1}};
    while (!stack.empty()) {
        auto [i, j] = stack.back();
        stack.pop_back();
        if (j <= i + 1) continue;
        complex d = pts[j] - pts[i];
        double dn = std::abs(d);
        size_t worst = i;
        double wd = -1;
        for (size_t k = i + 1; k < j; ++k) {
            double dist = dn > 0 ? std::abs(std::imag(std::conj(d / dn) * (pts[k] - pts[i])))
                                 : std::abs(pts[k] - pts[i]);
            if (dist > wd) {
                wd = dist;
                worst = k;
            }
        }
        if (wd > tol) {
            keep[worst] = 1;
            stack.push_back({i, worst});
            stack.push_back({worst, j});
        }
    }
    std::vector<complex> out;
    for (size_t k = 0; k < pts.size(); ++k)
        if (keep[k]) out.push_back(pts[k]);
    return out;
}

DrivingSample extract_driving(const HalfPlaneCurve& curve, const ZipperOptions& opt) {
    if (curve.points.size() < 2) throw parameter_error("curve too short to extract");
    if (std::abs(curve.points[0].imag()) > 1e-9)
        throw parameter_error("curve must start on the real axis");

    const double base = curve.points[0].real();
    double diam = 0;
    for (auto p : curve.points) diam = std::max(diam, std::abs(p - curve.points[0]));

    // points numerically collapsed onto the axis carry no reliable geometry
    // (long map compositions lose the imaginary part to cancellation)
    const double im_floor = 1e-9 * std::max(diam, 1e-30);
    std::vector<complex> pts;
    pts.reserve(curve.points.size());
    pts.push_back(complex(0.0, 0.0));
    for (size_t i = 1; i < curve.points.size(); ++i)
        if (curve.points[i].imag() > im_floor) pts.push_back(curve.points[i] - base);
    if (pts.size() < 2) throw parameter_error("no curve points above the axis");

    if (pts.size() > opt.max_points) {
        std::vector<double> seg;
        for (size_t i = 1; i < pts.size(); ++i) seg.push_back(std::abs(pts[i] - pts[i - 1]));
        std::nth_element(seg.begin(), seg.begin() + seg.size() / 2, seg.end());
        double tol = opt.dp_tolerance_factor * seg[seg.size() / 2];
        pts = douglas_peucker(pts, tol);
        while (pts.size() > opt.max_points) {
            tol *= 2;
            pts = douglas_peucker(pts, tol);
        }
    }

    // Each point is pushed through the accumulated elementary maps only when
    // it is about to be consumed; with a capacity horizon the tail of the
    // curve costs nothing.
    struct Elem {
        bool tilted;
        TiltedSlit s;   // tilted
        double c, h2;   // vertical
    };
    std::vector<Elem> elems;
    std::vector<double> rawT, rawV;
    double T = 0.0, W = 0.0;
    for (size_t k = 1; k < pts.size(); ++k) {
        complex tip = pts[k];
        for (const Elem& e : elems) {
            if (e.tilted) {
                tip = unzip_point(e.s, tip, static_cast<int>(k)) - e.s.w0;
            } else {
                complex sft = tip - e.c;
                tip = e.c + sqrt_upper(sft * sft + e.h2, sft);
            }
            if (tip.imag() <= 0) tip = complex(tip.real(), kDeltaFloor);
        }
        if (!(tip.imag() > 0))
            throw degenerate_step_error("curve point on the real axis mid-extraction",
                                        static_cast<int>(k));
        if (opt.elementary == ZipperOptions::Elementary::Tilted) {
            Elem e;
            e.tilted = true;
            e.s = slit_for_tip(tip);
            elems.push_back(e);
            T += e.s.capacity;
            W += e.s.w0;
            rawT.push_back(T);
            rawV.push_back(W + base);
        } else {
            // vertical slit at base c: g(z) = c + sqrt((z-c)^2 + h^2); no
            // re-basing, the driving during this step is the constant c
            Elem e;
            e.tilted = false;
            e.c = tip.real();
            e.h2 = tip.imag() * tip.imag();
            elems.push_back(e);
            T += e.h2 / 4.0;
            rawT.push_back(T);
            rawV.push_back(e.c + base);
        }
        if (T >= opt.capacity_horizon) break;
    }

    // assemble, dropping steps whose capacity does not advance numerically
    DrivingSample out;
    out.times.push_back(0.0);
    out.values.push_back(base);
    if (opt.elementary == ZipperOptions::Elementary::Tilted) {
        out.interp = DrivingSample::Interp::Linear;
        for (size_t k = 0; k < rawT.size(); ++k) {
            if (rawT[k] <= out.times.back() + 1e-13 * std::max(1.0, rawT[k])) continue;
            out.times.push_back(rawT[k]);
            out.values.push_back(rawV[k]);
        }
    } else {
        // piecewise constant, left-aligned: values[j] drives [times[j], times[j+1])
        out.interp = DrivingSample::Interp::PiecewiseConstant;
        for (size_t k = 0; k < rawT.size(); ++k) {
            if (rawT[k] <= out.times.back() + 1e-13 * std::max(1.0, rawT[k])) continue;
            out.values.back() = rawV[k];
            out.times.push_back(rawT[k]);
            out.values.push_back(rawV[k]);
        }
    }
    return out;
}

HalfPlaneCurve map_curve_to_halfplane(const InterfaceCurve& curve,
                                      const geometry::ConformalMap& map) {
    HalfPlaneCurve out;
    out.points.push_back(complex{0.0, 0.0});
    for (auto p : curve.points) {
        complex z = map.evaluation(p);
        if (z.imag() <= 0) z = complex(z.real(), kDeltaFloor);
        out.points.push_back(z);
    }
    return out;
}

DrivingSample sample_sle_driving(double kappa, double capacity_T, int steps, CounterRng& rng) {
    if (kappa < 0) throw parameter_error("kappa must be >= 0");
    if (capacity_T <= 0) throw parameter_error("capacity must be positive");
    if (steps < 1) throw parameter_error("steps must be >= 1");
    DrivingSample d;
    d.interp = DrivingSample::Interp::PiecewiseConstant;
    d.times.resize(steps + 1);
    d.values.resize(steps + 1);
    d.times[0] = 0.0;
    d.values[0] = 0.0;
    const double dt = capacity_T / steps;
    const double sd = std::sqrt(kappa * dt);
    for (int k = 1; k <= steps; ++k) {
        d.times[k] = k * dt;
        d.values[k] = d.values[k - 1] + sd * rng.normal();
    }
    return d;
}

HalfPlaneCurve sample_sle(double kappa, double capacity_T, int steps, CounterRng& rng) {
    return forward_solve(sample_sle_driving(kappa, capacity_T, steps, rng));
}

} // namespace lsle::loewner
