#include "lattice_sle/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "lattice_sle/errors.hpp"
#include "lattice_sle/interfaces.hpp"
#include "lattice_sle/models.hpp"
#include "lattice_sle/parallel.hpp"
#include "lattice_sle/rng.hpp"

namespace lsle::analysis {

namespace {

constexpr double kPi = std::numbers::pi;

complex sqrt_upper(complex w, complex like) {
    complex s = std::sqrt(w);
    if (s.imag() < 0) s = -s;
    if (s.imag() == 0 && like.real() < 0) s = -s;
    return s;
}

struct Regression {
    double slope, r2;
};

Regression fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double r = (n * sxy - sx * sy) /
               std::sqrt(std::max((n * sxx - sx * sx) * (n * syy - sy * sy), 1e-300));
    return {slope, r * r};
}

} // namespace

// ---------------------------------------------------------------------------
// kappa estimation

namespace {

struct KappaFit {
    double kappa, drift;
};

KappaFit fit_kappa(const std::vector<std::vector<double>>& w_at, const std::vector<double>& grid,
                   const std::vector<int>& pick) {
    // w_at[g][curve]; pick = bootstrap curve indices
    KappaFit out{0, 0};
    double num_k = 0, den_k = 0, num_d = 0, den_d = 0;
    for (size_t g = 0; g < grid.size(); ++g) {
        double m = 0;
        for (int c : pick) m += w_at[g][c];
        m /= static_cast<double>(pick.size());
        double var = 0;
        for (int c : pick) var += (w_at[g][c] - m) * (w_at[g][c] - m);
        var /= static_cast<double>(pick.size()) - 1.0;
        double t = grid[g];
        num_k += var / t; // weights 1/t^2: sum w t v / sum w t^2 = mean(v/t)
        den_k += 1.0;
        num_d += m / t;
        den_d += 1.0;
    }
    out.kappa = num_k / den_k;
    out.drift = num_d / den_d;
    return out;
}

} // namespace

KappaEstimate estimate_kappa(const std::vector<DrivingSample>& drivings,
                             const std::vector<double>& grid, std::uint64_t seed) {
    if (drivings.size() < 2) throw parameter_error("need at least 2 driving samples");
    if (grid.empty()) throw parameter_error("empty time grid");
    for (double t : grid)
        if (t <= 0) throw parameter_error("grid times must be positive");
    double tmax = *std::max_element(grid.begin(), grid.end());
    for (const auto& d : drivings)
        if (d.total_time() < tmax)
            throw grid_range_error("grid exceeds the shortest driving sample");

    const int n = static_cast<int>(drivings.size());
    std::vector<std::vector<double>> w_at(grid.size(), std::vector<double>(n));
    for (size_t g = 0; g < grid.size(); ++g)
        for (int c = 0; c < n; ++c)
            w_at[g][c] = drivings[c].value_at(grid[g]) - drivings[c].values[0];

    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    auto base = fit_kappa(w_at, grid, all);

    const int B = 1000;
    std::vector<double> ks(B), ds(B);
    CounterRng rng = CounterRng::substream(seed, 0xb001);
    for (int b = 0; b < B; ++b) {
        std::vector<int> pick(n);
        for (int i = 0; i < n; ++i) pick[i] = static_cast<int>(rng.uniform_index(n));
        auto f = fit_kappa(w_at, grid, pick);
        ks[b] = f.kappa;
        ds[b] = f.drift;
    }
    std::sort(ks.begin(), ks.end());
    std::sort(ds.begin(), ds.end());
    auto q = [&](std::vector<double>& v, double f) {
        return v[static_cast<size_t>(f * (v.size() - 1))];
    };

    KappaEstimate est;
    est.kappa_hat = base.kappa;
    est.drift_hat = base.drift;
    est.ci95 = {q(ks, 0.025), q(ks, 0.975)};
    est.drift_ci95 = {q(ds, 0.025), q(ds, 0.975)};
    est.n_curves = n;
    est.grid = grid;
    return est;
}

// ---------------------------------------------------------------------------
// increment diagnostics

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

loewner::DrivingSample interface_driving(const geometry::DiscreteDomain& domain,
                                         const InterfaceCurve& curve,
                                         geometry::Corner a_corner, geometry::Corner b_corner,
                                         double capacity_horizon) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (auto p : domain.pos) {
        xmin = std::min(xmin, p.real());
        xmax = std::max(xmax, p.real());
        ymin = std::min(ymin, p.imag());
        ymax = std::max(ymax, p.imag());
    }
    double w = xmax - xmin, h = ymax - ymin;
    auto rh = geometry::rect_to_halfplane(w / h, a_corner, b_corner);
    auto cm = rh.as_conformal_map();
    InterfaceCurve scaled;
    scaled.lattice_step = curve.lattice_step / h;
    for (auto p : curve.points) scaled.points.push_back((p - complex(xmin, ymin)) / h);
    // anchor the frame at the chord's own starting point rather than the
    // snapped corner: the O(eps) offset between them otherwise shows up as a
    // spurious drift of the extracted driving
    loewner::HalfPlaneCurve hp;
    complex first = cm.evaluation(scaled.points.front());
    hp.points.push_back(complex(first.real(), 0.0));
    for (auto p : scaled.points) {
        complex z = cm.evaluation(p);
        if (z.imag() <= 0) z = complex(z.real(), loewner::kDeltaFloor);
        hp.points.push_back(z);
    }
    // back off to coarser polylines (finally to the vertical map) when a
    // lattice curve passes too close to a peeled slit for the tilted
    // inversion to resolve in double precision
    for (std::size_t cap : {20000, 4000, 1500}) {
        loewner::ZipperOptions zo;
        zo.capacity_horizon = capacity_horizon;
        zo.max_points = cap;
        try {
            return loewner::extract_driving(hp, zo);
        } catch (const degenerate_step_error&) {
        }
    }
    loewner::ZipperOptions zo;
    zo.capacity_horizon = capacity_horizon;
    zo.max_points = 4000;
    zo.elementary = loewner::ZipperOptions::Elementary::Vertical;
    return loewner::extract_driving(hp, zo);
}

double anderson_darling_pvalue(std::vector<double> sample) {
    const int n = static_cast<int>(sample.size());
    if (n < 8) return 1.0;
    double mean = 0;
    for (double v : sample) mean += v;
    mean /= n;
    double var = 0;
    for (double v : sample) var += (v - mean) * (v - mean);
    var /= (n - 1);
    double sd = std::sqrt(var);
    std::sort(sample.begin(), sample.end());
    double a2 = -n;
    for (int i = 0; i < n; ++i) {
        double zi = normal_cdf((sample[i] - mean) / sd);
        double zn = normal_cdf((sample[n - 1 - i] - mean) / sd);
        zi = std::min(std::max(zi, 1e-15), 1 - 1e-15);
        zn = std::min(std::max(zn, 1e-15), 1 - 1e-15);
        a2 -= (2.0 * i + 1.0) / n * (std::log(zi) + std::log(1.0 - zn));
    }
    double a = a2 * (1.0 + 0.75 / n + 2.25 / (n * n));
    // D'Agostino-Stephens case 3 approximation
    if (a >= 0.6) return std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
    if (a >= 0.34) return std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
    if (a >= 0.2) return 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
    return 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
}

IncrementReport increment_tests(const std::vector<DrivingSample>& drivings,
                                const std::vector<double>& grid) {
    IncrementReport rep;
    if (drivings.size() < 2) {
        rep.sufficient = false;
        return rep;
    }
    if (grid.size() < 2) throw parameter_error("grid needs at least two times");
    double tmax = *std::max_element(grid.begin(), grid.end());
    for (const auto& d : drivings)
        if (d.total_time() < tmax)
            throw grid_range_error("grid exceeds the shortest driving sample");

    const int n = static_cast<int>(drivings.size());
    const int m = static_cast<int>(grid.size());

    int below = 0;
    for (int g = 0; g + 1 < m; ++g) {
        std::vector<double> inc(n);
        for (int c = 0; c < n; ++c)
            inc[c] = drivings[c].value_at(grid[g + 1]) - drivings[c].value_at(grid[g]);
        double p = anderson_darling_pvalue(inc);
        rep.ad_pvalues.push_back(p);
        if (p < 0.01) ++below;
    }
    rep.frac_below_001 = rep.ad_pvalues.empty()
                             ? 0.0
                             : static_cast<double>(below) / rep.ad_pvalues.size();

    // pooled lag-1 correlation of successive increments
    double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
    long cnt = 0;
    for (int c = 0; c < n; ++c)
        for (int g = 0; g + 2 < m; ++g) {
            double u = drivings[c].value_at(grid[g + 1]) - drivings[c].value_at(grid[g]);
            double v = drivings[c].value_at(grid[g + 2]) - drivings[c].value_at(grid[g + 1]);
            sx += u;
            sy += v;
            sxx += u * u;
            syy += v * v;
            sxy += u * v;
            ++cnt;
        }
    if (cnt > 3) {
        double cov = sxy / cnt - (sx / cnt) * (sy / cnt);
        double vu = sxx / cnt - (sx / cnt) * (sx / cnt);
        double vv = syy / cnt - (sy / cnt) * (sy / cnt);
        rep.lag1_corr = cov / std::sqrt(std::max(vu * vv, 1e-300));
        double zstat = rep.lag1_corr * std::sqrt(static_cast<double>(cnt));
        rep.lag1_pvalue = 2.0 * (1.0 - normal_cdf(std::abs(zstat)));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// martingale tests

namespace {

MartingaleReport run_martingale(double kappa, complex z, int n_traces,
                                const std::vector<double>& checkpoints, std::uint64_t seed,
                                double alpha, bool strip_form) {
    if (!(z.imag() > 0)) throw parameter_error("z must lie in the upper half-plane");
    if (kappa <= 0) throw parameter_error("kappa must be positive");
    if (n_traces < 2) throw parameter_error("need at least two traces");
    std::vector<double> cps = checkpoints;
    std::sort(cps.begin(), cps.end());
    const double T = cps.back();
    const int steps = 4000;
    const double dt = T / steps;
    const double sd = std::sqrt(kappa * dt);

    const int m = static_cast<int>(cps.size());
    std::vector<std::vector<complex>> vals(m, std::vector<complex>(n_traces));
    std::vector<std::uint8_t> swallowed_flag(n_traces, 0);

    par::for_each_index(n_traces, [&](std::int64_t c) {
        CounterRng rng = CounterRng::substream(seed, static_cast<std::uint64_t>(c));
        complex Z = z;
        complex L{0, 0}; // log g_t'(z), integrated along the flow
        double w = 0;
        bool dead = false;
        complex frozen{0, 0};
        int next_cp = 0;
        auto eval = [&]() {
            if (strip_form) return std::exp(alpha * (L - std::log(kPi * (Z - w))));
            return std::exp(alpha * (L - 2.0 * std::log(Z - w)));
        };
        for (int k = 0; k < steps && next_cp < m; ++k) {
            if (!dead) {
                complex s = Z - w;
                complex Znew = w + sqrt_upper(s * s + 4.0 * dt, s);
                L += std::log(s) - std::log(Znew - w);
                Z = Znew;
                if (Z.imag() < 1e-9 || !std::isfinite(Z.real())) {
                    // the point was swallowed by the hull: stop the martingale
                    dead = true;
                    swallowed_flag[c] = 1;
                    frozen = eval();
                }
                w += sd * rng.normal();
            }
            double t_now = (k + 1) * dt;
            while (next_cp < m && t_now >= cps[next_cp] - 0.5 * dt) {
                vals[next_cp][c] = dead ? frozen : eval();
                ++next_cp;
            }
        }
        while (next_cp < m) {
            vals[next_cp][c] = dead ? frozen : eval();
            ++next_cp;
        }
    });

    MartingaleReport rep;
    rep.t = cps;
    rep.reference = strip_form ? std::pow(1.0 / (kPi * z), alpha) : std::pow(1.0 / (z * z), alpha);
    rep.swallowed = 0;
    for (auto f : swallowed_flag) rep.swallowed += f;
    if (rep.swallowed > n_traces / 2)
        throw attrition_error("more than half the traces lost the tracked point");

    rep.max_sigma = 0;
    for (int g = 0; g < m; ++g) {
        complex mean{0, 0};
        for (auto& v : vals[g]) mean += v;
        mean /= static_cast<double>(n_traces);
        double var = 0;
        for (auto& v : vals[g]) var += std::norm(v - mean);
        var /= (n_traces - 1.0) * n_traces;
        rep.mean.push_back(mean);
        rep.stderr_abs.push_back(std::sqrt(var));
        double sig = std::abs(mean - rep.reference) / std::max(std::sqrt(var), 1e-300);
        rep.max_sigma = std::max(rep.max_sigma, sig);
    }
    rep.pass = rep.max_sigma <= 4.0;
    return rep;
}

} // namespace

MartingaleReport martingale_test_phi(double kappa, complex z, int n_traces,
                                     const std::vector<double>& checkpoints, std::uint64_t seed,
                                     double alpha_override) {
    double alpha = std::isnan(alpha_override) ? 8.0 / kappa - 1.0 : alpha_override;
    return run_martingale(kappa, z, n_traces, checkpoints, seed, alpha, true);
}

MartingaleReport martingale_test_psi(double kappa, complex z, int n_traces,
                                     const std::vector<double>& checkpoints, std::uint64_t seed,
                                     double alpha_override) {
    double alpha = std::isnan(alpha_override) ? 3.0 / kappa - 0.5 : alpha_override;
    return run_martingale(kappa, z, n_traces, checkpoints, seed, alpha, false);
}

// ---------------------------------------------------------------------------
// box dimension

std::pair<double, double> box_dimension(std::span<const complex> points,
                                        const std::vector<double>& scales) {
    if (scales.size() < 4) throw scale_range_error("need at least 4 scales");
    double smin = *std::min_element(scales.begin(), scales.end());
    double smax = *std::max_element(scales.begin(), scales.end());
    if (smax / smin < std::pow(10.0, 1.5))
        throw scale_range_error("scales must span at least 1.5 decades");
    if (points.size() < 2) throw scale_range_error("curve too short");

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (auto p : points) {
        xmin = std::min(xmin, p.real());
        xmax = std::max(xmax, p.real());
        ymin = std::min(ymin, p.imag());
        ymax = std::max(ymax, p.imag());
    }
    double diam = std::hypot(xmax - xmin, ymax - ymin);
    if (diam < 10.0 * smax) throw scale_range_error("curve shorter than 10x the largest scale");

    std::vector<double> lx, ly;
    for (double s : scales) {
        std::unordered_set<std::uint64_t> boxes;
        auto put = [&](complex p) {
            std::int32_t ix = static_cast<std::int32_t>(std::floor((p.real() - xmin) / s));
            std::int32_t iy = static_cast<std::int32_t>(std::floor((p.imag() - ymin) / s));
            boxes.insert((static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
                         static_cast<std::uint32_t>(iy));
        };
        for (size_t i = 0; i + 1 < points.size(); ++i) {
            complex a = points[i], b = points[i + 1];
            double len = std::abs(b - a);
            int nsub = std::max(1, static_cast<int>(std::ceil(len / (0.25 * s))));
            for (int j = 0; j <= nsub; ++j)
                put(a + (b - a) * (static_cast<double>(j) / nsub));
        }
        lx.push_back(std::log(1.0 / s));
        ly.push_back(std::log(static_cast<double>(boxes.size())));
    }
    auto fit = fit_line(lx, ly);
    return {fit.slope, fit.r2};
}

// ---------------------------------------------------------------------------
// Markov property test

double chi2_sf(double stat, int dof) {
    // regularized upper incomplete gamma Q(dof/2, stat/2)
    double a = 0.5 * dof, x = 0.5 * stat;
    if (x <= 0) return 1.0;
    auto gamser = [&](double aa, double xx) {
        double ap = aa, sum = 1.0 / aa, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1;
            del *= xx / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-14) break;
        }
        return sum * std::exp(-xx + aa * std::log(xx) - std::lgamma(aa));
    };
    auto gamcf = [&](double aa, double xx) {
        double b = xx + 1 - aa, c = 1e300, d = 1 / b, h = d;
        for (int i = 1; i < 500; ++i) {
            double an = -i * (i - aa);
            b += 2;
            d = an * d + b;
            if (std::abs(d) < 1e-300) d = 1e-300;
            c = b + an / c;
            if (std::abs(c) < 1e-300) c = 1e-300;
            d = 1 / d;
            double del = d * c;
            h *= del;
            if (std::abs(del - 1.0) < 1e-14) break;
        }
        return std::exp(-xx + aa * std::log(xx) - std::lgamma(aa)) * h;
    };
    if (x < a + 1.0) return 1.0 - gamser(a, x);
    return gamcf(a, x);
}

namespace {

// x-position where the curve first crosses the horizontal line y = ycut
double first_crossing_x(const InterfaceCurve& c, double ycut) {
    for (size_t i = 0; i + 1 < c.points.size(); ++i) {
        double y0 = c.points[i].imag(), y1 = c.points[i + 1].imag();
        if ((y0 - ycut) * (y1 - ycut) <= 0 && y0 != y1) {
            double f = (ycut - y0) / (y1 - y0);
            return c.points[i].real() + f * (c.points[i + 1].real() - c.points[i].real());
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace

MarkovReport markov_test(const geometry::DiscreteDomain& domain, double p, int prefix_steps,
                         std::int64_t n_per_arm, std::uint64_t seed, bool mismatch) {
    CounterRng ref_rng = CounterRng::substream(seed, 1);
    auto ref_cfg = models::sample_percolation(domain, p, ref_rng);
    auto sd = interfaces::slit(domain, ref_cfg, prefix_steps);
    std::vector<std::pair<int, std::int8_t>> prefix_sites = sd.forced_sites;

    if (mismatch) {
        // constructed violation: continue in a slit cut by an independent
        // prefix whose tip differs, while still conditioning on the original
        CounterRng alt_rng = CounterRng::substream(seed, 0xa17);
        for (int tries = 0; tries < 1000; ++tries) {
            auto alt_cfg = models::sample_percolation(domain, p, alt_rng);
            auto alt = interfaces::slit(domain, alt_cfg, prefix_steps);
            if (std::abs(alt.new_a - sd.new_a) > 1e-9) {
                sd = alt;
                break;
            }
        }
    }

    const auto& prefix = sd.consumed_prefix;
    double dir = domain.pos[domain.b].imag() >= domain.pos[domain.a].imag() ? 1.0 : -1.0;
    double ycut = prefix.points.back().imag() + dir * 2.0 * domain.lattice.mesh;
    const double binw = 2.0 * domain.lattice.mesh;

    // conditioned arm: rejection sampling on the consulted sites
    std::vector<double> xs_cond;
    std::int64_t attempts = 0;
    CounterRng arm1 = CounterRng::substream(seed, 2);
    const std::int64_t max_attempts =
        n_per_arm * (1LL << std::min(prefix_steps + 6, 40)) + 1000;
    while (static_cast<std::int64_t>(xs_cond.size()) < n_per_arm) {
        if (++attempts > max_attempts)
            throw infeasible_conditioning_error("conditioning acceptance rate too low");
        auto cfg = models::sample_percolation(domain, p, arm1);
        bool match = true;
        for (auto& [site, col] : prefix_sites)
            if (cfg.color[site] != col) {
                match = false;
                break;
            }
        if (!match) continue;
        auto curve = interfaces::trace_interface(cfg);
        double x = first_crossing_x(curve, ycut);
        xs_cond.push_back(std::isfinite(x) ? x : 1e18);
    }
    double acc_rate = static_cast<double>(n_per_arm) / static_cast<double>(attempts);
    if (acc_rate < 1e-3) throw infeasible_conditioning_error("acceptance rate below 1e-3");

    // fresh arm: continuation in the slit domain
    std::vector<double> xs_fresh;
    CounterRng arm2 = CounterRng::substream(seed, 3);
    for (std::int64_t i = 0; i < n_per_arm; ++i) {
        auto curve = interfaces::continue_percolation_interface(sd, p, arm2);
        double x = first_crossing_x(curve, ycut);
        xs_fresh.push_back(std::isfinite(x) ? x : 1e18);
    }

    // chi-square over binned exit positions
    auto bin_of = [&](double x) {
        if (x > 1e17) return std::numeric_limits<int>::max() / 2;
        return static_cast<int>(std::floor(x / binw));
    };
    std::unordered_map<int, std::pair<double, double>> bins;
    for (double x : xs_cond) bins[bin_of(x)].first += 1;
    for (double x : xs_fresh) bins[bin_of(x)].second += 1;

    // pool sparse bins (expected count < 5 under pooling)
    std::vector<std::pair<double, double>> counts;
    for (auto& [k, c] : bins) counts.push_back(c);
    std::sort(counts.begin(), counts.end(),
              [](auto& a, auto& b) { return a.first + a.second > b.first + b.second; });
    std::vector<std::pair<double, double>> pooled;
    std::pair<double, double> rest{0, 0};
    for (auto& c : counts) {
        if (c.first + c.second >= 10) pooled.push_back(c);
        else {
            rest.first += c.first;
            rest.second += c.second;
        }
    }
    if (rest.first + rest.second > 0) pooled.push_back(rest);

    double n1 = static_cast<double>(xs_cond.size()), n2 = static_cast<double>(xs_fresh.size());
    double stat = 0;
    int dof = -1;
    for (auto& [c1, c2] : pooled) {
        double tot = c1 + c2;
        if (tot <= 0) continue;
        double e1 = tot * n1 / (n1 + n2), e2 = tot * n2 / (n1 + n2);
        stat += (c1 - e1) * (c1 - e1) / e1 + (c2 - e2) * (c2 - e2) / e2;
        ++dof;
    }
    dof = std::max(dof, 1);

    MarkovReport rep;
    rep.statistic = stat;
    rep.dof = dof;
    rep.p_value = chi2_sf(stat, dof);
    rep.n_conditioned = static_cast<std::int64_t>(n1);
    rep.n_fresh = static_cast<std::int64_t>(n2);
    rep.acceptance_rate = acc_rate;
    return rep;
}

} // namespace lsle::analysis
