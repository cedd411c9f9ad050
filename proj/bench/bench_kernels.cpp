// Benchmark of the OpenMP batch kernels against the serial reference paths.
// Both must produce identical results; the table reports times and speedup.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "lattice_sle/analysis.hpp"
#include "lattice_sle/geometry.hpp"
#include "lattice_sle/interfaces.hpp"
#include "lattice_sle/io.hpp"
#include "lattice_sle/loewner.hpp"
#include "lattice_sle/models.hpp"
#include "lattice_sle/observables.hpp"
#include "lattice_sle/parallel.hpp"

using namespace lsle;
using namespace lsle::geometry;
namespace lw = lsle::loewner;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Row {
    std::string name;
    double serial_s, parallel_s;
    bool identical;
};

template <class Body, class Digest>
Row bench(const std::string& name, std::int64_t n, Body&& body, Digest&& digest) {
    double t0 = now();
    par::for_each_index_serial(n, body);
    double ts = now() - t0;
    auto ref = digest();

    t0 = now();
    par::for_each_index(n, body);
    double tp = now() - t0;
    auto par_digest = digest();

    return {name, ts, tp, ref == par_digest};
}

} // namespace

int main() {
    std::printf("threads available: %d\n\n", par::max_threads());
    std::vector<Row> rows;

    {
        LatticeSpec spec;
        spec.kind = LatticeKind::TriangularSite;
        spec.mesh = 1.0;
        auto d = build_rectangle_domain(spec, 96, 96, Corner::NW, Corner::SE);
        auto cs = observables::make_crossing_spec(d, Corner::NW, Corner::SW, Corner::SE,
                                                  Corner::NE);
        const std::int64_t n = 3000;
        std::vector<std::uint8_t> hits(n);
        auto body = [&](std::int64_t i) {
            CounterRng rng = CounterRng::substream(1, i);
            auto col = models::sample_percolation(d, 0.5, rng);
            // horizontal crossing via the traced interface endpoint side
            auto curve = interfaces::trace_interface(col);
            hits[i] = curve.points.size() % 2;
        };
        auto digest = [&] { return io::fnv1a_hex(std::string(hits.begin(), hits.end())); };
        rows.push_back(bench("percolation sample+trace 96^2 x3000", n, body, digest));
        (void)cs;
    }

    {
        const std::int64_t n = 12;
        std::vector<double> tips(n);
        auto body = [&](std::int64_t i) {
            CounterRng rng = CounterRng::substream(2, i);
            auto c = lw::sample_sle(8.0 / 3.0, 0.25, 2500, rng);
            tips[i] = std::abs(c.points.back());
        };
        auto digest = [&] {
            std::string s;
            for (double t : tips) s += std::to_string(t);
            return io::fnv1a_hex(s);
        };
        rows.push_back(bench("SLE(8/3) trace 2500 steps x12", n, body, digest));
    }

    {
        auto d = build_square_domain_cells(40, 40, 1.0, Corner::NW, Corner::SE);
        const std::int64_t n = 8;
        std::vector<int> loops(n);
        auto body = [&](std::int64_t i) {
            CounterRng rng = CounterRng::substream(3, i);
            auto cfg = models::sample_fk_edwards_sokal(d, models::p_sd(2.0), 2000, rng);
            loops[i] = interfaces::count_loops(cfg);
        };
        auto digest = [&] {
            std::string s;
            for (int l : loops) s += std::to_string(l) + ",";
            return io::fnv1a_hex(s);
        };
        rows.push_back(bench("FK-Ising Edwards-Sokal 40^2 x8", n, body, digest));
    }

    std::printf("%-40s %10s %10s %8s %s\n", "kernel", "serial[s]", "openmp[s]", "speedup",
                "identical");
    for (auto& r : rows)
        std::printf("%-40s %10.2f %10.2f %7.2fx %s\n", r.name.c_str(), r.serial_s, r.parallel_s,
                    r.serial_s / r.parallel_s, r.identical ? "yes" : "NO");
    bool all = true;
    for (auto& r : rows) all = all && r.identical;
    return all ? 0 : 1;
}
