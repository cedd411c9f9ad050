#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lsle {

// Counter-based generator: splitmix64 finalizer applied to (key, counter).
// Every sampler takes one of these; a run is a pure function of (params, seed).
// Parallel substreams are derived per work item index, never per thread, so
// results are independent of the thread count.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Documented substream derivation: key_i = mix(mix(master) + i + 1).
    static CounterRng substream(std::uint64_t master, std::uint64_t index) {
        return CounterRng(mix(mix(master) + index + 1));
    }

    std::uint64_t next_u64() { return mix(key_ ^ (ctr_++ * 0xd1342543de82ef95ULL)); }

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        // 128-bit multiply rejection-free mapping (bias < 2^-64, irrelevant here)
        return static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    // Box-Muller; exactly two uniforms per pair, second value cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01(); // (0, 1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double c = std::cos(2.0 * std::numbers::pi * u2);
        double s = std::sin(2.0 * std::numbers::pi * u2);
        spare_ = r * s;
        have_spare_ = true;
        return r * c;
    }

    static constexpr const char* algorithm_name() { return "splitmix64-counter"; }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
    double spare_ = 0;
    bool have_spare_ = false;
};

} // namespace lsle
