#pragma once

#include <cstdint>
#include <cstdlib>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lsle::par {

// Thread count: LATTICE_SLE_THREADS wins, then OpenMP default, then 1.
inline int max_threads() {
    if (const char* env = std::getenv("LATTICE_SLE_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Serial reference path. Kept separate so tests and the benchmark can compare
// it against the OpenMP path; both must produce identical results because all
// randomness is derived from the work-item index.
template <class F>
void for_each_index_serial(std::int64_t n, F&& f) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
}

template <class F>
void for_each_index(std::int64_t n, F&& f) {
#ifdef _OPENMP
    int nt = max_threads();
    if (nt > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
        for (std::int64_t i = 0; i < n; ++i) f(i);
        return;
    }
#endif
    for_each_index_serial(n, std::forward<F>(f));
}

} // namespace lsle::par
