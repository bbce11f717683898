#pragma once
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nsk {

// Applies the NSK_THREADS cap (if set) to the OpenMP runtime. Called once
// by CLI main; harmless to call again.
inline void apply_thread_cap() {
#ifdef _OPENMP
    if (const char* s = std::getenv("NSK_THREADS")) {
        int n = std::atoi(s);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

inline int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Deterministic grid reduction: each row is summed left-to-right by exactly
// one thread, then rows are folded in index order. The result is bitwise
// identical for any thread count, which the run-manifest checksums rely on.
template <class RowSum>
double det_row_sum(int ny, RowSum&& row_sum) {
    std::vector<double> rows(static_cast<size_t>(ny), 0.0);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) rows[static_cast<size_t>(j)] = row_sum(j);
    double total = 0.0;
    for (int j = 0; j < ny; ++j) total += rows[static_cast<size_t>(j)];
    return total;
}

// Deterministic max over rows. Max is order-independent for finite values;
// the row split just mirrors det_row_sum.
template <class RowMax>
double det_row_max(int ny, RowMax&& row_max) {
    std::vector<double> rows(static_cast<size_t>(ny), 0.0);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) rows[static_cast<size_t>(j)] = row_max(j);
    double best = 0.0;
    for (int j = 0; j < ny; ++j) best = rows[static_cast<size_t>(j)] > best ? rows[static_cast<size_t>(j)] : best;
    return best;
}

} // namespace nsk
