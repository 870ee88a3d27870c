#pragma once

// Index-parallel loop used by the batch kernels. `Policy::Serial` is the
// reference path kept for testing; `Policy::Parallel` distributes the same
// per-index work over OpenMP threads. Work items must be independent, so
// both policies produce identical results.

#include <cstddef>
#include <exception>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace eptrack::exec {

enum class Policy { Serial, Parallel };

inline int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#if defined(_OPENMP)
    if (n > 0) {
        omp_set_num_threads(n);
    }
#else
    (void)n;
#endif
}

/// Runs fn(i) for i in [0, n). The first exception (lowest index) is rethrown
/// after all items finish.
template <typename Fn>
void for_each_index(std::size_t n, Policy policy, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    if (policy == Policy::Serial) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
        for (long long i = 0; i < count; ++i) {
            try {
                fn(static_cast<std::size_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace eptrack::exec
