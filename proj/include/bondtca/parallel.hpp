#pragma once

// OpenMP is optional: with BONDTCA_USE_OPENMP unset the loops compile to
// their serial form.

#if BONDTCA_USE_OPENMP
#include <omp.h>
#define BONDTCA_PARALLEL_FOR _Pragma("omp parallel for schedule(static)")
#define BONDTCA_PARALLEL_FOR_DYNAMIC _Pragma("omp parallel for schedule(dynamic, 1)")
#else
#define BONDTCA_PARALLEL_FOR
#define BONDTCA_PARALLEL_FOR_DYNAMIC
#endif

namespace bondtca {

/// Selects the serial reference or the OpenMP implementation of a kernel.
enum class Execution { serial, parallel };

inline int max_threads() {
#if BONDTCA_USE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#if BONDTCA_USE_OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

}  // namespace bondtca
