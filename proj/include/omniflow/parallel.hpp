#pragma once

#ifdef OMNIFLOW_HAVE_OPENMP
#include <omp.h>
#endif

namespace omniflow {

// Runs body(i) for i in [0, n). Iterations must write disjoint outputs.
template <typename Body>
void parallel_for(int n, Body&& body) {
#ifdef OMNIFLOW_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) body(i);
#else
  for (int i = 0; i < n; ++i) body(i);
#endif
}

/// Caps worker threads; values < 1 leave the runtime default.
inline void set_thread_limit(int n) {
#ifdef OMNIFLOW_HAVE_OPENMP
  if (n >= 1) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace omniflow
