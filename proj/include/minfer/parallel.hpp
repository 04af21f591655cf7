#ifndef MINFER_PARALLEL_H
#define MINFER_PARALLEL_H

#ifdef _OPENMP
#include <omp.h>
#endif

#include <thread>

namespace minfer {

inline int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n ? static_cast<int>(n) : 1;
}

/* Runs body(i) for i in [0, count). threads <= 1 runs the plain serial loop
 * kept as the reference path; with more threads the same body is dispatched
 * via OpenMP. Each index writes only its own output slot and draws from its
 * own counter-based RNG stream, so results are identical either way. */
template <typename Body>
void for_each_index(int count, int threads, const Body& body) {
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int i = 0; i < count; ++i) body(i);
#else
  for (int i = 0; i < count; ++i) body(i);
#endif
}

}  // namespace minfer

#endif
