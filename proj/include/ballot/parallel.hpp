#pragma once

#include <cstdint>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ballot {

// Trial engine. f(trial) must be a pure function of the trial index (deriving
// its own rng stream), and must write its result into storage indexed by the
// trial, so the merged output is identical for every thread count.

template <class F>
void run_trials_serial(int64_t n_trials, F&& f) {
  for (int64_t t = 0; t < n_trials; ++t) f(t);
}

template <class F>
void run_trials(int64_t n_trials, int threads, F&& f) {
  if (threads <= 1) {
    run_trials_serial(n_trials, std::forward<F>(f));
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int64_t t = 0; t < n_trials; ++t) f(t);
#else
  run_trials_serial(n_trials, std::forward<F>(f));
#endif
}

}  // namespace ballot
