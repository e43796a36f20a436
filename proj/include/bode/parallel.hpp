#ifndef BODE_PARALLEL_HPP
#define BODE_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bode::exec {

// Every data-parallel loop in the library goes through parallel_for /
// parallel_sum below. Mode::serial runs the identical loops sequentially and
// is the reference the parallel path is tested against. Results are
// bit-identical between modes and across thread counts: work items write to
// disjoint slots, and reductions accumulate fixed-size chunks in index order.

enum class Mode { serial, openmp };

inline std::atomic<Mode>& mode_flag() {
#ifdef _OPENMP
  static std::atomic<Mode> m{Mode::openmp};
#else
  static std::atomic<Mode> m{Mode::serial};
#endif
  return m;
}

inline Mode mode() { return mode_flag().load(std::memory_order_relaxed); }
inline void set_mode(Mode m) { mode_flag().store(m, std::memory_order_relaxed); }

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <class F>
void parallel_for(std::ptrdiff_t n, F&& body) {
#ifdef _OPENMP
  if (mode() == Mode::openmp && n > 1) {
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return;
  }
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
}

// Deterministic sum of body(i) for i in [0, n). The chunk size is a fixed
// constant (not derived from the thread count), partials are stored per chunk
// and combined serially in chunk order, so the rounding sequence does not
// depend on the schedule.
template <class F>
double parallel_sum(std::ptrdiff_t n, F&& body) {
  constexpr std::ptrdiff_t kChunk = 2048;
  const std::ptrdiff_t n_chunks = (n + kChunk - 1) / kChunk;
  if (n <= 0) return 0.0;
  std::vector<double> partial(static_cast<std::size_t>(n_chunks), 0.0);
  parallel_for(n_chunks, [&](std::ptrdiff_t c) {
    const std::ptrdiff_t lo = c * kChunk;
    const std::ptrdiff_t hi = lo + kChunk < n ? lo + kChunk : n;
    double s = 0.0;
    for (std::ptrdiff_t i = lo; i < hi; ++i) s += body(i);
    partial[static_cast<std::size_t>(c)] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace bode::exec

#endif
