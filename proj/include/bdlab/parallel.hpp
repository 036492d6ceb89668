#pragma once

// Deterministic parallel reduction. Work items are grouped into fixed-size
// chunks; every chunk is reduced sequentially in item order and the chunk
// results are combined by a pairwise tree in chunk order. The result is
// therefore independent of the number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace bdlab {

struct ParallelOptions {
  int threads = 1;
  std::size_t chunk = 1024;
};

template <class Acc, class MakeAcc, class Process, class Merge>
Acc parallel_reduce(std::size_t n_items, const ParallelOptions& opt, MakeAcc make_acc, Process process,
                    Merge merge) {
  const std::size_t chunk = std::max<std::size_t>(1, opt.chunk);
  const std::size_t n_chunks = (n_items + chunk - 1) / chunk;
  if (n_chunks == 0) return make_acc();
  std::vector<std::optional<Acc>> partial(n_chunks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        Acc acc = make_acc();
        const std::size_t end = std::min(n_items, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) process(i, acc);
        partial[c].emplace(std::move(acc));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_chunks);
        return;
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(opt.threads, static_cast<int>(n_chunks)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t stride = 1; stride < n_chunks; stride *= 2)
    for (std::size_t i = 0; i + stride < n_chunks; i += 2 * stride) merge(*partial[i], std::move(*partial[i + stride]));
  return std::move(*partial[0]);
}

/// Welford accumulator with Chan's pairwise merge.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double d = o.mean - mean;
    const double total = na + nb;
    mean += d * nb / total;
    m2 += o.m2 + d * d * na * nb / total;
    n += o.n;
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double stderr_of_mean() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

}  // namespace bdlab
