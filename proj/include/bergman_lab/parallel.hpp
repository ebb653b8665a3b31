#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bergman_lab {

namespace detail {
inline std::atomic<int>& worker_count_ref() {
  static std::atomic<int> n{1};
  return n;
}
}  // namespace detail

inline void set_worker_count(int n) { detail::worker_count_ref() = std::max(1, n); }
inline int worker_count() { return detail::worker_count_ref(); }

// Runs fn(i) for i in [0, n). Work is claimed dynamically, so callers must write
// results into per-index slots and reduce them afterwards in index order; that
// keeps results independent of the worker count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, int workers = 0) {
  if (workers <= 0) workers = worker_count();
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Fixed chunking of [0, n): chunk boundaries depend only on n and chunk_size.
struct ChunkRange {
  std::size_t begin, end;
};
inline std::vector<ChunkRange> fixed_chunks(std::size_t n, std::size_t chunk_size) {
  std::vector<ChunkRange> out;
  for (std::size_t b = 0; b < n; b += chunk_size) out.push_back({b, std::min(n, b + chunk_size)});
  return out;
}

// Pairwise summation over a fixed sequence.
template <class T>
T pairwise_sum(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 8) {
    T s{};
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}
template <class T>
T pairwise_sum(const std::vector<T>& v) {
  return v.empty() ? T{} : pairwise_sum(v, 0, v.size());
}

}  // namespace bergman_lab
