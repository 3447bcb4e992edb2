// Data-parallel loops over independent work items, with serial references.
#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>

namespace tgdc {

// OpenMP thread count, capped by TGD_CONSERVE_THREADS when set.
int thread_count();

template <class Pred>
size_t first_index_serial(size_t n, Pred&& pred) {
  for (size_t i = 0; i < n; ++i)
    if (pred(i)) return i;
  return n;
}

// Smallest i in [0, n) with pred(i), or n. Items beyond a hit are skipped,
// so the answer equals the serial one. Exceptions are rethrown after the
// loop (the one from the smallest index).
template <class Pred>
size_t first_index(size_t n, Pred&& pred, bool parallel = true) {
  if (!parallel || n < 2 || thread_count() < 2) return first_index_serial(n, pred);
  std::atomic<size_t> best{n};
  std::mutex mu;
  std::exception_ptr err;
  size_t err_at = n;
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (long long k = 0; k < count; ++k) {
    size_t i = static_cast<size_t>(k);
    if (i > best.load(std::memory_order_relaxed)) continue;
    try {
      if (pred(i)) {
        size_t cur = best.load();
        while (i < cur && !best.compare_exchange_weak(cur, i)) {
        }
      }
    } catch (...) {
      std::lock_guard lk(mu);
      if (i < err_at) {
        err_at = i;
        err = std::current_exception();
      }
    }
  }
  if (err && err_at < best.load()) std::rethrow_exception(err);
  return best.load();
}

template <class Fn>
void for_each_index(size_t n, Fn&& fn, bool parallel = true) {
  if (!parallel || n < 2 || thread_count() < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr err;
  size_t err_at = n;
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (long long k = 0; k < count; ++k) {
    size_t i = static_cast<size_t>(k);
    try {
      fn(i);
    } catch (...) {
      std::lock_guard lk(mu);
      if (i < err_at) {
        err_at = i;
        err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace tgdc
