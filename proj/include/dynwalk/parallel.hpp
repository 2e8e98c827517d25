#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace dynwalk {

/// Wall-clock cap for a single run, read from DYNWALK_BUDGET_SECONDS.
class RunBudget {
 public:
  /// Restarts the clock; called at the start of every CLI run.
  static void start();
  /// Throws BudgetExceeded once the configured number of seconds has elapsed.
  static void check();
  static std::optional<double> limit_seconds();
};

inline constexpr std::uint64_t kReplicaBlock = 256;

/// Runs `body(replica, partial)` for every replica, fanned across `jobs`
/// threads in fixed blocks. Block partials are folded into the result strictly
/// in replica order, so the output does not depend on the worker count.
template <class Partial, class MakePartial, class Body, class Merge>
Partial parallel_replicas(std::uint64_t replicas, int jobs, MakePartial make_partial, Body body, Merge merge) {
  Partial result = make_partial();
  const std::uint64_t blocks = (replicas + kReplicaBlock - 1) / kReplicaBlock;
  auto run_block = [&](std::uint64_t b) {
    Partial partial = make_partial();
    const std::uint64_t lo = b * kReplicaBlock;
    const std::uint64_t hi = std::min(replicas, lo + kReplicaBlock);
    for (std::uint64_t r = lo; r < hi; ++r) body(r, partial);
    return partial;
  };

  jobs = std::max(1, jobs);
  if (jobs == 1 || blocks <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) {
      RunBudget::check();
      Partial partial = run_block(b);
      merge(result, partial);
    }
    return result;
  }

  std::atomic<std::uint64_t> next{0};
  std::mutex mutex;
  std::condition_variable cv;
  std::map<std::uint64_t, Partial> pending;
  std::uint64_t merged = 0;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        RunBudget::check();
        Partial partial = run_block(b);
        std::unique_lock lock(mutex);
        // Bound memory: wait while too far ahead of the merge cursor.
        cv.wait(lock, [&] { return failure || b < merged + 4 * static_cast<std::uint64_t>(jobs); });
        if (failure) return;
        pending.emplace(b, std::move(partial));
        while (!pending.empty() && pending.begin()->first == merged) {
          merge(result, pending.begin()->second);
          pending.erase(pending.begin());
          ++merged;
        }
        cv.notify_all();
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next.store(blocks);
        cv.notify_all();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return result;
}

}  // namespace dynwalk
