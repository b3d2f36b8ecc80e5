#pragma once

#include <chrono>
#include <deque>
#include <mutex>
#include <vector>

namespace drylab::search {

/// Sliding-window request limiter shared by every E-utilities call in a
/// run: at most `max_per_second` acquisitions in any one-second window.
/// acquire() blocks callers until a slot frees up.
class RateLimiter {
 public:
  explicit RateLimiter(int max_per_second);

  void acquire();

  /// Acquisition timestamps, for tests asserting the window property.
  std::vector<std::chrono::steady_clock::time_point> history() const;

 private:
  int max_per_second_;
  mutable std::mutex mutex_;
  std::deque<std::chrono::steady_clock::time_point> window_;
  std::vector<std::chrono::steady_clock::time_point> history_;
};

}  // namespace drylab::search
