#include "drylab/search/rate_limiter.hpp"

#include <thread>
#include <vector>

#include "drylab/errors.hpp"

namespace drylab::search {

RateLimiter::RateLimiter(int max_per_second) : max_per_second_(max_per_second) {
  if (max_per_second < 1) throw ValidationError("rate limit must be >= 1 per second");
}

void RateLimiter::acquire() {
  using namespace std::chrono;
  for (;;) {
    steady_clock::time_point wait_until;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto now = steady_clock::now();
      while (!window_.empty() && now - window_.front() >= seconds(1)) window_.pop_front();
      if (static_cast<int>(window_.size()) < max_per_second_) {
        window_.push_back(now);
        history_.push_back(now);
        return;
      }
      wait_until = window_.front() + seconds(1);
    }
    std::this_thread::sleep_until(wait_until + milliseconds(1));
  }
}

std::vector<std::chrono::steady_clock::time_point> RateLimiter::history() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return history_;
}

}  // namespace drylab::search
