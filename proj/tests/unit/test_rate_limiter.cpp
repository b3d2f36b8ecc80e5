#include <doctest.h>

#include <thread>

#include "drylab/errors.hpp"
#include "drylab/search/rate_limiter.hpp"

using namespace drylab::search;

TEST_CASE("rate limiter never exceeds the per-second cap") {
  RateLimiter limiter(3);
  std::vector<std::thread> threads;
  for (int t = 0; t < 2; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 4; ++i) limiter.acquire();
    });
  for (auto& th : threads) th.join();

  auto stamps = limiter.history();
  REQUIRE(stamps.size() == 8);
  // Sliding-window property: any window of one second holds at most 3.
  for (size_t i = 0; i < stamps.size(); ++i) {
    int in_window = 0;
    for (size_t j = 0; j < stamps.size(); ++j)
      if (stamps[j] >= stamps[i] &&
          stamps[j] - stamps[i] < std::chrono::milliseconds(999))
        ++in_window;
    CHECK(in_window <= 3);
  }
}

TEST_CASE("rate limiter rejects nonpositive limits") {
  CHECK_THROWS_AS(RateLimiter(0), drylab::ValidationError);
}
