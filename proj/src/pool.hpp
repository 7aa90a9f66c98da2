#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

// Bounded worker pool for sweep jobs.  body(i) must write only into slot i of
// caller-owned storage; merging is then the natural index order, so results
// are identical for any thread count and any completion order.  If several
// jobs throw, the one with the smallest index is rethrown — error behavior is
// deterministic too.
namespace doslab::app {

template <typename F>
void parallel_for_ordered(long jobs, int threads, F&& body) {
  if (jobs <= 0) return;
  if (threads <= 0) threads = 1;
  threads = static_cast<int>(std::min<long>(threads, jobs));
  if (threads == 1) {
    for (long i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
  std::vector<std::thread> crew;
  crew.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t)
    crew.emplace_back([&] {
      for (;;) {
        long i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          body(i);
        } catch (...) {
          errors[static_cast<size_t>(i)] = std::current_exception();
        }
      }
    });
  for (std::thread& th : crew) th.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace doslab::app
