#include "seesaw/threading.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace seesaw {

int thread_count() {
  static const int n = [] {
    if (const char* env = std::getenv("SEESAW_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? int(hw) : 1;
  }();
  return n;
}

void parallel_for(std::int64_t total, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (total <= 0) return;
  const int workers = int(std::min<std::int64_t>(thread_count(), total));
  if (workers <= 1) {
    fn(0, total);
    return;
  }
  const std::int64_t chunk = (total + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) {
    std::int64_t b = t * chunk, e = std::min<std::int64_t>(total, b + chunk);
    if (b >= e) break;
    threads.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(0, std::min<std::int64_t>(total, chunk));
  for (auto& th : threads) th.join();
}

}  // namespace seesaw
