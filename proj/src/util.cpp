#include "levyhomog/util.hpp"

#include <atomic>

namespace levyhomog {

static std::atomic<int> g_workers{0};

int worker_threads() {
  int w = g_workers.load();
  if (w <= 0) {
    w = static_cast<int>(std::thread::hardware_concurrency());
    if (w <= 0) w = 1;
  }
  return w;
}

void set_worker_threads(int n) { g_workers.store(n); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const int workers = worker_threads();
  if (workers <= 1 || count < 4) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int nthreads = std::min<std::size_t>(workers, count) - 1;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}

}  // namespace levyhomog
