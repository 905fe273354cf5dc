#pragma once

#include <cstdint>
#include <cstring>
#include <functional>
#include <thread>
#include <vector>

namespace levyhomog {

/// Global worker count for the data-parallel maps. 0 means hardware concurrency.
int worker_threads();
void set_worker_threads(int n);

/// Chunked parallel map over [0, count). Falls back to a serial loop for
/// small counts or a single worker.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t seed = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a_doubles(const double* v, std::size_t count,
                                   std::uint64_t seed = 1469598103934665603ull) {
  return fnv1a(v, count * sizeof(double), seed);
}

}  // namespace levyhomog
