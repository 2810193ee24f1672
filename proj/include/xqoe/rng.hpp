#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace xqoe {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for an independent substream, keyed by a base seed and any number of indices.
template <typename... Ix>
constexpr std::uint64_t substream_seed(std::uint64_t seed, Ix... ix) {
  std::uint64_t h = splitmix64(seed);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(ix))), ...);
  return h;
}

using Engine = std::mt19937_64;

template <typename... Ix>
Engine make_engine(std::uint64_t seed, Ix... ix) {
  return Engine(substream_seed(seed, ix...));
}

/// Uniform in [0, 1) from a hashed counter.
template <typename... Ix>
double hash_uniform(std::uint64_t seed, Ix... ix) {
  return static_cast<double>(substream_seed(seed, ix...) >> 11) * 0x1.0p-53;
}

/// Standard normal from a hashed counter (Box-Muller on two hashed uniforms).
/// The value depends only on the key, never on evaluation order.
template <typename... Ix>
double hash_normal(std::uint64_t seed, Ix... ix) {
  const std::uint64_t k = substream_seed(seed, ix...);
  const double u1 = (static_cast<double>(splitmix64(k) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(splitmix64(k ^ 0x5851F42D4C957F2DULL) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline unsigned worker_count(std::size_t jobs) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(hw, std::max<std::size_t>(jobs, 1)));
}

/// Runs fn(job) for job in [0, jobs) across a small thread pool. Results must be
/// written to per-job slots so the outcome is independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t jobs, Fn&& fn) {
  const unsigned workers = worker_count(jobs);
  if (workers <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t j = w; j < jobs; j += workers) fn(j);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace xqoe
