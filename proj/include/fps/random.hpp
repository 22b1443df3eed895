#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fps {

using Rng = std::mt19937_64;

// Reserved stream ids for non-agent random streams. Agent streams use the
// agent id directly, so these sit far above any realistic population size.
inline constexpr std::uint64_t kPersonaStreamId = 0x50455253304e41ULL;
inline constexpr std::uint64_t kSchedulerStreamId = 0x5343484544554cULL;

inline constexpr std::uint64_t kDayConstant = 0x9E3779B97F4A7C15ULL;

// Per-stream seed: run_seed ^ stream_id ^ (day * large odd constant).
// Every (stream, day) pair gets an independent engine, which keeps agent
// updates order-independent and safe to run in parallel.
inline std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t stream_id,
                                 std::uint64_t day) {
  return run_seed ^ stream_id ^ (day * kDayConstant);
}

// Unbiased integer in [0, n). Rejection sampling instead of
// std::uniform_int_distribution so traces do not depend on the standard
// library implementation.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// k distinct values from {0..n-1} \ {exclude}, via partial Fisher-Yates.
// Result order is the draw order.
inline std::vector<int> sample_distinct(Rng& rng, int n, int k, int exclude) {
  std::vector<int> pool;
  pool.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    if (i != exclude) pool.push_back(i);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   uniform_below(rng, pool.size() - static_cast<std::size_t>(i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    out.push_back(pool[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace fps
