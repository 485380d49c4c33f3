#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

namespace cgue {

/// SplitMix64 finalizer; used to derive independent stream keys.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream key for (seed, index, domain). Counter-based: no state is shared
/// between samples, so results do not depend on scheduling.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index,
                                   std::uint64_t domain = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ index) ^ (domain * 0x632be59bd9b4e019ULL));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t index, std::uint64_t domain = 0) {
  const auto key = stream_key(seed, index, domain);
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(domain), static_cast<std::uint32_t>(index)};
  return Engine(seq);
}

/// Domain tags keep the streams of different consumers apart.
namespace domain {
inline constexpr std::uint64_t sample = 1;
inline constexpr std::uint64_t radius = 2;
inline constexpr std::uint64_t constraints = 3;
inline constexpr std::uint64_t directions = 4;
inline constexpr std::uint64_t haar = 5;
inline constexpr std::uint64_t moments = 6;
}  // namespace domain

/// Runs f(i) for i in [0, n) on up to `threads` workers with static chunking.
/// f must only write to slot i of its output.
template <typename F>
void parallel_for(std::int64_t n, int threads, F&& f) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }
  const auto workers = static_cast<std::int64_t>(std::min<std::int64_t>(threads, n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::int64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::int64_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace cgue
