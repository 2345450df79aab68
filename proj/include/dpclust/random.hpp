#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dpclust {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used as a keyed hash, not as a generator.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives an independent 64-bit seed for (module tag, instance ids...) from
/// a root seed. Every random stream in the library flows through here so a
/// single root seed reproduces a whole run.
template <typename... Ids>
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, Ids... ids) noexcept {
  std::uint64_t h = mix64(root ^ hash_tag(tag));
  ((h = mix64(h ^ mix64(static_cast<std::uint64_t>(ids)))), ...);
  return h;
}

inline Rng make_rng(std::uint64_t root, std::string_view tag) { return Rng{derive_seed(root, tag)}; }

template <typename... Ids>
Rng make_rng(std::uint64_t root, std::string_view tag, Ids... ids) {
  return Rng{derive_seed(root, tag, ids...)};
}

/// Uniform double in the open interval (0, 1) from 53 random bits.
constexpr double unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform01(Rng& rng) { return unit_open(rng()); }

}  // namespace dpclust
