#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pujoint {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
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

// Every random stream in a trial is derived from the single trial seed plus a
// purpose tag (and optionally a counter such as the epoch index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                    std::uint64_t counter = 0) noexcept {
  return mix64(mix64(seed ^ hash_tag(tag)) + counter);
}

inline Rng make_rng(std::uint64_t seed, std::string_view tag, std::uint64_t counter = 0) {
  return Rng(derive_seed(seed, tag, counter));
}

}  // namespace pujoint
