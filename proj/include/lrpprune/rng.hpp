#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lrpprune {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a path of integer tags.
///
/// derive_seed(master, {dataset, repetition, purpose}) is a pure function, so
/// every consumer that asks for the same path receives the same stream no
/// matter in which order cells run.
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(parent);
  for (std::uint64_t tag : path) s = mix64(s ^ mix64(tag + 0x632be59bd9b4e019ULL));
  return s;
}

/// Purpose tags for derive_seed.
enum class SeedPurpose : std::uint64_t {
  train_data = 1,
  init = 2,
  training = 3,
  reference = 4,
  test = 5,
  noise = 6,
};

constexpr std::uint64_t tag(SeedPurpose p) noexcept { return static_cast<std::uint64_t>(p); }

}  // namespace lrpprune
