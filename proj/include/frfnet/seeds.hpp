#pragma once

#include <cstdint>

namespace frfnet {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stage identifiers for seed derivation. Values are part of the file format
/// contract: changing them changes every generated dataset.
enum class SeedStage : std::uint64_t {
  measurement = 1,  // per-scenario excitation and measurement noise
  split = 3,
  init = 4,
  shuffle = 5,
  probe = 6,  // extra scenarios outside the dataset, e.g. severity sweeps
};

/// Seed for item `counter` of `stage`:
///   splitmix64(splitmix64(master ^ stage * 0x100000001B3) + counter)
/// so every stage and item can be regenerated on its own.
constexpr std::uint64_t derive_seed(std::uint64_t master, SeedStage stage, std::uint64_t counter) {
  return splitmix64(splitmix64(master ^ (static_cast<std::uint64_t>(stage) * 0x100000001B3ULL)) + counter);
}

}  // namespace frfnet
