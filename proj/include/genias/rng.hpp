#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace genias {

using Rng = std::mt19937_64;

/// Independent stream for item `index` of a run seeded with `seed`.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

inline std::vector<double> standard_normal(Rng& rng, std::size_t n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) x = dist(rng);
  return out;
}

/// 64-bit FNV-1a, used for content hashes in reports and manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace genias
