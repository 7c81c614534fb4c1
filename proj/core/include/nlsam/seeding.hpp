#pragma once

#include <cstdint>
#include <initializer_list>

namespace nlsam {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-dependent combination of several keys into one stream seed.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t k : keys) h = mix_seed(h ^ mix_seed(k));
  return h;
}

}  // namespace nlsam
