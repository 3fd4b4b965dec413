#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ceilkit {

using Rng = std::mt19937_64;

// splitmix64 finalizer chained over all parts; used to derive independent
// streams from (run seed, iteration, epoch, document, ...) tuples.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::uint64_t p : parts) {
    h += p + 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    h = z ^ (z >> 31);
  }
  return h;
}

inline Rng make_rng(std::initializer_list<std::uint64_t> parts) { return Rng(mix_seed(parts)); }

}  // namespace ceilkit
