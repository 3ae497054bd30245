#pragma once
// Counter-based edge randomness: the state of an edge is a pure function of
// (seed, sample index, absolute edge position), so any edge can be evaluated
// on demand, in any order, from any thread.

#include <cstdint>

#include "bperc/lattice.hpp"

namespace bperc {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Packs an absolute edge position into 64 bits: 20 bits per coordinate
/// (offset by 2^19) and two bits of axis.
template <int D>
constexpr std::uint64_t edge_key(const Edge<D>& e) {
  std::uint64_t k = static_cast<std::uint64_t>(e.axis);
  for (int i = 0; i < D; ++i) k = (k << 20) | (static_cast<std::uint64_t>(e.lower[i] + (1 << 19)) & 0xFFFFFu);
  return k;
}

/// Per-sample stream. uniform(key) is a deterministic value in [0, 1) with 53
/// bits of resolution.
class EdgeStream {
 public:
  EdgeStream(std::uint64_t seed, std::uint64_t sample_index)
      : stream_(splitmix64(splitmix64(seed) ^ (sample_index * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL))) {}

  std::uint64_t bits(std::uint64_t key) const { return splitmix64(stream_ ^ splitmix64(key)); }
  double uniform(std::uint64_t key) const { return static_cast<double>(bits(key) >> 11) * 0x1p-53; }

  template <int D>
  double uniform(const Edge<D>& e) const {
    return uniform(edge_key<D>(e));
  }

 private:
  std::uint64_t stream_;
};

}  // namespace bperc
