#pragma once
// Exact counts behind the exponential decay of bad separating components:
// lattice animals on the box lattice, integer partitions, parity packing of
// box sets into pairwise disjoint boxes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <unordered_set>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "bperc/errors.hpp"
#include "bperc/lattice.hpp"
#include "bperc/stats.hpp"

namespace bperc {

using BigInt = boost::multiprecision::cpp_int;

template <int D>
std::vector<std::array<int, D>> neighbor_offsets(Adjacency mode) {
  std::vector<std::array<int, D>> out;
  if (mode == Adjacency::axis) {
    for (int a = 0; a < D; ++a)
      for (int s : {-1, 1}) {
        std::array<int, D> o{};
        o[a] = s;
        out.push_back(o);
      }
    return out;
  }
  std::array<int, D> o{};
  std::function<void(int)> rec = [&](int a) {
    if (a == D) {
      if (std::any_of(o.begin(), o.end(), [](int v) { return v != 0; })) out.push_back(o);
      return;
    }
    for (int s : {-1, 0, 1}) {
      o[a] = s;
      rec(a + 1);
    }
  };
  rec(0);
  return out;
}

struct AnimalCensus {
  int dim = 0;
  Adjacency mode = Adjacency::axis;
  std::vector<std::uint64_t> fixed;       // index n: animals up to translation
  std::vector<std::uint64_t> containing;  // index n: animals containing the origin box = n * fixed
  std::uint64_t states = 0;

  std::size_t n_max() const { return containing.size() - 1; }
  double ratio(std::size_t n) const {
    if (n < 2 || n > n_max()) throw InvalidArgument("AnimalCensus::ratio: n out of range");
    return static_cast<double>(containing[n]) / static_cast<double>(containing[n - 1]);
  }
};

namespace detail {

template <int D>
class RedelmeierCounter {
 public:
  RedelmeierCounter(std::size_t n_max, Adjacency mode, std::uint64_t budget)
      : n_max_(n_max), budget_(budget), offsets_(neighbor_offsets<D>(mode)), counts_(n_max + 1, 0) {
    side_ = 2 * static_cast<int>(n_max) + 3;
    std::size_t cells = 1;
    for (int i = 0; i < D; ++i) cells *= static_cast<std::size_t>(side_);
    seen_.assign(cells, 0);
    stride_[D - 1] = 1;
    for (int i = D - 2; i >= 0; --i) stride_[i] = stride_[i + 1] * side_;
  }

  std::vector<std::uint64_t> run() {
    const std::array<int, D> origin{};
    std::vector<std::array<int, D>> untried{origin};
    seen_[index(origin)] = 1;
    recurse(untried, 0);
    return counts_;
  }
  std::uint64_t states() const { return states_; }

 private:
  // Cells lexicographically >= origin, most significant axis last.
  static bool allowed(const std::array<int, D>& c) {
    for (int i = D - 1; i >= 0; --i) {
      if (c[i] > 0) return true;
      if (c[i] < 0) return false;
    }
    return true;
  }
  std::size_t index(const std::array<int, D>& c) const {
    std::size_t k = 0;
    for (int i = 0; i < D; ++i) k += static_cast<std::size_t>(c[i] + side_ / 2) * static_cast<std::size_t>(stride_[i]);
    return k;
  }

  void recurse(std::vector<std::array<int, D>> untried, std::size_t size) {
    while (!untried.empty()) {
      const auto cell = untried.back();
      untried.pop_back();
      if (++states_ > budget_) throw InvalidArgument("count_animals: enumeration budget exceeded");
      ++counts_[size + 1];
      if (size + 1 == n_max_) continue;
      std::vector<std::size_t> added;
      auto next = untried;
      for (const auto& o : offsets_) {
        std::array<int, D> nb;
        for (int i = 0; i < D; ++i) nb[i] = cell[i] + o[i];
        if (!allowed(nb)) continue;
        const std::size_t k = index(nb);
        if (seen_[k]) continue;
        seen_[k] = 1;
        added.push_back(k);
        next.push_back(nb);
      }
      recurse(std::move(next), size + 1);
      for (auto k : added) seen_[k] = 0;
    }
  }

  std::size_t n_max_;
  std::uint64_t budget_;
  std::vector<std::array<int, D>> offsets_;
  std::vector<std::uint64_t> counts_;
  std::vector<char> seen_;
  std::array<int, D> stride_{};
  int side_ = 0;
  std::uint64_t states_ = 0;
};

}  // namespace detail

/// Exact animal counts on Z^D with axis or ⊠ adjacency, by Redelmeier's
/// method. `budget` caps the number of generated animals.
template <int D>
AnimalCensus count_animals(Adjacency mode, std::size_t n_max, std::uint64_t budget = 100'000'000) {
  if (n_max < 1 || n_max > 10) throw InvalidArgument("count_animals: need 1 <= n_max <= 10");
  detail::RedelmeierCounter<D> counter(n_max, mode, budget);
  AnimalCensus c;
  c.dim = D;
  c.mode = mode;
  c.fixed = counter.run();
  c.states = counter.states();
  c.containing.resize(c.fixed.size());
  for (std::size_t n = 0; n < c.fixed.size(); ++n) c.containing[n] = n * c.fixed[n];
  return c;
}

/// Independent count of fixed animals: breadth-first growth of translation
/// normal forms (bounding-box corner at 0, cells sorted, 4 bits per
/// coordinate packed into 128 bits).
template <int D>
std::vector<std::uint64_t> count_fixed_animals_bfs(Adjacency mode, std::size_t n_max) {
  if (n_max < 1 || n_max * D * 4 > 128 || n_max > 15) throw InvalidArgument("count_fixed_animals_bfs: n_max too large");
  __extension__ typedef unsigned __int128 Key;
  using Cell = std::array<int, D>;
  struct KeyHash {
    std::size_t operator()(Key k) const {
      const auto lo = static_cast<std::uint64_t>(k), hi = static_cast<std::uint64_t>(k >> 64);
      return std::hash<std::uint64_t>{}(lo ^ (hi * 0x9E3779B97F4A7C15ull));
    }
  };
  const auto offsets = neighbor_offsets<D>(mode);
  auto normalize = [](std::vector<Cell> cells) {
    Cell lo = cells.front();
    for (const auto& c : cells)
      for (int i = 0; i < D; ++i) lo[i] = std::min(lo[i], c[i]);
    for (auto& c : cells)
      for (int i = 0; i < D; ++i) c[i] -= lo[i];
    std::sort(cells.begin(), cells.end());
    Key k = 0;
    for (const auto& c : cells)
      for (int i = 0; i < D; ++i) k = (k << 4) | static_cast<Key>(c[i]);
    return std::pair{k, cells};
  };
  auto decode = [](Key k, std::size_t n) {
    std::vector<Cell> cells(n);
    for (std::size_t j = n; j-- > 0;)
      for (int i = D - 1; i >= 0; --i) {
        cells[j][i] = static_cast<int>(k & 0xF);
        k >>= 4;
      }
    return cells;
  };
  std::vector<std::uint64_t> counts(n_max + 1, 0);
  std::vector<Key> level{normalize({Cell{}}).first};
  counts[1] = 1;
  for (std::size_t n = 1; n < n_max; ++n) {
    std::unordered_set<Key, KeyHash> next;
    for (Key k : level) {
      const auto cells = decode(k, n);
      for (const auto& c : cells)
        for (const auto& o : offsets) {
          Cell nb;
          for (int i = 0; i < D; ++i) nb[i] = c[i] + o[i];
          if (std::binary_search(cells.begin(), cells.end(), nb)) continue;
          auto grown = cells;
          grown.push_back(nb);
          next.insert(normalize(std::move(grown)).first);
        }
    }
    level.assign(next.begin(), next.end());
    counts[n + 1] = level.size();
  }
  return counts;
}

struct GrowthEstimate {
  double last_ratio = 0.0;    // containing(n_max) / containing(n_max - 1)
  double extrapolated = 0.0;  // intercept of ratio against 1/n
  double mu = 0.0;            // reported estimate: max of the two (never a bound)
};

/// Growth constant estimate from a census: the last ratio plus a linear fit
/// of ratio(n) against 1/n over n >= max(3, n_max - 4), extrapolated to 1/n = 0.
inline GrowthEstimate growth_estimate(const AnimalCensus& c) {
  if (c.n_max() < 4) throw InsufficientData("growth_estimate: need n_max >= 4");
  GrowthEstimate g;
  g.last_ratio = c.ratio(c.n_max());
  std::vector<double> x, y, w;
  for (std::size_t n = std::max<std::size_t>(3, c.n_max() - 4); n <= c.n_max(); ++n) {
    x.push_back(1.0 / static_cast<double>(n));
    y.push_back(c.ratio(n));
    w.push_back(1.0);
  }
  g.extrapolated = weighted_linear_fit(x, y, w).intercept;
  g.mu = std::max(g.last_ratio, g.extrapolated);
  return g;
}

struct PartitionTable {
  std::vector<BigInt> p;  // p[0] = 1

  std::size_t n_max() const { return p.size() - 1; }
};

/// p(0..n_max) by Euler's pentagonal-number recurrence.
inline PartitionTable partitions(std::size_t n_max) {
  if (n_max > 10'000) throw InvalidArgument("partitions: n_max <= 10^4");
  PartitionTable t;
  t.p.assign(n_max + 1, 0);
  t.p[0] = 1;
  for (std::size_t n = 1; n <= n_max; ++n) {
    BigInt s = 0;
    for (std::int64_t k = 1;; ++k) {
      const std::int64_t g1 = k * (3 * k - 1) / 2, g2 = k * (3 * k + 1) / 2;
      if (g1 > static_cast<std::int64_t>(n)) break;
      const bool plus = k % 2 == 1;
      const BigInt term = t.p[n - static_cast<std::size_t>(g1)] +
                          (g2 <= static_cast<std::int64_t>(n) ? t.p[n - static_cast<std::size_t>(g2)] : BigInt(0));
      if (plus)
        s += term;
      else
        s -= term;
    }
    t.p[n] = s;
  }
  return t;
}

/// Number of partitions of n by listing every non-increasing part sequence.
inline std::uint64_t partitions_by_listing(unsigned n) {
  if (n > 60) throw InvalidArgument("partitions_by_listing: n <= 60");
  std::uint64_t count = 0;
  std::vector<unsigned> parts;
  std::function<void(unsigned, unsigned)> rec = [&](unsigned rest, unsigned cap) {
    if (rest == 0) {
      ++count;
      return;
    }
    for (unsigned k = std::min(rest, cap); k >= 1; --k) {
      parts.push_back(k);
      rec(rest - k, k);
      parts.pop_back();
    }
  };
  rec(n, n);
  return count;
}

/// Natural logarithm of a positive big integer.
inline double big_log(const BigInt& v) {
  if (v <= 0) throw InvalidArgument("big_log: nonpositive argument");
  const std::size_t bits = boost::multiprecision::msb(v) + 1;
  if (bits <= 60) return std::log(static_cast<double>(v.convert_to<std::uint64_t>()));
  const BigInt top = v >> (bits - 60);
  return std::log(static_cast<double>(top.convert_to<std::uint64_t>())) + static_cast<double>(bits - 60) * std::log(2.0);
}

struct PartitionBound {
  double log_r = 0.0;  // smallest ρ with log p(n) <= ρ sqrt(n) on 1..n_max
  double r = 0.0;      // e^ρ
  std::size_t violations = 0;
  std::size_t decreasing_from = 1;  // log p(n) / n strictly decreasing on [decreasing_from, n_max]
};

inline PartitionBound partition_bound(const PartitionTable& t) {
  PartitionBound b;
  for (std::size_t n = 1; n <= t.n_max(); ++n) b.log_r = std::max(b.log_r, big_log(t.p[n]) / std::sqrt(double(n)));
  b.r = std::exp(b.log_r);
  double prev = 0.0;
  for (std::size_t n = 1; n <= t.n_max(); ++n) {
    const double lp = big_log(t.p[n]);
    if (lp > b.log_r * std::sqrt(double(n)) * (1 + 1e-12)) ++b.violations;
    const double ratio = lp / double(n);
    if (n > 1 && ratio >= prev) b.decreasing_from = n;
    prev = ratio;
  }
  return b;
}

/// Splits S by coordinate parity into 2^D classes and returns the largest
/// (ties to the lower class). Boxes of one class are at l∞ distance >= 2,
/// hence pairwise disjoint.
template <int D>
std::vector<BoxId<D>> disjoint_packing(const std::vector<BoxId<D>>& s) {
  if (s.empty()) throw InvalidArgument("disjoint_packing of an empty set");
  std::array<std::vector<BoxId<D>>, (1u << D)> classes;
  for (const auto& b : s) {
    unsigned c = 0;
    for (int i = 0; i < D; ++i) c |= static_cast<unsigned>(b[i] & 1) << i;
    classes[c].push_back(b);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes.size(); ++c)
    if (classes[c].size() > classes[best].size()) best = c;
  return classes[best];
}

struct ExpDecBound {
  double log_value = 0.0;  // √n log r + n log M + (n/k) log c
  double value = 0.0;
  double rate = 0.0;  // M c^{1/k}
  bool decaying = false;
};

inline ExpDecBound exp_dec_bound(double n, double c, double k, double m, double r) {
  if (!(c > 0.0 && c < 1.0)) throw InvalidArgument("exp_dec_bound: need 0 < c < 1");
  if (!(m > 1.0)) throw InvalidArgument("exp_dec_bound: need M > 1");
  if (!(r > 1.0)) throw InvalidArgument("exp_dec_bound: need r > 1");
  if (!(k >= 1.0)) throw InvalidArgument("exp_dec_bound: need k >= 1");
  if (!(n >= 0.0)) throw InvalidArgument("exp_dec_bound: need n >= 0");
  ExpDecBound b;
  b.log_value = std::sqrt(n) * std::log(r) + n * std::log(m) + (n / k) * std::log(c);
  b.value = std::exp(b.log_value);
  b.rate = m * std::pow(c, 1.0 / k);
  b.decaying = b.rate < 1.0;
  return b;
}

}  // namespace bperc
