#pragma once
// Bernoulli bond configurations on a window. Anything exposing
// `bool open(std::size_t slot) const` and `const LatticeWindow<D>& window() const`
// is an edge oracle and can be fed to the cluster and box machinery.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bperc/errors.hpp"
#include "bperc/lattice.hpp"
#include "bperc/rng.hpp"

namespace bperc {

template <class O>
concept EdgeOracle = requires(const O& o, std::size_t s) {
  { o.open(s) } -> std::convertible_to<bool>;
  o.window();
};

inline void require_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p must lie in [0, 1], got " + std::to_string(p));
}

/// One bit per edge slot. Slots that are not edges stay closed.
template <int D>
class Configuration {
 public:
  Configuration(LatticeWindow<D> w, double p, std::uint64_t seed, std::uint64_t sample_index)
      : window_(std::move(w)), p_(p), seed_(seed), sample_index_(sample_index),
        words_((window_.slot_count() + 63) / 64, 0) {}

  const LatticeWindow<D>& window() const { return window_; }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t sample_index() const { return sample_index_; }

  bool open(std::size_t slot) const { return (words_[slot >> 6] >> (slot & 63)) & 1u; }
  bool open(const Edge<D>& e) const { return open(window_.slot(e)); }
  void set(std::size_t slot, bool value) {
    const std::uint64_t bit = std::uint64_t{1} << (slot & 63);
    if (value)
      words_[slot >> 6] |= bit;
    else
      words_[slot >> 6] &= ~bit;
  }
  void set(const Edge<D>& e, bool value) { set(window_.slot(e), value); }

  std::size_t open_count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  const std::vector<std::uint64_t>& words() const { return words_; }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.window_ == b.window_ && a.words_ == b.words_;
  }

 private:
  LatticeWindow<D> window_;
  double p_;
  std::uint64_t seed_;
  std::uint64_t sample_index_;
  std::vector<std::uint64_t> words_;
};

/// Calls f(slot, edge) for every window edge in canonical order.
template <int D, class F>
void for_each_edge(const LatticeWindow<D>& w, F&& f) {
  std::size_t v = 0;
  w.extent().for_each([&](const Point<D>& p) {
    for (int a = 0; a < D; ++a)
      if (p[a] < w.extent().hi[a]) f(v * D + a, Edge<D>{p, a});
    ++v;
  });
}

/// Each edge open independently with probability p, keyed by
/// (seed, sample_index, edge position).
template <int D>
Configuration<D> sample(const LatticeWindow<D>& w, double p, std::uint64_t seed, std::uint64_t sample_index) {
  require_probability(p);
  Configuration<D> c(w, p, seed, sample_index);
  const EdgeStream stream(seed, sample_index);
  for_each_edge(w, [&](std::size_t slot, const Edge<D>& e) {
    if (stream.uniform(e) < p) c.set(slot, true);
  });
  return c;
}

/// Evaluates edges on demand from the same stream `sample` uses; agrees with
/// the materialized configuration bit for bit.
template <int D>
class LazyConfiguration {
 public:
  LazyConfiguration(const LatticeWindow<D>& w, double p, std::uint64_t seed, std::uint64_t sample_index)
      : window_(&w), stream_(seed, sample_index), p_(p) {
    require_probability(p);
  }
  const LatticeWindow<D>& window() const { return *window_; }
  bool open(std::size_t slot) const {
    return stream_.uniform(Edge<D>{window_->point(static_cast<VertexIndex>(slot / D)), static_cast<int>(slot % D)}) <
           p_;
  }

 private:
  const LatticeWindow<D>* window_;
  EdgeStream stream_;
  double p_;
};

/// Per-edge uniforms of one sample, kept so that the configuration can be
/// thresholded at several p with common random numbers.
template <int D>
class UniformField {
 public:
  UniformField(const LatticeWindow<D>& w, std::uint64_t seed, std::uint64_t sample_index)
      : window_(&w), u_(w.slot_count(), 2.0) {
    const EdgeStream stream(seed, sample_index);
    for_each_edge(w, [&](std::size_t slot, const Edge<D>& e) { u_[slot] = stream.uniform(e); });
  }
  const LatticeWindow<D>& window() const { return *window_; }
  double u(std::size_t slot) const { return u_[slot]; }

 private:
  const LatticeWindow<D>* window_;
  std::vector<double> u_;  // non-edge slots hold 2, never open
};

/// The configuration of a UniformField at parameter p.
template <int D>
class Threshold {
 public:
  Threshold(const UniformField<D>& f, double p) : field_(&f), p_(p) {}
  const LatticeWindow<D>& window() const { return field_->window(); }
  bool open(std::size_t slot) const { return field_->u(slot) < p_; }

 private:
  const UniformField<D>* field_;
  double p_;
};

}  // namespace bperc
