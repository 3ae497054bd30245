#pragma once
// Monte Carlo estimators of θ, τ, τ^f, χ^f_k, κ and the cluster size
// distribution, all read off the origin's cluster explored locally.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bperc/clusters.hpp"
#include "bperc/configuration.hpp"
#include "bperc/errors.hpp"
#include "bperc/lattice.hpp"
#include "bperc/parallel.hpp"
#include "bperc/stats.hpp"

namespace bperc {

struct WindowSpec {
  int dim = 2;
  int n = 5;
  int radius = 3;
};

struct EstimatorReport {
  std::string quantity;
  double p = 0.0;
  WindowSpec window;
  std::uint64_t samples = 0;
  double estimate = 0.0;
  double standard_error = 0.0;
  Interval ci;
  std::uint64_t seed = 0;
  std::uint64_t excluded = 0;
  std::string note;
};

namespace detail {

inline EstimatorReport proportion_report(std::string quantity, double p, WindowSpec w, std::uint64_t hits,
                                         std::uint64_t n, std::uint64_t seed) {
  EstimatorReport r;
  r.quantity = std::move(quantity);
  r.p = p;
  r.window = w;
  r.samples = n;
  r.seed = seed;
  r.estimate = static_cast<double>(hits) / static_cast<double>(n);
  r.standard_error = std::sqrt(r.estimate * (1 - r.estimate) / static_cast<double>(n));
  r.ci = wilson_interval(hits, n);
  return r;
}

inline EstimatorReport mean_report(std::string quantity, double p, WindowSpec w, const MeanAccumulator& acc,
                                   std::uint64_t seed) {
  EstimatorReport r;
  r.quantity = std::move(quantity);
  r.p = p;
  r.window = w;
  r.samples = acc.n;
  r.seed = seed;
  r.estimate = acc.mean();
  r.standard_error = acc.standard_error();
  r.ci = {r.estimate - kZ95 * r.standard_error, r.estimate + kZ95 * r.standard_error};
  return r;
}

struct CountAccumulator {
  std::uint64_t hits = 0;
  void merge(const CountAccumulator& o) { hits += o.hits; }
};

inline void require_samples(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("estimator needs at least one sample");
}

}  // namespace detail

template <int D>
LatticeWindow<D> make_window(const WindowSpec& s) {
  if (s.dim != D) throw InvalidArgument("window dimension mismatch");
  return LatticeWindow<D>(s.n, s.radius);
}

/// Fraction of samples whose C_o touches the rim.
template <int D>
EstimatorReport theta_hat(double p, const WindowSpec& spec, std::uint64_t n_samples, std::uint64_t seed,
                          unsigned workers = 1) {
  require_probability(p);
  detail::require_samples(n_samples);
  const auto w = make_window<D>(spec);
  const VertexIndex o = w.index(Point<D>{});
  const auto acc = run_blocks(n_samples, workers, detail::CountAccumulator{}, [&](std::uint64_t i, auto& a) {
    const LazyConfiguration<D> c(w, p, seed, i);
    if (explore_cluster(c, o, true).touches_rim) ++a.hits;
  });
  return detail::proportion_report("theta", p, spec, acc.hits, n_samples, seed);
}

/// Fraction of samples in which all of `xs` lie in one cluster (truncated:
/// one cluster off the rim).
template <int D>
EstimatorReport tau_hat(const std::vector<Point<D>>& xs, double p, const WindowSpec& spec, std::uint64_t n_samples,
                        std::uint64_t seed, bool truncated, unsigned workers = 1) {
  require_probability(p);
  detail::require_samples(n_samples);
  if (xs.empty()) throw InvalidArgument("tau_hat: empty vertex tuple");
  const auto w = make_window<D>(spec);
  for (const auto& x : xs)
    if (!w.contains(x) || w.on_rim(x)) throw InvalidArgument("tau_hat: vertex outside the window interior");
  const VertexIndex start = w.index(xs.front());
  const auto acc = run_blocks(n_samples, workers, detail::CountAccumulator{}, [&](std::uint64_t i, auto& a) {
    const LazyConfiguration<D> c(w, p, seed, i);
    const auto cl = explore_cluster(c, start, truncated);
    if (truncated && cl.touches_rim) return;
    const VertexSet members(cl.vertices);
    for (const auto& x : xs)
      if (!members.contains(w.index(x))) return;
    ++a.hits;
  });
  return detail::proportion_report(truncated ? "tau_f" : "tau", p, spec, acc.hits, n_samples, seed);
}

/// Sample mean of |C_o|^k on finite C_o (0 otherwise).
template <int D>
EstimatorReport chi_f_hat(unsigned k, double p, const WindowSpec& spec, std::uint64_t n_samples, std::uint64_t seed,
                          unsigned workers = 1) {
  require_probability(p);
  detail::require_samples(n_samples);
  if (k < 1) throw InvalidArgument("chi_f_hat: k >= 1");
  const auto w = make_window<D>(spec);
  const VertexIndex o = w.index(Point<D>{});
  const auto acc = run_blocks(n_samples, workers, MeanAccumulator{}, [&](std::uint64_t i, auto& a) {
    const LazyConfiguration<D> c(w, p, seed, i);
    const auto cl = explore_cluster(c, o, true);
    a.add(cl.touches_rim ? 0.0 : std::pow(static_cast<double>(cl.vertices.size()), static_cast<double>(k)));
  });
  auto r = detail::mean_report("chi_f_" + std::to_string(k), p, spec, acc, seed);
  return r;
}

/// Σ_x τ^f_{o,x} over ‖x‖∞ <= range, estimated sample by sample as the number
/// of vertices of a finite C_o inside the range.
template <int D>
EstimatorReport tau_f_sum_hat(int range, double p, const WindowSpec& spec, std::uint64_t n_samples,
                              std::uint64_t seed, unsigned workers = 1) {
  require_probability(p);
  detail::require_samples(n_samples);
  const auto w = make_window<D>(spec);
  if (range < 0 || range >= w.reach()) throw InvalidArgument("tau_f_sum_hat: range outside the window interior");
  const VertexIndex o = w.index(Point<D>{});
  const auto acc = run_blocks(n_samples, workers, MeanAccumulator{}, [&](std::uint64_t i, auto& a) {
    const LazyConfiguration<D> c(w, p, seed, i);
    const auto cl = explore_cluster(c, o, true);
    double count = 0;
    if (!cl.touches_rim)
      for (VertexIndex v : cl.vertices) count += linf<D>(w.point(v)) <= range ? 1.0 : 0.0;
    a.add(count);
  });
  auto r = detail::mean_report("tau_f_sum", p, spec, acc, seed);
  r.note = "range " + std::to_string(range);
  return r;
}

/// Sample mean of 1/|C_o|; rim-touching clusters contribute their truncated
/// size.
template <int D>
EstimatorReport kappa_hat(double p, const WindowSpec& spec, std::uint64_t n_samples, std::uint64_t seed,
                          unsigned workers = 1) {
  require_probability(p);
  detail::require_samples(n_samples);
  const auto w = make_window<D>(spec);
  const VertexIndex o = w.index(Point<D>{});
  const auto acc = run_blocks(n_samples, workers, MeanAccumulator{}, [&](std::uint64_t i, auto& a) {
    const LazyConfiguration<D> c(w, p, seed, i);
    a.add(1.0 / static_cast<double>(explore_cluster(c, o, false).vertices.size()));
  });
  auto r = detail::mean_report("kappa", p, spec, acc, seed);
  if (p == 1.0) r.note = "infinite-volume value is 0; window value is 1/vertex_count";
  return r;
}

/// Cluster size distribution: counts of |C_o| = n over finite clusters plus
/// the count of rim-touching ones. Normalization is exact in integers.
struct SizeHistogram {
  std::map<std::uint64_t, std::uint64_t> finite;
  std::uint64_t infinite = 0;
  std::uint64_t samples = 0;

  void merge(const SizeHistogram& o) {
    for (const auto& [n, c] : o.finite) finite[n] += c;
    infinite += o.infinite;
    samples += o.samples;
  }
  std::uint64_t total() const {
    std::uint64_t t = infinite;
    for (const auto& [n, c] : finite) t += c;
    return t;
  }
  /// Σ_n n P_n: the first moment of finite sizes, from the histogram.
  double first_moment() const {
    long double s = 0;
    for (const auto& [n, c] : finite) s += static_cast<long double>(n) * static_cast<long double>(c);
    return static_cast<double>(s / static_cast<long double>(samples));
  }
};

template <int D>
SizeHistogram size_histogram(double p, const WindowSpec& spec, std::uint64_t n_samples, std::uint64_t seed,
                             unsigned workers = 1) {
  require_probability(p);
  detail::require_samples(n_samples);
  const auto w = make_window<D>(spec);
  const VertexIndex o = w.index(Point<D>{});
  return run_blocks(n_samples, workers, SizeHistogram{}, [&](std::uint64_t i, SizeHistogram& h) {
    const LazyConfiguration<D> c(w, p, seed, i);
    const auto cl = explore_cluster(c, o, true);
    ++h.samples;
    if (cl.touches_rim)
      ++h.infinite;
    else
      ++h.finite[cl.vertices.size()];
  });
}

struct KappaDerivative {
  double p = 0.0;
  double h = 0.0;
  double central_difference = 0.0;  // (κ̂(p+h) - κ̂(p-h)) / 2h
  double pivotal_form = 0.0;        // -(1/(2(1-p))) Σ_{x~o} (1 - τ̂_{o,x})
  double difference = 0.0;          // central_difference - pivotal_form
  double standard_error = 0.0;      // paired, common random numbers
  double independent_se = 0.0;      // what unpaired samples would give
  double discrepancy_se = 0.0;      // |difference| / standard_error
  std::uint64_t samples = 0;
};

/// Compares the central difference of κ̂ with the pivotal-edge form of κ'(p).
/// All three parameter values share each sample's uniforms.
template <int D>
KappaDerivative kappa_derivative_check(double p, double h, const WindowSpec& spec, std::uint64_t n_samples,
                                       std::uint64_t seed, double p_c_surrogate, unsigned workers = 1) {
  if (h < 0.01) throw PreconditionError("kappa_derivative_check: h below Monte Carlo resolution (need h >= 0.01)");
  if (!(p - h > p_c_surrogate && p + h < 1.0))
    throw PreconditionError("kappa_derivative_check: need p - h > p_c and p + h < 1");
  detail::require_samples(n_samples);
  const auto w = make_window<D>(spec);
  const VertexIndex o = w.index(Point<D>{});
  std::vector<VertexIndex> nbrs;
  w.for_each_incident(o, [&](VertexIndex u, std::size_t) { nbrs.push_back(u); });
  struct Acc {
    MeanAccumulator diff, pivot, paired, plus, minus;
    void merge(const Acc& a) {
      diff.merge(a.diff);
      pivot.merge(a.pivot);
      paired.merge(a.paired);
      plus.merge(a.plus);
      minus.merge(a.minus);
    }
  };
  const double scale = 1.0 / (2.0 * (1.0 - p));
  const auto acc = run_blocks(n_samples, workers, Acc{}, [&](std::uint64_t i, Acc& a) {
    const UniformField<D> field(w, seed, i);
    const double kp = 1.0 / static_cast<double>(explore_cluster(Threshold<D>(field, p + h), o, false).vertices.size());
    const double km = 1.0 / static_cast<double>(explore_cluster(Threshold<D>(field, p - h), o, false).vertices.size());
    const VertexSet at_p(explore_cluster(Threshold<D>(field, p), o, false).vertices);
    double disconnected = 0;
    for (auto x : nbrs) disconnected += at_p.contains(x) ? 0.0 : 1.0;
    const double d = (kp - km) / (2 * h), g = -scale * disconnected;
    a.diff.add(d);
    a.pivot.add(g);
    a.paired.add(d - g);
    a.plus.add(kp);
    a.minus.add(km);
  });
  KappaDerivative r;
  r.p = p;
  r.h = h;
  r.samples = n_samples;
  r.central_difference = acc.diff.mean();
  r.pivotal_form = acc.pivot.mean();
  r.difference = acc.paired.mean();
  r.standard_error = acc.paired.standard_error();
  const double se_plus = acc.plus.standard_error(), se_minus = acc.minus.standard_error();
  r.independent_se = std::sqrt((se_plus * se_plus + se_minus * se_minus) / (4 * h * h) +
                               acc.pivot.standard_error() * acc.pivot.standard_error());
  r.discrepancy_se = r.standard_error > 0 ? std::abs(r.difference) / r.standard_error
                                          : (r.difference == 0 ? 0.0 : INFINITY);
  return r;
}

struct DecayPoint {
  int distance = 0;
  std::uint64_t hits = 0;
  double estimate = 0.0;
};

struct TauFDecay {
  std::vector<DecayPoint> points;  // r = 0..max_dist
  std::uint64_t samples = 0;
  std::optional<LinearFit> fit;    // log τ̂^f against r on the fitted range
  double rate = 0.0;               // ĉ2 = -slope
  int fit_lo = 0, fit_hi = 0;
};

/// τ^f_{o, r e} for r = 0..max_dist along `direction`, with an exponential
/// rate fitted over r >= 1 where at least 20 samples hit.
template <int D>
TauFDecay tau_f_decay(double p, const WindowSpec& spec, const Point<D>& direction, int max_dist,
                      std::uint64_t n_samples, std::uint64_t seed, unsigned workers = 1) {
  require_probability(p);
  detail::require_samples(n_samples);
  const auto w = make_window<D>(spec);
  if (max_dist < 1) throw InvalidArgument("tau_f_decay: max_dist >= 1");
  std::vector<VertexIndex> targets;
  for (int r = 0; r <= max_dist; ++r) {
    Point<D> x{};
    for (int i = 0; i < D; ++i) x[i] = direction[i] * r;
    if (!w.contains(x) || w.on_rim(x)) throw InvalidArgument("tau_f_decay: target outside the window interior");
    targets.push_back(w.index(x));
  }
  struct Acc {
    std::vector<std::uint64_t> hits;
    void merge(const Acc& a) {
      if (hits.empty()) hits.assign(a.hits.size(), 0);
      for (std::size_t r = 0; r < a.hits.size(); ++r) hits[r] += a.hits[r];
    }
  };
  const VertexIndex o = w.index(Point<D>{});
  Acc proto{std::vector<std::uint64_t>(targets.size(), 0)};
  const auto acc = run_blocks(n_samples, workers, proto, [&](std::uint64_t i, Acc& a) {
    const LazyConfiguration<D> c(w, p, seed, i);
    const auto cl = explore_cluster(c, o, true);
    if (cl.touches_rim) return;
    const VertexSet members(cl.vertices);
    for (std::size_t r = 0; r < targets.size(); ++r)
      if (members.contains(targets[r])) ++a.hits[r];
  });
  TauFDecay out;
  out.samples = n_samples;
  for (std::size_t r = 0; r < targets.size(); ++r)
    out.points.push_back({static_cast<int>(r), acc.hits[r], static_cast<double>(acc.hits[r]) / double(n_samples)});
  std::vector<double> x, y, wt;
  for (std::size_t r = 1; r < targets.size() && acc.hits[r] >= 20; ++r) {
    x.push_back(static_cast<double>(r));
    y.push_back(std::log(out.points[r].estimate));
    wt.push_back(static_cast<double>(acc.hits[r]));  // var(log τ̂) ≈ 1/hits
    out.fit_hi = static_cast<int>(r);
  }
  if (x.size() < 3) throw InsufficientData("tau_f_decay: fewer than 3 distances with >= 20 hits");
  out.fit_lo = 1;
  out.fit = weighted_linear_fit(x, y, wt);
  out.rate = -out.fit->slope;
  return out;
}

}  // namespace bperc
