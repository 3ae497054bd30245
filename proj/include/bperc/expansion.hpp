#pragma once
// Disk bounds for p^m (1-p)^b, geometric decay of per-size magnitudes, and
// the per-configuration inclusion-exclusion identity over occurring
// separating components.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "bperc/errors.hpp"
#include "bperc/rng.hpp"
#include "bperc/stats.hpp"

namespace bperc {

namespace detail {
// Log-domain comparisons allow this much rounding slack.
inline constexpr double kLogSlack = 1e-12;

inline double log_abs(std::complex<double> z) { return std::log(std::abs(z)); }

inline double monomial_log_abs(unsigned m, unsigned b, std::complex<double> z) {
  double v = 0.0;
  if (m) v += static_cast<double>(m) * log_abs(z);
  if (b) v += static_cast<double>(b) * log_abs(1.0 - z);
  return v;
}
}  // namespace detail

/// |z^m (1-z)^b| <= c^b (p+δ)^m (1-p-δ)^b with c = (1-p+δ)/(1-p-δ), for z in
/// the open disk of radius δ around p.
inline bool disk_bound_check(unsigned m, unsigned b, double p, double delta, std::complex<double> z) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("disk_bound_check: need 0 < delta < 1");
  if (!(p >= 0.0 && p + delta < 1.0)) throw InvalidArgument("disk_bound_check: need p >= 0 and p + delta < 1");
  if (!(std::abs(z - p) < delta)) throw InvalidArgument("disk_bound_check: z outside D(p, delta)");
  const double c = (1.0 - p + delta) / (1.0 - p - delta);
  const double rhs = (b ? b * std::log(c) + b * std::log(1.0 - p - delta) : 0.0) + (m ? m * std::log(p + delta) : 0.0);
  return detail::monomial_log_abs(m, b, z) <= rhs + detail::kLogSlack * (1.0 + std::abs(rhs));
}

/// Variant at p = 1: |z^m (1-z)^b| <= c^b (1-δ)^m δ^b with c = (1+δ)/(1-δ),
/// for z in the open disk of radius δ around 1.
inline bool disk_bound_check_at_one(unsigned m, unsigned b, double delta, std::complex<double> z) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("disk_bound_check_at_one: need 0 < delta < 1");
  if (!(std::abs(z - 1.0) < delta)) throw InvalidArgument("disk_bound_check_at_one: z outside D(1, delta)");
  const double c = (1.0 + delta) / (1.0 - delta);
  const double rhs = (b ? b * (std::log(c) + std::log(delta)) : 0.0) + (m ? m * std::log(1.0 - delta) : 0.0);
  return detail::monomial_log_abs(m, b, z) <= rhs + detail::kLogSlack * (1.0 + std::abs(rhs));
}

struct DiskSweep {
  std::uint64_t tuples = 0;
  std::uint64_t violations = 0;
  // First violating tuple, if any.
  unsigned m = 0, b = 0;
  double p = 0.0, delta = 0.0;
  std::complex<double> z;
};

/// Checks the disk bound on `tuples` random (m, b, p, δ, z) with m, b in
/// [0, 200] and z uniform in the disk. `at_one` checks the p = 1 variant.
inline DiskSweep disk_bound_sweep(std::uint64_t tuples, std::uint64_t seed, bool at_one) {
  DiskSweep out;
  out.tuples = tuples;
  for (std::uint64_t i = 0; i < tuples; ++i) {
    const std::uint64_t h = splitmix64(seed ^ splitmix64(i));
    auto u = [&](std::uint64_t k) { return static_cast<double>(splitmix64(h + k) >> 11) * 0x1p-53; };
    const auto m = static_cast<unsigned>(u(0) * 201), b = static_cast<unsigned>(u(1) * 201);
    const double p = at_one ? 1.0 : u(2) * 0.95;
    const double delta = (at_one ? 1.0 : 1.0 - p) * std::max(u(3), 1e-6) * (1 - 1e-9);
    const double radius = delta * std::sqrt(u(4)) * (1 - 1e-12);
    const std::complex<double> z = p + std::polar(radius, 2 * std::numbers::pi * u(5));
    const bool ok = at_one ? disk_bound_check_at_one(m, b, delta, z) : disk_bound_check(m, b, p, delta, z);
    if (!ok && out.violations++ == 0) {
      out.m = m;
      out.b = b;
      out.p = p;
      out.delta = delta;
      out.z = z;
    }
  }
  return out;
}

struct DecayCheck {
  double ratio = 0.0;        // fitted ĉ
  double ratio_upper = 0.0;  // one-sided 95% upper bound on ĉ
  LinearFit fit;
  std::size_t first_n = 0;
  std::size_t last_n = 0;
  bool pass = false;
};

/// Fits log|a_n| = α + n log ĉ over the longest run of consecutive nonzero
/// magnitudes (index = n). With standard errors the weights are
/// (|a_n|/se_n)^2, the delta-method inverse variance of log|a_n|.
inline DecayCheck geometric_decay_check(const std::vector<double>& magnitudes,
                                        const std::vector<double>& standard_errors = {}) {
  if (!standard_errors.empty() && standard_errors.size() != magnitudes.size())
    throw InvalidArgument("geometric_decay_check: standard errors do not match magnitudes");
  std::size_t best_lo = 0, best_len = 0;
  for (std::size_t i = 0; i < magnitudes.size();) {
    if (magnitudes[i] == 0.0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < magnitudes.size() && magnitudes[j] != 0.0) ++j;
    if (j - i > best_len) {
      best_lo = i;
      best_len = j - i;
    }
    i = j;
  }
  if (best_len < 5) throw InsufficientData("geometric_decay_check: fewer than 5 consecutive nonzero magnitudes");
  std::vector<double> x, y, wt;
  for (std::size_t n = best_lo; n < best_lo + best_len; ++n) {
    const double a = std::abs(magnitudes[n]);
    x.push_back(static_cast<double>(n));
    y.push_back(std::log(a));
    double weight = 1.0;
    if (!standard_errors.empty() && standard_errors[n] > 0.0) weight = (a / standard_errors[n]) * (a / standard_errors[n]);
    wt.push_back(weight);
  }
  DecayCheck out;
  out.fit = weighted_linear_fit(x, y, wt);
  out.first_n = best_lo;
  out.last_n = best_lo + best_len - 1;
  out.ratio = std::exp(out.fit.slope);
  out.ratio_upper = std::exp(out.fit.slope + kZ95OneSided * out.fit.slope_se);
  out.pass = out.ratio_upper < 1.0;
  return out;
}

/// Complexity bookkeeping: every event of size n declares how many edges it
/// depends on; the ratio edges/n must stay within [lo, hi].
struct ComplexityCheck {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  bool pass = true;
};

inline ComplexityCheck complexity_check(const std::vector<std::pair<std::size_t, std::size_t>>& size_and_edges, double lo,
                                        double hi) {
  ComplexityCheck out;
  bool first = true;
  for (const auto& [n, edges] : size_and_edges) {
    if (n == 0) throw InvalidArgument("complexity_check: event of size 0");
    const double r = static_cast<double>(edges) / static_cast<double>(n);
    out.min_ratio = first ? r : std::min(out.min_ratio, r);
    out.max_ratio = first ? r : std::max(out.max_ratio, r);
    first = false;
    if (r < lo || r > hi) out.pass = false;
  }
  return out;
}

struct InclusionExclusion {
  int lhs = 0;
  std::int64_t rhs = 0;
  std::size_t occurring = 0;
  bool subsets_summed = false;  // rhs cross-checked by explicit subset summation
};

/// lhs = 1{some S occurs, diam C_o >= N/5}; rhs = Σ over nonempty subsets T of
/// the k occurring components of (-1)^{|T|+1} 1{diam >= N/5}.
inline InclusionExclusion per_config_inclusion_exclusion(std::size_t occurring, bool large_origin_cluster) {
  InclusionExclusion r;
  r.occurring = occurring;
  r.lhs = (occurring > 0 && large_origin_cluster) ? 1 : 0;
  const std::int64_t closed_form = (large_origin_cluster && occurring > 0) ? 1 : 0;
  r.rhs = closed_form;
  if (occurring <= 10) {
    std::int64_t sum = 0;
    const std::uint32_t total = std::uint32_t{1} << occurring;
    for (std::uint32_t t = 1; t < total; ++t) sum += (std::popcount(t) % 2 == 1 ? 1 : -1);
    if (!large_origin_cluster) sum = 0;
    if (sum != closed_form) throw InvariantViolation("inclusion-exclusion subset sum disagrees with 1 - 0^k");
    r.rhs = sum;
    r.subsets_summed = true;
  }
  return r;
}

/// Per-size signed aggregate: â_n = mean over samples of the signed count of
/// subsets T of occurring components with Σ|S| = n.
struct SignedAggregate {
  std::vector<MeanAccumulator> per_n;  // index n = total box count
  MeanAccumulator direct;              // 1{some S occurs, D^c}
  MeanAccumulator truncated_sum;       // Σ_{n <= n_max} signed terms per sample
  MeanAccumulator difference;          // truncated_sum - direct, paired per sample
  std::uint64_t samples = 0;
  std::uint64_t excluded = 0;
  std::uint64_t overflow_subsets = 0;  // subset terms with total size > n_max

  explicit SignedAggregate(std::size_t n_max = 0) : per_n(n_max + 1) {}

  void merge(const SignedAggregate& o) {
    if (o.per_n.size() != per_n.size()) throw InvalidArgument("SignedAggregate::merge: n_max mismatch");
    for (std::size_t n = 0; n < per_n.size(); ++n) per_n[n].merge(o.per_n[n]);
    direct.merge(o.direct);
    truncated_sum.merge(o.truncated_sum);
    difference.merge(o.difference);
    samples += o.samples;
    excluded += o.excluded;
    overflow_subsets += o.overflow_subsets;
  }
  double total() const {
    double s = 0;
    for (const auto& a : per_n) s += a.mean();
    return s;
  }
};

/// Adds one non-excluded sample: `sizes` are the box counts of the occurring
/// components. The signed subset counts per total size are the coefficients
/// of 1 - Π(1 - x^{|S|}).
inline void add_signed_sample(SignedAggregate& agg, const std::vector<std::size_t>& sizes, bool large_origin_cluster) {
  const std::size_t n_max = agg.per_n.size() - 1;
  std::vector<std::int64_t> signed_count(n_max + 1, 0);
  std::int64_t overflow = 0, sum = 0;
  if (large_origin_cluster && !sizes.empty()) {
    // coefficient of x^n in 1 - Π(1 - x^{s_i})
    std::vector<std::int64_t> prod{1};
    std::size_t max_total = 0;
    for (auto s : sizes) max_total += s;
    prod.assign(max_total + 1, 0);
    prod[0] = 1;
    std::size_t deg = 0;
    for (auto s : sizes) {
      for (std::size_t n = deg + 1; n-- > 0;) prod[n + s] -= prod[n];
      deg += s;
    }
    for (std::size_t n = 1; n <= max_total; ++n) {
      const std::int64_t c = -prod[n];
      sum += c;
      if (n <= n_max)
        signed_count[n] += c;
      else if (c != 0)
        overflow += c > 0 ? c : -c;
    }
  }
  for (std::size_t n = 0; n <= n_max; ++n) agg.per_n[n].add(static_cast<double>(signed_count[n]));
  double truncated = 0;
  for (auto c : signed_count) truncated += static_cast<double>(c);
  const double direct = large_origin_cluster && !sizes.empty() ? 1.0 : 0.0;
  agg.truncated_sum.add(truncated);
  agg.direct.add(direct);
  agg.difference.add(truncated - direct);
  agg.overflow_subsets += static_cast<std::uint64_t>(overflow);
  ++agg.samples;
  if (sum != ((large_origin_cluster && !sizes.empty()) ? 1 : 0))
    throw InvariantViolation("signed subset sizes do not sum to the union indicator");
}

}  // namespace bperc
