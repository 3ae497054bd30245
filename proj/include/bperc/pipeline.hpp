#pragma once
// Per-sample pipeline: sample -> clusters -> box classification -> S_o ->
// cut, with every per-configuration invariant checked on the way. Tail
// experiments and the empirical expansion are aggregates of these reports.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bperc/clusters.hpp"
#include "bperc/configuration.hpp"
#include "bperc/errors.hpp"
#include "bperc/estimators.hpp"
#include "bperc/expansion.hpp"
#include "bperc/lattice.hpp"
#include "bperc/parallel.hpp"
#include "bperc/renorm.hpp"
#include "bperc/separating.hpp"
#include "bperc/stats.hpp"

namespace bperc {

struct PipelineOptions {
  bool check_star = true;
  bool enumerate = true;
  bool inject_fault = false;  // negative control: open one cut edge before checking closure
  // Stress ensemble: close every edge leaving the l∞ ball of a radius drawn
  // from [plant_lo, plant_hi] around o. 0 = natural samples.
  int plant_lo = 0;
  int plant_hi = 0;
};

/// Closes every edge joining ‖x‖∞ <= radius to ‖x‖∞ = radius + 1.
template <int D>
void plant_closed_shell(Configuration<D>& c, int radius) {
  const auto& w = c.window();
  if (radius < 0 || radius + 1 >= w.reach()) throw InvalidArgument("plant_closed_shell: radius outside the window");
  for_each_edge(w, [&](std::size_t slot, const Edge<D>& e) {
    const int a = linf<D>(e.lower), b = linf<D>(e.upper());
    if ((a <= radius) != (b <= radius)) c.set(slot, false);
  });
}

/// The configuration a pipeline run analyzes for sample `i`.
template <int D>
Configuration<D> pipeline_configuration(const LatticeWindow<D>& w, double p, std::uint64_t seed, std::uint64_t i,
                                        const PipelineOptions& opt) {
  auto c = sample<D>(w, p, seed, i);
  if (opt.plant_hi > 0) {
    if (opt.plant_lo < 0 || opt.plant_lo > opt.plant_hi) throw InvalidArgument("plant radius range is empty");
    const auto span = static_cast<std::uint64_t>(opt.plant_hi - opt.plant_lo + 1);
    const auto r = opt.plant_lo + static_cast<int>(splitmix64(seed ^ splitmix64(i ^ 0x706c616e74ull)) % span);
    plant_closed_shell<D>(c, r);
  }
  return c;
}

struct SampleReport {
  std::uint64_t index = 0;
  bool co_finite = false;
  bool co_large = false;
  int co_diameter = 0;
  std::size_t co_size = 0;
  bool excluded = false;
  std::string exclusion;
  std::optional<std::size_t> s_o_boxes;
  std::optional<std::size_t> cut_size;
  std::optional<std::size_t> phi;
  std::vector<std::size_t> occurring_sizes;
  std::vector<std::pair<std::size_t, std::size_t>> occurring_region_edges;  // (|S|, region edges)
  std::size_t witness_disagreements = 0;
  bool fault_injected = false;
  std::optional<InclusionExclusion> inc_ex;
  std::vector<std::string> violations;
};

namespace detail {

/// Edges of the region of S ∪ ∂⊠S.
template <int D>
std::size_t region_edge_count(const SeparatingComponent<D>& s, const LatticeWindow<D>& w) {
  std::set<std::size_t> edges;
  auto add_box = [&](std::size_t k) {
    const Extent<D> e = w.box_extent(w.box_id(k));
    e.for_each([&](const Point<D>& p) {
      for (int a = 0; a < D; ++a)
        if (p[a] < e.hi[a]) edges.insert(w.slot(Edge<D>{p, a}));
    });
  };
  for (auto k : s.boxes) add_box(k);
  for (auto k : s.boundary) add_box(k);
  return edges.size();
}

template <int D>
class OpenOne {
 public:
  OpenOne(const Configuration<D>& base, std::size_t slot) : base_(&base), slot_(slot) {}
  const LatticeWindow<D>& window() const { return base_->window(); }
  bool open(std::size_t slot) const { return slot == slot_ || base_->open(slot); }

 private:
  const Configuration<D>* base_;
  std::size_t slot_;
};

}  // namespace detail

template <int D>
SampleReport analyze_sample(const Configuration<D>& c, const PipelineOptions& opt = {}) {
  using Cls = BoxClassification<D, Configuration<D>>;
  SampleReport r;
  r.index = c.sample_index();
  const auto& w = c.window();
  const ClusterLabeling<D> lab(c);
  const Cls cls(c);
  const auto co = origin_cluster<D>(lab);
  r.co_finite = co.finite;
  r.co_large = co.large;
  r.co_diameter = co.diameter;
  r.co_size = lab.size(co.root);
  auto exclude = [&](const std::string& why) {
    if (!r.excluded) r.exclusion = why;
    r.excluded = true;
  };
  auto violation = [&](const std::string& what) { r.violations.push_back(what); };

  if (opt.check_star) {
    std::vector<std::size_t> good;
    for (std::size_t k = 0; k < w.box_count(); ++k)
      if (cls.good(k)) good.push_back(k);
    for (const auto& comp : box_components<D>(good, w, Adjacency::diagonal))
      if (!check_star<D>(comp, cls, lab)) violation("star: good component without a unique substantial cluster");
  }

  if (co.finite) {
    const SubstantialSet sub = substantial_set<D>(co.root, lab, cls);
    if (sub.touches_rim) {
      exclude("C_o(N) reaches the box rim");
    } else {
      if (!check_timar<D>(sub, w)) violation("timar: internal boundary of C_o(N) is not ⊠-connected");
      for (auto k : sub.boundary)
        if (cls.good(k)) violation("a box of the internal boundary of C_o(N) is good");
    }
  }

  std::optional<Enumeration<D>> en;
  if (opt.enumerate) {
    try {
      en = enumerate_occurring<D>(cls);
      r.witness_disagreements += en->witness_disagreements;
      if (!en->margin_ok()) exclude("a separating candidate reaches the box rim");
    } catch (const MarginViolation& e) {
      exclude(e.what());
    }
  }

  std::optional<SeparatingComponent<D>> s_o;
  if (co.finite && co.large && !r.excluded) {
    try {
      s_o = build_S_o<D>(lab, cls);
    } catch (const MarginViolation& e) {
      exclude(e.what());
    } catch (const InvariantViolation& e) {
      violation(std::string("S_o: ") + e.what());
    }
  }

  if (s_o && !r.excluded) {
    r.s_o_boxes = s_o->size();
    try {
      const Occurrence occ = occurrence<D>(*s_o, cls);
      if (!opt.enumerate && occ.witnesses_disagree()) ++r.witness_disagreements;
      if (!occ.occurs()) {
        violation("an S occurs: S_o does not occur");
      } else {
        const auto cut = extract_cut<D>(*s_o, cls);
        r.cut_size = cut.cut.size();
      }
      if (en && std::find(en->occurring.begin(), en->occurring.end(), *s_o) == en->occurring.end())
        violation("enumerate_occurring misses S_o");
    } catch (const MarginViolation& e) {
      exclude(e.what());
    } catch (const InvariantViolation& e) {
      violation(std::string("cut of S_o: ") + e.what());
    }
  }

  if (co.finite && !r.excluded && lab.infinite_root()) r.phi = touching_edge_count<D>(c, lab);
  if (r.phi && r.cut_size && *r.phi > *r.cut_size) violation("touching edges exceed |cut of S_o|");

  if (en && !r.excluded) {
    bool first = true;
    for (const auto& s : en->occurring) {
      r.occurring_sizes.push_back(s.size());
      r.occurring_region_edges.emplace_back(s.size(), detail::region_edge_count<D>(s, w));
      if (!co.finite) violation("a separating component occurs but C_o is infinite");
      try {
        const auto cut = extract_cut<D>(s, cls);
        if (opt.inject_fault && first && !cut.cut.empty()) {
          r.fault_injected = true;
          const detail::OpenOne<D> tampered(c, cut.cut.front());
          for (auto slot : cut.cut)
            if (tampered.open(slot)) {
              violation("injected fault: cut edge open");
              break;
            }
        }
      } catch (const InvariantViolation& e) {
        violation(std::string("Co finite: ") + e.what());
      } catch (const MarginViolation& e) {
        exclude(e.what());
      }
      first = false;
    }
    for (std::size_t i = 0; i < en->occurring.size(); ++i)
      for (std::size_t j = i + 1; j < en->occurring.size(); ++j) {
        const auto& a = en->occurring[i].boxes;
        const auto& b = en->occurring[j].boxes;
        std::vector<std::size_t> common;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
        if (!common.empty()) violation("occurring separating components overlap");
      }
    const bool some = !en->occurring.empty();
    const int lhs = co.finite ? 1 : 0;
    const int rhs = (co.large ? 0 : 1) + ((some && co.large) ? 1 : 0);
    if (lhs != rhs) violation("cases: [C_o finite] != [diam < N/5] + [some S occurs, diam >= N/5]");
    try {
      r.inc_ex = per_config_inclusion_exclusion(en->occurring.size(), co.large);
      if (r.inc_ex->lhs != r.inc_ex->rhs) violation("inclusion-exclusion: lhs != rhs");
    } catch (const InvariantViolation& e) {
      violation(e.what());
    }
  }
  return r;
}

/// Counts over a run of the structure suite; keeps the first violating
/// sample as the reproducer.
struct StructureTally {
  std::uint64_t samples = 0;
  std::uint64_t excluded = 0;
  std::uint64_t finite = 0;
  std::uint64_t large_finite = 0;
  std::uint64_t s_o_defined = 0;
  std::uint64_t phi_applicable = 0;  // both φ and |∂^b S_o| defined
  std::uint64_t phi_within_cut = 0;
  std::uint64_t inc_ex_checked = 0;
  std::uint64_t inc_ex_equal = 0;
  std::uint64_t occurring_total = 0;
  std::uint64_t witness_disagreements = 0;
  std::uint64_t faults_injected = 0;
  std::uint64_t violating_samples = 0;
  std::map<std::string, std::uint64_t> violations;
  std::map<std::string, std::uint64_t> exclusions;
  std::optional<std::uint64_t> first_violation;
  std::string first_violation_message;

  void add(const SampleReport& r) {
    ++samples;
    if (r.excluded) {
      ++excluded;
      ++exclusions[r.exclusion];
    }
    finite += r.co_finite;
    large_finite += r.co_finite && r.co_large;
    s_o_defined += r.s_o_boxes.has_value();
    if (r.phi && r.cut_size) {
      ++phi_applicable;
      phi_within_cut += *r.phi <= *r.cut_size;
    }
    if (r.inc_ex) {
      ++inc_ex_checked;
      inc_ex_equal += r.inc_ex->lhs == r.inc_ex->rhs;
    }
    occurring_total += r.occurring_sizes.size();
    witness_disagreements += r.witness_disagreements;
    faults_injected += r.fault_injected;
    if (!r.violations.empty()) {
      ++violating_samples;
      for (const auto& v : r.violations) ++violations[v];
      if (!first_violation) {
        first_violation = r.index;
        first_violation_message = r.violations.front();
      }
    }
  }
  void merge(const StructureTally& o) {
    samples += o.samples;
    excluded += o.excluded;
    finite += o.finite;
    large_finite += o.large_finite;
    s_o_defined += o.s_o_defined;
    phi_applicable += o.phi_applicable;
    phi_within_cut += o.phi_within_cut;
    inc_ex_checked += o.inc_ex_checked;
    inc_ex_equal += o.inc_ex_equal;
    occurring_total += o.occurring_total;
    witness_disagreements += o.witness_disagreements;
    faults_injected += o.faults_injected;
    violating_samples += o.violating_samples;
    for (const auto& [k, v] : o.violations) violations[k] += v;
    for (const auto& [k, v] : o.exclusions) exclusions[k] += v;
    if (!first_violation && o.first_violation) {
      first_violation = o.first_violation;
      first_violation_message = o.first_violation_message;
    }
  }
  double exclusion_rate() const { return samples ? static_cast<double>(excluded) / static_cast<double>(samples) : 0.0; }
  std::uint64_t violation_count() const {
    std::uint64_t t = 0;
    for (const auto& [k, v] : violations) t += v;
    return t;
  }
};

template <int D>
StructureTally structure_suite(double p, const WindowSpec& spec, std::uint64_t n_samples, std::uint64_t seed,
                               unsigned workers = 1, const PipelineOptions& opt = {}) {
  require_probability(p);
  const auto w = make_window<D>(spec);
  return run_blocks(n_samples, workers, StructureTally{}, [&](std::uint64_t i, StructureTally& t) {
    t.add(analyze_sample<D>(pipeline_configuration<D>(w, p, seed, i, opt), opt));
  });
}

enum class TailStatistic { cut_size, touching, renorm_boundary };

inline const char* to_string(TailStatistic s) {
  switch (s) {
    case TailStatistic::cut_size: return "cut_size";
    case TailStatistic::touching: return "touching";
    case TailStatistic::renorm_boundary: return "renorm_boundary";
  }
  return "?";
}

struct TailEstimate {
  TailStatistic statistic = TailStatistic::cut_size;
  std::uint64_t samples = 0;
  std::uint64_t finite = 0;    // base of the survival function
  std::uint64_t excluded = 0;  // finite-C_o samples dropped for margin reasons
  std::uint64_t undefined = 0; // finite C_o but statistic undefined (no C_∞ for φ)
  std::map<std::size_t, std::uint64_t> counts;  // value -> number of samples
  std::optional<LinearFit> fit;
  std::size_t fit_lo = 0, fit_hi = 0;
  double rate = 0.0;  // t̂
  Interval rate_ci;
  std::string fit_status;

  void merge(const TailEstimate& o) {
    samples += o.samples;
    finite += o.finite;
    excluded += o.excluded;
    undefined += o.undefined;
    for (const auto& [k, v] : o.counts) counts[k] += v;
  }
  /// Number of base samples with value >= n.
  std::uint64_t at_least(std::size_t n) const {
    std::uint64_t t = 0;
    for (auto it = counts.lower_bound(n); it != counts.end(); ++it) t += it->second;
    return t;
  }
  double survival(std::size_t n) const {
    return finite ? static_cast<double>(at_least(n)) / static_cast<double>(finite) : 0.0;
  }
};

/// Log-linear fit of the survival function from the median positive value up
/// to the last n with at least 20 samples at or above it.
inline void fit_tail(TailEstimate& t) {
  if (t.finite < 100) throw InsufficientData("tail: fewer than 100 finite-cluster samples");
  std::vector<std::size_t> positive;
  for (const auto& [v, c] : t.counts)
    if (v > 0) positive.insert(positive.end(), c, v);
  if (positive.empty()) throw InsufficientData("tail: statistic never positive");
  const std::size_t lo = positive[(positive.size() - 1) / 2];
  std::size_t hi = lo;
  for (std::size_t n = lo; t.at_least(n) >= 20; ++n) hi = n;
  std::vector<double> x, y, w;
  for (std::size_t n = lo; n <= hi; ++n) {
    const auto k = t.at_least(n);
    if (k < 20) break;
    x.push_back(static_cast<double>(n));
    y.push_back(std::log(t.survival(n)));
    w.push_back(static_cast<double>(k));
  }
  if (x.size() < 3) throw InsufficientData("tail: fewer than 3 points in the fit range");
  t.fit_lo = lo;
  t.fit_hi = hi;
  t.fit = weighted_linear_fit(x, y, w);
  t.rate = -t.fit->slope;
  t.rate_ci = {t.rate - kZ95 * t.fit->slope_se, t.rate + kZ95 * t.fit->slope_se};
  t.fit_status = "ok";
}

/// Log-linear fit on a range fixed in advance (points with fewer than 20
/// samples at or above n are dropped).
inline void fit_tail(TailEstimate& t, std::size_t lo, std::size_t hi) {
  if (t.finite < 100) throw InsufficientData("tail: fewer than 100 finite-cluster samples");
  if (lo > hi) throw InvalidArgument("tail: empty fit range");
  std::vector<double> x, y, w;
  for (std::size_t n = lo; n <= hi; ++n) {
    const auto k = t.at_least(n);
    if (k < 20) break;
    x.push_back(static_cast<double>(n));
    y.push_back(std::log(t.survival(n)));
    w.push_back(static_cast<double>(k));
  }
  if (x.size() < 3) throw InsufficientData("tail: fewer than 3 points with >= 20 samples in the fixed range");
  t.fit_lo = lo;
  t.fit_hi = lo + x.size() - 1;
  t.fit = weighted_linear_fit(x, y, w);
  t.rate = -t.fit->slope;
  t.rate_ci = {t.rate - kZ95 * t.fit->slope_se, t.rate + kZ95 * t.fit->slope_se};
  t.fit_status = "ok";
}

/// Survival function of the chosen statistic over samples with C_o finite;
/// S_o-based statistics are 0 when S_o is absent and exclude samples whose
/// renormalized structure reaches the box rim. Samples with infinite C_o
/// are recognised by a local exploration before anything is materialized.
template <int D>
TailEstimate tail_experiment(double p, const WindowSpec& spec, std::uint64_t n_samples, std::uint64_t seed,
                             TailStatistic stat, unsigned workers = 1, bool fit = true) {
  require_probability(p);
  const auto w = make_window<D>(spec);
  const VertexIndex o = w.index(Point<D>{});
  TailEstimate proto;
  proto.statistic = stat;
  auto t = run_blocks(n_samples, workers, proto, [&](std::uint64_t i, TailEstimate& acc) {
    ++acc.samples;
    if (explore_cluster(LazyConfiguration<D>(w, p, seed, i), o, true).touches_rim) return;
    if (stat == TailStatistic::touching) {
      // φ needs only the labeling; no renormalized structure, no margin.
      const auto c = sample<D>(w, p, seed, i);
      const ClusterLabeling<D> lab(c);
      if (!lab.infinite_root()) {
        ++acc.undefined;
        return;
      }
      ++acc.finite;
      ++acc.counts[touching_edge_count<D>(c, lab)];
      return;
    }
    PipelineOptions opt;
    opt.check_star = false;
    opt.enumerate = false;
    const SampleReport r = analyze_sample<D>(sample<D>(w, p, seed, i), opt);
    if (!r.violations.empty()) throw InvariantViolation("tail sample " + std::to_string(i) + ": " + r.violations.front());
    if (r.excluded) {
      ++acc.excluded;
      return;
    }
    std::optional<std::size_t> value;
    switch (stat) {
      case TailStatistic::cut_size: value = r.cut_size.value_or(0); break;
      case TailStatistic::renorm_boundary: value = r.s_o_boxes.value_or(0); break;
      case TailStatistic::touching: value = r.phi; break;
    }
    if (!value) {
      ++acc.undefined;
      return;
    }
    ++acc.finite;
    ++acc.counts[*value];
  });
  t.statistic = stat;
  if (fit) {
    try {
      fit_tail(t);
    } catch (const InsufficientData& e) {
      t.fit_status = e.what();
      throw;
    }
  }
  return t;
}

struct ExpansionResult {
  SignedAggregate aggregate;
  std::optional<DecayCheck> decay;
  std::string decay_status;
  ComplexityCheck complexity;
  double complexity_lo = 0.0, complexity_hi = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t excluded = 0;
  double sum_terms = 0.0;
  double direct = 0.0;
  double combined_se = 0.0;
  double discrepancy_se = 0.0;
};

/// â_n per total box count n <= n_max, the direct union estimate, and the
/// decay and complexity checks.
template <int D>
ExpansionResult empirical_expansion(double p, const WindowSpec& spec, std::size_t n_max, std::uint64_t n_samples,
                                    std::uint64_t seed, unsigned workers = 1, const PipelineOptions& base = {}) {
  require_probability(p);
  const auto w = make_window<D>(spec);
  struct Acc {
    SignedAggregate agg;
    std::vector<std::pair<std::size_t, std::size_t>> sizes;
    void merge(const Acc& o) {
      agg.merge(o.agg);
      sizes.insert(sizes.end(), o.sizes.begin(), o.sizes.end());
    }
  };
  Acc proto{SignedAggregate(n_max), {}};
  const auto acc = run_blocks(n_samples, workers, proto, [&](std::uint64_t i, Acc& a) {
    PipelineOptions opt = base;
    opt.check_star = false;
    opt.enumerate = true;
    const SampleReport r = analyze_sample<D>(pipeline_configuration<D>(w, p, seed, i, opt), opt);
    if (!r.violations.empty())
      throw InvariantViolation("expansion sample " + std::to_string(i) + ": " + r.violations.front());
    if (r.excluded) {
      ++a.agg.excluded;
      return;
    }
    add_signed_sample(a.agg, r.occurring_sizes, r.co_large);
    a.sizes.insert(a.sizes.end(), r.occurring_region_edges.begin(), r.occurring_region_edges.end());
  });
  ExpansionResult out;
  out.aggregate = acc.agg;
  out.samples = n_samples;
  out.excluded = acc.agg.excluded;
  // One box has E_box edges; n boxes of S contain >= n/2^D disjoint ones, and
  // S ∪ ∂⊠S has at most 3^D n boxes.
  std::size_t box_edges = 0;
  {
    const Extent<D> e = w.box_extent(BoxId<D>{});
    for (int a = 0; a < D; ++a) {
      std::size_t c = 1;
      for (int i = 0; i < D; ++i) c *= static_cast<std::size_t>(e.side(i) - (i == a ? 1 : 0));
      box_edges += c;
    }
  }
  out.complexity_lo = static_cast<double>(box_edges) / static_cast<double>(1u << D);
  out.complexity_hi = static_cast<double>(box_edges) * std::pow(3.0, D);
  out.complexity = complexity_check(acc.sizes, out.complexity_lo, out.complexity_hi);
  const auto& agg = out.aggregate;
  if (agg.samples > 0) {
    out.sum_terms = agg.truncated_sum.mean();
    out.direct = agg.direct.mean();
    out.combined_se = agg.difference.standard_error();
    const double diff = std::abs(out.sum_terms - out.direct);
    out.discrepancy_se = out.combined_se > 0 ? diff / out.combined_se : (diff == 0 ? 0.0 : INFINITY);
  }
  std::vector<double> mags(agg.per_n.size()), ses(agg.per_n.size());
  for (std::size_t n = 0; n < agg.per_n.size(); ++n) {
    mags[n] = std::abs(agg.per_n[n].mean());
    ses[n] = agg.per_n[n].standard_error();
  }
  try {
    out.decay = geometric_decay_check(mags, ses);
    out.decay_status = out.decay->pass ? "pass" : "fail";
  } catch (const InsufficientData& e) {
    out.decay_status = e.what();
  }
  return out;
}

}  // namespace bperc
