#pragma once
// Coarse-graining onto the box lattice: substantial boxes of a cluster, the
// internal boundary of the substantial set, good and bad boxes.
//
// Within a box only edges with both endpoints in the box count. Diameter
// thresholds are compared in integers: a component is "large" iff
// 5 * diam >= N.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "bperc/clusters.hpp"
#include "bperc/configuration.hpp"
#include "bperc/errors.hpp"
#include "bperc/lattice.hpp"
#include "bperc/polynomial.hpp"
#include "bperc/rng.hpp"
#include "bperc/stats.hpp"

namespace bperc {

inline bool large_diameter(int diam, int n) { return 5 * diam >= n; }

enum class BoxFailure : int {
  none = 0,
  no_crossing = 1,           // no cluster of the box meets all 2D faces
  overlap_not_crossed = 2,   // the crossing cluster fails to cross some B(x,y)
  second_large_cluster = 3,  // another cluster has diameter >= N/5
};

inline const char* to_string(BoxFailure f) {
  switch (f) {
    case BoxFailure::none: return "none";
    case BoxFailure::no_crossing: return "no_crossing";
    case BoxFailure::overlap_not_crossed: return "overlap_not_crossed";
    case BoxFailure::second_large_cluster: return "second_large_cluster";
  }
  return "?";
}

/// What one box looks like in one configuration.
struct BoxInfo {
  bool good = false;
  BoxFailure failure = BoxFailure::no_crossing;
  /// A vertex of the crossing cluster when exactly one exists.
  VertexIndex crossing = kNoVertex;
  /// One vertex per box cluster of diameter >= N/5.
  std::vector<VertexIndex> substantial;
};

namespace detail {

/// Union-find labeling of the open subgraph induced on an extent. Buffers
/// are reused across calls.
template <int D>
struct ExtentLabeler {
  std::vector<std::uint32_t> root;
  std::array<std::size_t, D> stride{};

  std::size_t local(const Extent<D>& e, const Point<D>& p) const {
    std::size_t k = 0;
    for (int i = 0; i < D; ++i) k += static_cast<std::size_t>(p[i] - e.lo[i]) * stride[i];
    return k;
  }

  template <EdgeOracle O>
  void label(const O& oracle, const Extent<D>& e) {
    const auto& w = oracle.window();
    std::size_t st = 1;
    for (int i = D - 1; i >= 0; --i) {
      stride[i] = st;
      st *= static_cast<std::size_t>(e.side(i));
    }
    root.resize(st);
    std::iota(root.begin(), root.end(), 0u);
    std::size_t k = 0;
    e.for_each([&](const Point<D>& p) {
      const std::size_t g = static_cast<std::size_t>(w.index(p)) * D;
      for (int a = 0; a < D; ++a)
        if (p[a] < e.hi[a] && oracle.open(g + a)) unite(k, k + stride[a]);
      ++k;
    });
    for (std::size_t i = 0; i < root.size(); ++i) root[i] = find(static_cast<std::uint32_t>(i));
  }

  std::uint32_t find(std::uint32_t x) {
    while (root[x] != x) {
      root[x] = root[root[x]];
      x = root[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    auto ra = find(static_cast<std::uint32_t>(a)), rb = find(static_cast<std::uint32_t>(b));
    if (ra == rb) return;
    if (ra < rb)
      root[rb] = ra;
    else
      root[ra] = rb;
  }
};

template <int D>
struct BoxScratch {
  ExtentLabeler<D> box, overlap;
  std::vector<unsigned> faces;
  std::vector<L1Extremes<D>> extremes;
  std::vector<char> in_crossing;
};

}  // namespace detail

/// Classifies one box. The three good-box conditions are checked in the order
/// (a) crossing cluster exists, (c) no other cluster of diameter >= N/5,
/// (b) the crossing cluster crosses each overlap B(x,y); the first failure is
/// reported.
template <int D, EdgeOracle O>
BoxInfo analyze_box(const O& oracle, const BoxId<D>& b, detail::BoxScratch<D>& s) {
  const auto& w = oracle.window();
  const Extent<D> e = w.box_extent(b);
  const int n = w.box_scale();
  s.box.label(oracle, e);
  const std::size_t vol = s.box.root.size();
  s.faces.assign(vol, 0u);
  s.extremes.assign(vol, L1Extremes<D>{});
  std::size_t k = 0;
  e.for_each([&](const Point<D>& p) {
    const auto r = s.box.root[k];
    s.faces[r] |= face_mask<D>(e, p);
    s.extremes[r].add(p);
    ++k;
  });

  BoxInfo info;
  std::vector<std::uint32_t> crossing;
  VertexIndex crossing_vertex = kNoVertex;
  k = 0;
  e.for_each([&](const Point<D>& p) {
    if (s.box.root[k] == k) {
      if (s.faces[k] == all_faces_mask<D>()) {
        crossing.push_back(static_cast<std::uint32_t>(k));
        crossing_vertex = w.index(p);
      }
      if (large_diameter(s.extremes[k].diameter(), n)) info.substantial.push_back(w.index(p));
    }
    ++k;
  });

  if (crossing.empty()) {
    info.failure = BoxFailure::no_crossing;
    return info;
  }
  if (crossing.size() > 1) {
    info.failure = BoxFailure::second_large_cluster;
    return info;
  }
  info.crossing = crossing_vertex;
  // A crossing cluster has diameter >= 2 floor(3N/4) >= N/5, so it is always
  // among the substantial ones.
  if (info.substantial.size() != 1) {
    info.failure = BoxFailure::second_large_cluster;
    return info;
  }
  const std::uint32_t cross_root = crossing.front();

  Extent<D> around;
  for (int i = 0; i < D; ++i) {
    around.lo[i] = -1;
    around.hi[i] = 1;
  }
  bool ok = true;
  around.for_each([&](const Point<D>& off) {
    if (!ok || off == Point<D>{}) return;
    Extent<D> ov = e;
    for (int i = 0; i < D; ++i) {
      ov.lo[i] = std::max(e.lo[i], e.lo[i] + n * off[i]);
      ov.hi[i] = std::min(e.hi[i], e.hi[i] + n * off[i]);
    }
    s.overlap.label(oracle, ov);
    const std::size_t ovol = s.overlap.root.size();
    s.in_crossing.assign(ovol, 0);
    std::vector<unsigned> faces(ovol, 0u);
    std::size_t j = 0;
    ov.for_each([&](const Point<D>& p) {
      const auto r = s.overlap.root[j];
      if (s.box.root[s.box.local(e, p)] == cross_root) s.in_crossing[r] = 1;
      faces[r] |= face_mask<D>(ov, p);
      ++j;
    });
    bool crossed = false;
    for (std::size_t r = 0; r < ovol && !crossed; ++r)
      crossed = s.overlap.root[r] == r && s.in_crossing[r] && faces[r] == all_faces_mask<D>();
    if (!crossed) ok = false;
  });
  if (!ok) {
    info.failure = BoxFailure::overlap_not_crossed;
    return info;
  }
  info.good = true;
  info.failure = BoxFailure::none;
  return info;
}

template <int D, EdgeOracle O>
BoxInfo analyze_box(const O& oracle, const BoxId<D>& b) {
  detail::BoxScratch<D> s;
  return analyze_box<D>(oracle, b, s);
}

template <int D, EdgeOracle O>
bool is_good(const BoxId<D>& b, const O& oracle) {
  return analyze_box<D>(oracle, b).good;
}

/// Lazily classified boxes of one configuration. Not thread-safe; use one per
/// worker.
template <int D, EdgeOracle O>
class BoxClassification {
 public:
  explicit BoxClassification(const O& oracle) : oracle_(&oracle), cache_(oracle.window().box_count()) {}

  const LatticeWindow<D>& window() const { return oracle_->window(); }
  const O& oracle() const { return *oracle_; }

  const BoxInfo& info(std::size_t box) const {
    auto& slot = cache_[box];
    if (!slot) slot = analyze_box<D>(*oracle_, window().box_id(box), scratch_);
    return *slot;
  }
  const BoxInfo& info(const BoxId<D>& b) const {
    window().require_box(b);
    return info(window().box_index(b));
  }
  bool good(std::size_t box) const { return info(box).good; }
  bool good(const BoxId<D>& b) const { return info(b).good; }

  void classify_all() const {
    for (std::size_t k = 0; k < cache_.size(); ++k) info(k);
  }

  /// Whether the cluster with root `root` is substantial in `box`.
  bool substantial_for(std::size_t box, VertexIndex root, const ClusterLabeling<D>& lab) const {
    for (VertexIndex v : info(box).substantial)
      if (lab.root(v) == root) return true;
    return false;
  }

 private:
  const O* oracle_;
  mutable std::vector<std::optional<BoxInfo>> cache_;
  mutable detail::BoxScratch<D> scratch_;
};

/// Whether the open subgraph induced on (cluster ∩ B(b)) has a component of
/// diameter >= N/5.
template <int D, EdgeOracle O>
bool is_substantial(const BoxId<D>& b, const VertexSet& cluster, const O& oracle) {
  const auto& w = oracle.window();
  const Extent<D> e = w.box_extent(b);
  std::vector<VertexIndex> inside;
  e.for_each([&](const Point<D>& p) {
    const VertexIndex v = w.index(p);
    if (cluster.contains(v)) inside.push_back(v);
  });
  const VertexSet in(std::move(inside));
  std::vector<char> seen(in.size(), 0);
  const auto& idx = in.indices();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (seen[i]) continue;
    L1Extremes<D> ex;
    std::vector<std::size_t> stack{i};
    seen[i] = 1;
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const Point<D> p = w.point(idx[c]);
      ex.add(p);
      w.for_each_incident(idx[c], p, [&](VertexIndex u, std::size_t slot) {
        const auto it = std::lower_bound(idx.begin(), idx.end(), u);
        if (it == idx.end() || *it != u) return;
        const auto j = static_cast<std::size_t>(it - idx.begin());
        if (!seen[j] && oracle.open(slot)) {
          seen[j] = 1;
          stack.push_back(j);
        }
      });
    }
    if (large_diameter(ex.diameter(), w.box_scale())) return true;
  }
  return false;
}

/// C(N) for one cluster together with its internal boundary.
struct SubstantialSet {
  std::vector<std::size_t> boxes;     // sorted box indices
  std::vector<std::size_t> boundary;  // sorted, subset of boxes
  bool touches_rim = false;           // some substantial box lies on the box rim
};

/// Boxes of C(N) adjacent (axis adjacency) to the complement component that
/// reaches the box rim; the finite-volume reading of "incident with an
/// infinite component of the complement".
template <int D>
SubstantialSet with_internal_boundary(std::vector<std::size_t> boxes, const LatticeWindow<D>& w) {
  SubstantialSet s;
  std::sort(boxes.begin(), boxes.end());
  boxes.erase(std::unique(boxes.begin(), boxes.end()), boxes.end());
  std::vector<char> in(w.box_count(), 0), outer(w.box_count(), 0);
  for (auto k : boxes) {
    in[k] = 1;
    if (w.box_on_rim(w.box_id(k))) s.touches_rim = true;
  }
  std::vector<std::size_t> stack;
  for (std::size_t k = 0; k < w.box_count(); ++k)
    if (!in[k] && w.box_on_rim(w.box_id(k))) {
      outer[k] = 1;
      stack.push_back(k);
    }
  while (!stack.empty()) {
    const auto k = stack.back();
    stack.pop_back();
    for (const auto& nb : w.box_neighbors(w.box_id(k), Adjacency::axis)) {
      const auto j = w.box_index(nb);
      if (!in[j] && !outer[j]) {
        outer[j] = 1;
        stack.push_back(j);
      }
    }
  }
  for (auto k : boxes) {
    for (const auto& nb : w.box_neighbors(w.box_id(k), Adjacency::axis))
      if (outer[w.box_index(nb)]) {
        s.boundary.push_back(k);
        break;
      }
  }
  s.boxes = std::move(boxes);
  return s;
}

/// C(N) and its internal boundary from the cluster's vertex set, checking
/// every box the cluster meets directly.
template <int D, EdgeOracle O>
SubstantialSet substantial_set(const VertexSet& cluster, const O& oracle) {
  if (cluster.empty()) throw InvalidArgument("substantial_set of an empty cluster");
  const auto& w = oracle.window();
  std::map<std::size_t, std::vector<VertexIndex>> buckets;
  for (VertexIndex v : cluster)
    w.for_each_box_containing(w.point(v), [&](const BoxId<D>& b) { buckets[w.box_index(b)].push_back(v); });
  std::vector<std::size_t> boxes;
  for (auto& [k, members] : buckets) {
    if (is_substantial<D>(w.box_id(k), VertexSet(std::move(members)), oracle)) boxes.push_back(k);
  }
  return with_internal_boundary<D>(std::move(boxes), w);
}

/// C(N) from a labeling and a box classification (uses the cached per-box
/// substantial clusters).
template <int D, EdgeOracle O>
SubstantialSet substantial_set(VertexIndex root, const ClusterLabeling<D>& lab, const BoxClassification<D, O>& cls) {
  const auto& w = lab.window();
  std::vector<std::size_t> candidates;
  for (VertexIndex v : lab.members(root))
    w.for_each_box_containing(w.point(v), [&](const BoxId<D>& b) { candidates.push_back(w.box_index(b)); });
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::vector<std::size_t> boxes;
  for (auto k : candidates)
    if (cls.substantial_for(k, root, lab)) boxes.push_back(k);
  return with_internal_boundary<D>(std::move(boxes), w);
}

/// Connected components of a box set under the given adjacency, each sorted.
template <int D>
std::vector<std::vector<std::size_t>> box_components(const std::vector<std::size_t>& boxes, const LatticeWindow<D>& w,
                                                     Adjacency mode) {
  std::vector<char> in(w.box_count(), 0), seen(w.box_count(), 0);
  for (auto k : boxes) in[k] = 1;
  std::vector<std::vector<std::size_t>> out;
  for (auto k : boxes) {
    if (seen[k]) continue;
    std::vector<std::size_t> comp, stack{k};
    seen[k] = 1;
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      comp.push_back(x);
      for (const auto& nb : w.box_neighbors(w.box_id(x), mode)) {
        const auto j = w.box_index(nb);
        if (in[j] && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

/// The internal boundary of a finite cluster's substantial set is
/// ⊠-connected.
template <int D>
bool check_timar(const SubstantialSet& s, const LatticeWindow<D>& w) {
  if (s.touches_rim) throw MarginViolation("check_timar: substantial set reaches the box rim");
  if (s.boundary.empty()) return true;
  return box_components<D>(s.boundary, w, Adjacency::diagonal).size() == 1;
}

/// In a ⊠-connected set of good boxes exactly one cluster is substantial
/// somewhere, and it is substantial everywhere in the set.
template <int D, EdgeOracle O>
bool check_star(const std::vector<std::size_t>& component, const BoxClassification<D, O>& cls,
                const ClusterLabeling<D>& lab) {
  if (component.empty()) return true;
  for (auto k : component)
    if (!cls.good(k)) throw PreconditionError("check_star: component contains a bad box");
  std::vector<VertexIndex> roots;
  for (auto k : component)
    for (VertexIndex v : cls.info(k).substantial) roots.push_back(lab.root(v));
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  if (roots.size() != 1) return false;
  for (auto k : component)
    if (!cls.substantial_for(k, roots.front(), lab)) return false;
  return true;
}

struct GoodProbability {
  double estimate = 0.0;
  Interval ci;
  std::uint64_t good = 0;
  std::uint64_t samples = 0;
  std::size_t box_edges = 0;
  std::array<std::uint64_t, 4> failures{};  // indexed by BoxFailure
  /// Pr(B(o) good) is a polynomial in p: the event depends on finitely many
  /// edges.
  bool polynomial = true;
  /// Exact polynomial, present when the box has at most 25 edges.
  std::optional<ExponentPolynomial> exact;
};

/// Monte Carlo estimate of Pr_p(B(o) good). Only edges of B(o) are evaluated.
template <int D>
GoodProbability good_probability(double p, int n, std::uint64_t n_samples, std::uint64_t seed) {
  require_probability(p);
  if (n_samples < 1) throw InvalidArgument("good_probability needs at least one sample");
  const LatticeWindow<D> w(n, 3);
  GoodProbability out;
  out.samples = n_samples;
  const Extent<D> e = w.box_extent(BoxId<D>{});
  for (int a = 0; a < D; ++a) {
    std::size_t c = 1;
    for (int i = 0; i < D; ++i) c *= static_cast<std::size_t>(e.side(i) - (i == a ? 1 : 0));
    out.box_edges += c;
  }
  detail::BoxScratch<D> scratch;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    const LazyConfiguration<D> c(w, p, seed, i);
    const BoxInfo info = analyze_box<D>(c, BoxId<D>{}, scratch);
    ++out.failures[static_cast<std::size_t>(info.failure)];
    if (info.good) ++out.good;
  }
  out.estimate = static_cast<double>(out.good) / static_cast<double>(n_samples);
  out.ci = wilson_interval(out.good, n_samples);
  return out;
}

}  // namespace bperc
