#pragma once
// Separating components: ⊠-connected sets of bad boxes enclosing the origin,
// their occurrence predicate, and the closed edge cut they carry.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bperc/clusters.hpp"
#include "bperc/configuration.hpp"
#include "bperc/errors.hpp"
#include "bperc/lattice.hpp"
#include "bperc/renorm.hpp"

namespace bperc {

template <int D>
struct SeparatingComponent {
  std::vector<std::size_t> boxes;     // sorted box indices, ⊠-connected
  std::vector<std::size_t> boundary;  // ∂⊠S: ⊠-neighbours outside S, sorted
  bool surrounds_origin = false;
  bool touches_rim = false;  // S reaches the box rim; ∂⊠S is then clipped

  std::size_t size() const { return boxes.size(); }
  bool contains(std::size_t box) const { return std::binary_search(boxes.begin(), boxes.end(), box); }
  friend bool operator==(const SeparatingComponent&, const SeparatingComponent&) = default;
};

/// Completes a ⊠-connected box set with its ⊠-boundary and the origin test:
/// o is surrounded iff B(o) ∈ S or the ⊠-component of B(o) in the complement
/// of S stays off the box rim.
template <int D>
SeparatingComponent<D> make_component(std::vector<std::size_t> boxes, const LatticeWindow<D>& w) {
  if (boxes.empty()) throw InvalidArgument("separating component must be nonempty");
  std::sort(boxes.begin(), boxes.end());
  boxes.erase(std::unique(boxes.begin(), boxes.end()), boxes.end());
  if (box_components<D>(boxes, w, Adjacency::diagonal).size() != 1)
    throw InvalidArgument("separating component must be ⊠-connected");
  SeparatingComponent<D> s;
  std::vector<char> in(w.box_count(), 0), bd(w.box_count(), 0);
  for (auto k : boxes) in[k] = 1;
  for (auto k : boxes) {
    if (w.box_on_rim(w.box_id(k))) s.touches_rim = true;
    for (const auto& nb : w.box_neighbors(w.box_id(k), Adjacency::diagonal)) {
      const auto j = w.box_index(nb);
      if (!in[j] && !bd[j]) {
        bd[j] = 1;
        s.boundary.push_back(j);
      }
    }
  }
  std::sort(s.boundary.begin(), s.boundary.end());
  const std::size_t origin = w.box_index(BoxId<D>{});
  if (in[origin]) {
    s.surrounds_origin = true;
  } else {
    std::vector<char> seen(w.box_count(), 0);
    std::vector<std::size_t> stack{origin};
    seen[origin] = 1;
    bool escapes = false;
    while (!stack.empty() && !escapes) {
      const auto k = stack.back();
      stack.pop_back();
      if (w.box_on_rim(w.box_id(k))) escapes = true;
      for (const auto& nb : w.box_neighbors(w.box_id(k), Adjacency::diagonal)) {
        const auto j = w.box_index(nb);
        if (!in[j] && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    s.surrounds_origin = !escapes;
  }
  s.boxes = std::move(boxes);
  return s;
}

/// Edges whose state belongs to the boxes of S ∪ ∂⊠S: both endpoints in one
/// common box of that set.
template <int D>
class BoxRegion {
 public:
  BoxRegion(const SeparatingComponent<D>& s, const LatticeWindow<D>& w) : window_(&w), mask_(w.box_count(), 0) {
    for (auto k : s.boxes) mask_[k] = 1;
    for (auto k : s.boundary) mask_[k] = 1;
  }
  bool contains(std::size_t slot) const {
    const Edge<D> e{window_->point(static_cast<VertexIndex>(slot / D)), static_cast<int>(slot % D)};
    bool hit = false;
    window_->for_each_box_containing(e, [&](const BoxId<D>& b) { hit = hit || mask_[window_->box_index(b)]; });
    return hit;
  }

 private:
  const LatticeWindow<D>* window_;
  std::vector<char> mask_;
};

/// ω'': agrees with the base configuration inside the region of S ∪ ∂⊠S and
/// is open everywhere else.
template <int D, EdgeOracle O>
class OpenOutside {
 public:
  OpenOutside(const O& base, const BoxRegion<D>& region) : base_(&base), region_(&region) {}
  const LatticeWindow<D>& window() const { return base_->window(); }
  bool open(std::size_t slot) const { return !region_->contains(slot) || base_->open(slot); }

 private:
  const O* base_;
  const BoxRegion<D>* region_;
};

struct Occurrence {
  bool all_bad = false;             // (i)
  bool boundary_good = false;       // (ii)
  bool canonical_witness = false;   // (iii') witnessed by ω''
  bool identity_witness = false;    // (iii) witnessed by ω itself
  bool occurs() const { return all_bad && boundary_good && canonical_witness; }
  /// The two witness predicates disagree; reported, never resolved silently.
  bool witnesses_disagree() const { return all_bad && boundary_good && canonical_witness != identity_witness; }
};

/// Whether `witness` makes condition (iii) hold for S: C_o(witness) is
/// finite and S contains ∂C_o(witness)(N).
template <int D, EdgeOracle O>
bool is_witness(const SeparatingComponent<D>& s, const O& witness) {
  const auto& w = witness.window();
  const auto cluster = explore_cluster(witness, w.index(Point<D>{}), /*stop_at_rim=*/true);
  if (cluster.touches_rim) return false;
  const SubstantialSet sub = substantial_set<D>(VertexSet(cluster.vertices), witness);
  if (sub.touches_rim) throw MarginViolation("witness cluster is substantial in a rim box");
  for (auto k : sub.boundary)
    if (!s.contains(k)) return false;
  return true;
}

template <int D, EdgeOracle O>
Occurrence occurrence(const SeparatingComponent<D>& s, const BoxClassification<D, O>& cls) {
  if (s.touches_rim) throw MarginViolation("separating component reaches the box rim");
  Occurrence occ;
  occ.all_bad = std::none_of(s.boxes.begin(), s.boxes.end(), [&](auto k) { return cls.good(k); });
  occ.boundary_good = std::all_of(s.boundary.begin(), s.boundary.end(), [&](auto k) { return cls.good(k); });
  if (!occ.all_bad || !occ.boundary_good) return occ;
  const auto& w = cls.window();
  const BoxRegion<D> region(s, w);
  const OpenOutside<D, O> canonical(cls.oracle(), region);
  occ.canonical_witness = is_witness<D>(s, canonical);
  occ.identity_witness = is_witness<D>(s, cls.oracle());
  return occ;
}

template <int D, EdgeOracle O>
bool occurs(const SeparatingComponent<D>& s, const BoxClassification<D, O>& cls) {
  return occurrence<D>(s, cls).occurs();
}

/// The origin cluster of ω, its diameter and its substantial set.
template <int D>
struct OriginCluster {
  VertexIndex root = kNoVertex;
  bool finite = false;
  int diameter = 0;
  bool large = false;  // 5 diam >= N
};

template <int D>
OriginCluster<D> origin_cluster(const ClusterLabeling<D>& lab) {
  OriginCluster<D> c;
  const auto& w = lab.window();
  c.root = lab.root(Point<D>{});
  c.finite = !lab.touches_rim(c.root);
  c.diameter = lab.diameter(c.root);
  c.large = large_diameter(c.diameter, w.box_scale());
  return c;
}

/// S_o: the maximal bad ⊠-connected box set containing ∂C_o(N). Absent when
/// C_o is infinite or has diameter below N/5.
template <int D, EdgeOracle O>
std::optional<SeparatingComponent<D>> build_S_o(const ClusterLabeling<D>& lab, const BoxClassification<D, O>& cls) {
  const auto& w = lab.window();
  const auto co = origin_cluster<D>(lab);
  if (!co.finite || !co.large) return std::nullopt;
  const SubstantialSet sub = substantial_set<D>(co.root, lab, cls);
  if (sub.touches_rim) throw MarginViolation("C_o(N) reaches the box rim");
  if (sub.boundary.empty()) throw InvariantViolation("finite C_o of diameter >= N/5 has empty internal boundary");
  for (auto k : sub.boundary)
    if (cls.good(k)) throw InvariantViolation("a box of the internal boundary of C_o(N) is good");
  std::vector<char> seen(w.box_count(), 0);
  std::vector<std::size_t> stack(sub.boundary.begin(), sub.boundary.end()), boxes;
  for (auto k : stack) seen[k] = 1;
  while (!stack.empty()) {
    const auto k = stack.back();
    stack.pop_back();
    boxes.push_back(k);
    if (w.box_on_rim(w.box_id(k))) throw MarginViolation("S_o reaches the box rim");
    for (const auto& nb : w.box_neighbors(w.box_id(k), Adjacency::diagonal)) {
      const auto j = w.box_index(nb);
      if (!seen[j] && !cls.good(j)) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  if (box_components<D>(boxes, w, Adjacency::diagonal).size() != 1)
    throw InvariantViolation("internal boundary of C_o(N) is not ⊠-connected");
  return make_component<D>(std::move(boxes), w);
}

/// Flood fill from o through all lattice edges except `cut`; true iff the rim
/// stays unreachable.
template <int D>
bool cut_separates_origin(const std::vector<std::size_t>& cut, const LatticeWindow<D>& w) {
  std::vector<char> seen(w.vertex_count(), 0);
  const VertexIndex o = w.index(Point<D>{});
  std::vector<VertexIndex> stack{o};
  seen[o] = 1;
  while (!stack.empty()) {
    const VertexIndex v = stack.back();
    stack.pop_back();
    const Point<D> p = w.point(v);
    if (w.on_rim(p)) return false;
    w.for_each_incident(v, p, [&](VertexIndex u, std::size_t slot) {
      if (!seen[u] && !std::binary_search(cut.begin(), cut.end(), slot)) {
        seen[u] = 1;
        stack.push_back(u);
      }
    });
  }
  return true;
}

template <int D>
struct CutResult {
  std::vector<std::size_t> cut;  // ∂^b S_o as sorted slots
  VertexSet inner;               // C_o(ω'')
  const char* witness = "canonical-open-extension";
};

/// Closed minimal cut carried by an occurring S: the minimal edge cut of
/// C_o(ω''). Checks that every cut edge is closed in ω, lies in the region of
/// S ∪ ∂⊠S, and separates o from the rim.
template <int D, EdgeOracle O>
CutResult<D> extract_cut(const SeparatingComponent<D>& s, const BoxClassification<D, O>& cls) {
  if (!occurs<D>(s, cls)) throw PreconditionError("extract_cut: component does not occur");
  const auto& w = cls.window();
  const BoxRegion<D> region(s, w);
  const OpenOutside<D, O> canonical(cls.oracle(), region);
  const auto cluster = explore_cluster(canonical, w.index(Point<D>{}), /*stop_at_rim=*/true);
  if (cluster.touches_rim) throw InvariantViolation("C_o(ω'') is infinite although S occurs");
  CutResult<D> r;
  r.inner = VertexSet(cluster.vertices);
  r.cut = minimal_edge_cut<D>(r.inner, w);
  for (auto slot : r.cut) {
    if (cls.oracle().open(slot)) throw InvariantViolation("cut edge is open in ω");
    if (!region.contains(slot)) throw InvariantViolation("cut edge outside the region of S ∪ ∂⊠S");
  }
  if (!cut_separates_origin<D>(r.cut, w)) throw InvariantViolation("cut does not separate o from the rim");
  return r;
}

template <int D>
struct Enumeration {
  std::vector<SeparatingComponent<D>> occurring;
  std::size_t candidates = 0;         // bad ⊠-components surrounding o
  std::size_t margin_violations = 0;  // candidates that reach the box rim
  std::size_t witness_disagreements = 0;
  bool margin_ok() const { return margin_violations == 0; }
};

/// Every occurring separating component. Only maximal bad ⊠-components can
/// occur (a non-maximal one has a bad box in its ⊠-boundary), so the scan
/// covers all of them.
template <int D, EdgeOracle O>
Enumeration<D> enumerate_occurring(const BoxClassification<D, O>& cls) {
  const auto& w = cls.window();
  std::vector<std::size_t> bad;
  for (std::size_t k = 0; k < w.box_count(); ++k)
    if (!cls.good(k)) bad.push_back(k);
  Enumeration<D> out;
  for (auto& comp : box_components<D>(bad, w, Adjacency::diagonal)) {
    auto s = make_component<D>(std::move(comp), w);
    if (!s.surrounds_origin) continue;
    ++out.candidates;
    if (s.touches_rim) {
      ++out.margin_violations;
      continue;
    }
    const Occurrence occ = occurrence<D>(s, cls);
    if (occ.witnesses_disagree()) ++out.witness_disagreements;
    if (occ.occurs()) out.occurring.push_back(std::move(s));
  }
  return out;
}

}  // namespace bperc
