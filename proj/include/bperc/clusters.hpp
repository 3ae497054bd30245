#pragma once
// Open clusters of a configuration: full-window union-find labeling, local
// exploration from a single vertex, edge boundaries and minimal edge cuts.
//
// Finite-volume convention: a cluster touching the outermost vertex layer of
// the window stands in for an infinite cluster.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

#include "bperc/configuration.hpp"
#include "bperc/errors.hpp"
#include "bperc/lattice.hpp"

namespace bperc {

/// Sorted vertex indices with O(log n) membership.
class VertexSet {
 public:
  VertexSet() = default;
  explicit VertexSet(std::vector<VertexIndex> v) : v_(std::move(v)) {
    std::sort(v_.begin(), v_.end());
    v_.erase(std::unique(v_.begin(), v_.end()), v_.end());
  }
  bool contains(VertexIndex x) const { return std::binary_search(v_.begin(), v_.end(), x); }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }
  const std::vector<VertexIndex>& indices() const { return v_; }
  friend bool operator==(const VertexSet&, const VertexSet&) = default;

 private:
  std::vector<VertexIndex> v_;
};

/// Connected components of the open subgraph of the whole window.
template <int D>
class ClusterLabeling {
 public:
  template <EdgeOracle O>
  explicit ClusterLabeling(const O& oracle) : window_(oracle.window()) {
    const std::size_t n = window_.vertex_count();
    root_.resize(n);
    std::iota(root_.begin(), root_.end(), VertexIndex{0});
    std::size_t v = 0;
    window_.extent().for_each([&](const Point<D>& p) {
      for (int a = 0; a < D; ++a) {
        if (p[a] < window_.extent().hi[a] && oracle.open(v * D + a))
          unite(static_cast<VertexIndex>(v), static_cast<VertexIndex>(v + window_.stride(a)));
      }
      ++v;
    });
    size_.assign(n, 0);
    rim_.assign(n, 0);
    extremes_.assign(n, L1Extremes<D>{});
    v = 0;
    window_.extent().for_each([&](const Point<D>& p) {
      const VertexIndex r = find(static_cast<VertexIndex>(v));
      root_[v] = r;
      ++size_[r];
      if (window_.on_rim(p)) rim_[r] = 1;
      extremes_[r].add(p);
      ++v;
    });
    // Largest rim-touching cluster; ties go to the smaller root.
    for (VertexIndex r = 0; r < n; ++r) {
      if (root_[r] != r || !rim_[r]) continue;
      if (giant_ == kNoVertex || size_[r] > size_[giant_]) giant_ = r;
    }
  }

  const LatticeWindow<D>& window() const { return window_; }
  VertexIndex root(VertexIndex v) const { return root_[v]; }
  VertexIndex root(const Point<D>& p) const { return root_[window_.index(p)]; }
  std::size_t size(VertexIndex root) const { return size_[root]; }
  bool touches_rim(VertexIndex root) const { return rim_[root] != 0; }
  int diameter(VertexIndex root) const { return extremes_[root].diameter(); }
  /// Root of the largest rim-touching cluster, if any.
  std::optional<VertexIndex> infinite_root() const {
    if (giant_ == kNoVertex) return std::nullopt;
    return giant_;
  }
  std::size_t cluster_count() const {
    std::size_t c = 0;
    for (std::size_t v = 0; v < root_.size(); ++v) c += root_[v] == v;
    return c;
  }
  VertexSet members(VertexIndex root) const {
    std::vector<VertexIndex> out;
    out.reserve(size_[root]);
    for (std::size_t v = 0; v < root_.size(); ++v)
      if (root_[v] == root) out.push_back(static_cast<VertexIndex>(v));
    return VertexSet(std::move(out));
  }

 private:
  VertexIndex find(VertexIndex x) {
    while (root_[x] != x) {
      root_[x] = root_[root_[x]];
      x = root_[x];
    }
    return x;
  }
  void unite(VertexIndex a, VertexIndex b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b)
      root_[b] = a;
    else
      root_[a] = b;
  }

  LatticeWindow<D> window_;
  std::vector<VertexIndex> root_;
  std::vector<std::size_t> size_;
  std::vector<char> rim_;
  std::vector<L1Extremes<D>> extremes_;
  VertexIndex giant_ = kNoVertex;
};

template <EdgeOracle O>
ClusterLabeling(const O&) -> ClusterLabeling<std::remove_cvref_t<decltype(std::declval<O>().window())>::kDim>;

template <int D>
struct ExploredCluster {
  std::vector<VertexIndex> vertices;  // discovery order; complete unless stopped early
  bool touches_rim = false;
  bool complete = true;
};

/// Depth-first exploration of the open cluster of `start`. With
/// stop_at_rim the search ends as soon as the rim is reached (the cluster is
/// then "infinite" and `vertices` is partial).
template <EdgeOracle O, int D = std::remove_cvref_t<decltype(std::declval<O>().window())>::kDim>
ExploredCluster<D> explore_cluster(const O& oracle, VertexIndex start, bool stop_at_rim,
                                   std::vector<char>* scratch = nullptr) {
  const auto& w = oracle.window();
  std::vector<char> local;
  std::vector<char>& seen = scratch ? *scratch : local;
  if (seen.size() != w.vertex_count()) seen.assign(w.vertex_count(), 0);
  ExploredCluster<D> out;
  std::vector<VertexIndex> stack{start};
  seen[start] = 1;
  out.vertices.push_back(start);
  while (!stack.empty()) {
    const VertexIndex v = stack.back();
    stack.pop_back();
    const Point<D> p = w.point(v);
    if (w.on_rim(p)) {
      out.touches_rim = true;
      if (stop_at_rim) {
        out.complete = false;
        break;
      }
    }
    w.for_each_incident(v, p, [&](VertexIndex u, std::size_t slot) {
      if (!seen[u] && oracle.open(slot)) {
        seen[u] = 1;
        out.vertices.push_back(u);
        stack.push_back(u);
      }
    });
  }
  if (scratch)
    for (VertexIndex v : out.vertices) seen[v] = 0;
  return out;
}

/// Edges of the window with at least one endpoint in S, excluding the open
/// edges with both endpoints in S. Returned as sorted slots.
template <EdgeOracle O>
std::vector<std::size_t> edge_boundary(const VertexSet& s, const O& oracle) {
  const auto& w = oracle.window();
  std::vector<std::size_t> out;
  for (VertexIndex v : s) {
    w.for_each_incident(v, [&](VertexIndex u, std::size_t slot) {
      const bool inside = s.contains(u);
      if (inside && oracle.open(slot)) return;
      if (inside && u < v) return;  // closed internal edge, counted from its lower end
      out.push_back(slot);
    });
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Vertices of the window outside S reachable from the outermost layer
/// without entering S, as a mask over window vertices. This is the
/// finite-volume "infinite component" of the complement of S.
template <int D>
std::vector<char> outer_complement(const VertexSet& s, const LatticeWindow<D>& w) {
  std::vector<char> outer(w.vertex_count(), 0);
  std::vector<VertexIndex> stack;
  VertexIndex v = 0;
  w.extent().for_each([&](const Point<D>& p) {
    if (w.on_rim(p) && !s.contains(v)) {
      outer[v] = 1;
      stack.push_back(v);
    }
    ++v;
  });
  while (!stack.empty()) {
    const VertexIndex x = stack.back();
    stack.pop_back();
    w.for_each_incident(x, [&](VertexIndex u, std::size_t) {
      if (!outer[u] && !s.contains(u)) {
        outer[u] = 1;
        stack.push_back(u);
      }
    });
  }
  return outer;
}

/// Edges from S into the unbounded component of Z^D \ S, as sorted slots.
///
/// The flood fill runs inside the bounding box of S grown by one layer: that
/// box's shell avoids S and is connected, so a vertex of the box belongs to
/// the unbounded complement component iff it reaches the shell.
template <int D>
std::vector<std::size_t> minimal_edge_cut(const VertexSet& s, const LatticeWindow<D>& w) {
  if (s.empty()) throw InvalidArgument("minimal_edge_cut of an empty set");
  Extent<D> box{w.point(*s.begin()), w.point(*s.begin())};
  for (VertexIndex v : s) {
    const Point<D> p = w.point(v);
    if (w.on_rim(p)) throw PreconditionError("minimal_edge_cut: set touches the window rim (infinite cluster)");
    for (int i = 0; i < D; ++i) {
      box.lo[i] = std::min(box.lo[i], p[i]);
      box.hi[i] = std::max(box.hi[i], p[i]);
    }
  }
  box = box.grown(1);
  const std::size_t vol = box.volume();
  std::array<std::size_t, D> stride{};
  std::size_t st = 1;
  for (int i = D - 1; i >= 0; --i) {
    stride[i] = st;
    st *= static_cast<std::size_t>(box.side(i));
  }
  auto local = [&](const Point<D>& p) {
    std::size_t k = 0;
    for (int i = 0; i < D; ++i) k += static_cast<std::size_t>(p[i] - box.lo[i]) * stride[i];
    return k;
  };
  std::vector<char> blocked(vol, 0), outer(vol, 0);
  for (VertexIndex v : s) blocked[local(w.point(v))] = 1;
  std::vector<Point<D>> stack;
  box.for_each([&](const Point<D>& p) {
    if (box.on_shell(p)) {
      outer[local(p)] = 1;
      stack.push_back(p);
    }
  });
  while (!stack.empty()) {
    const Point<D> p = stack.back();
    stack.pop_back();
    for (int a = 0; a < D; ++a)
      for (int sg : {-1, 1}) {
        Point<D> q = p;
        q[a] += sg;
        if (!box.contains(q)) continue;
        const std::size_t k = local(q);
        if (!outer[k] && !blocked[k]) {
          outer[k] = 1;
          stack.push_back(q);
        }
      }
  }
  std::vector<std::size_t> cut;
  for (VertexIndex v : s) {
    w.for_each_incident(v, [&](VertexIndex u, std::size_t slot) {
      if (outer[local(w.point(u))]) cut.push_back(slot);
    });
  }
  std::sort(cut.begin(), cut.end());
  return cut;
}

/// phi(C_o, C_inf): closed edges joining the origin's cluster to the largest
/// rim-touching cluster.
template <int D, EdgeOracle O>
std::size_t touching_edge_count(const O& oracle, const ClusterLabeling<D>& lab) {
  const auto& w = lab.window();
  const VertexIndex o = w.index(Point<D>{});
  const VertexIndex ro = lab.root(o);
  if (lab.touches_rim(ro)) throw PreconditionError("touching_edge_count: origin cluster is infinite");
  const auto giant = lab.infinite_root();
  if (!giant) throw PreconditionError("touching_edge_count: no infinite cluster in window");
  std::size_t count = 0;
  for (VertexIndex v : lab.members(ro)) {
    w.for_each_incident(v, [&](VertexIndex u, std::size_t slot) {
      if (lab.root(u) == *giant && !oracle.open(slot)) ++count;
    });
  }
  return count;
}

}  // namespace bperc
