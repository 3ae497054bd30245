#pragma once
// Hand-built configurations and brute-force oracles shared by the unit tests.

#include <algorithm>
#include <deque>
#include <set>
#include <vector>

#include "bperc/clusters.hpp"
#include "bperc/configuration.hpp"
#include "bperc/lattice.hpp"

namespace bperc::testing {

template <int D>
Configuration<D> all_closed(const LatticeWindow<D>& w) {
  return Configuration<D>(w, 0.0, 0, 0);
}

template <int D>
Configuration<D> all_open(const LatticeWindow<D>& w) {
  Configuration<D> c(w, 1.0, 0, 0);
  for_each_edge(w, [&](std::size_t slot, const Edge<D>&) { c.set(slot, true); });
  return c;
}

/// Opens every edge with both endpoints in `in`, closes the rest.
template <int D, class Pred>
Configuration<D> open_where(const LatticeWindow<D>& w, Pred&& in) {
  Configuration<D> c(w, 0.0, 0, 0);
  for_each_edge(w, [&](std::size_t slot, const Edge<D>& e) { c.set(slot, in(e.lower) && in(e.upper())); });
  return c;
}

template <int D>
Point<D> unit(int axis, int scale = 1) {
  Point<D> p{};
  p[axis] = scale;
  return p;
}

/// Breadth-first cluster of `start` over open edges (no union-find).
template <int D>
std::set<VertexIndex> bfs_cluster(const Configuration<D>& c, VertexIndex start) {
  const auto& w = c.window();
  std::set<VertexIndex> seen{start};
  std::deque<VertexIndex> q{start};
  while (!q.empty()) {
    const VertexIndex v = q.front();
    q.pop_front();
    w.for_each_incident(v, [&](VertexIndex u, std::size_t slot) {
      if (c.open(slot) && seen.insert(u).second) q.push_back(u);
    });
  }
  return seen;
}

/// Edges from S to the complement component reachable from the rim, by a
/// flood fill over the whole window.
template <int D>
std::vector<std::size_t> brute_force_cut(const std::set<VertexIndex>& s, const LatticeWindow<D>& w) {
  std::vector<char> outer(w.vertex_count(), 0);
  std::deque<VertexIndex> q;
  for (VertexIndex v = 0; v < w.vertex_count(); ++v)
    if (w.on_rim(w.point(v)) && !s.count(v)) {
      outer[v] = 1;
      q.push_back(v);
    }
  while (!q.empty()) {
    const VertexIndex v = q.front();
    q.pop_front();
    w.for_each_incident(v, [&](VertexIndex u, std::size_t) {
      if (!outer[u] && !s.count(u)) {
        outer[u] = 1;
        q.push_back(u);
      }
    });
  }
  std::vector<std::size_t> cut;
  for (VertexIndex v : s)
    w.for_each_incident(v, [&](VertexIndex u, std::size_t slot) {
      if (outer[u]) cut.push_back(slot);
    });
  std::sort(cut.begin(), cut.end());
  cut.erase(std::unique(cut.begin(), cut.end()), cut.end());
  return cut;
}

}  // namespace bperc::testing
