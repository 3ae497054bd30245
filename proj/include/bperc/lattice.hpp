#pragma once
// Geometry of a finite window of the hypercubic lattice Z^D together with the
// renormalized box lattice living on top of it.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bperc/errors.hpp"

namespace bperc {

template <int D>
using Point = std::array<int, D>;

/// Box coordinates in the renormalized lattice; the box B(x) is centred at N*x.
template <int D>
using BoxId = std::array<int, D>;

using VertexIndex = std::uint32_t;
inline constexpr VertexIndex kNoVertex = std::numeric_limits<VertexIndex>::max();

/// An edge in canonical form: its lower endpoint and the axis it points along.
template <int D>
struct Edge {
  Point<D> lower{};
  int axis = 0;

  Point<D> upper() const {
    Point<D> u = lower;
    ++u[axis];
    return u;
  }
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Axis-aligned product of inclusive integer intervals.
template <int D>
struct Extent {
  Point<D> lo{};
  Point<D> hi{};

  bool empty() const {
    for (int i = 0; i < D; ++i)
      if (lo[i] > hi[i]) return true;
    return false;
  }
  int side(int axis) const { return hi[axis] - lo[axis] + 1; }
  std::size_t volume() const {
    if (empty()) return 0;
    std::size_t v = 1;
    for (int i = 0; i < D; ++i) v *= static_cast<std::size_t>(side(i));
    return v;
  }
  bool contains(const Point<D>& p) const {
    for (int i = 0; i < D; ++i)
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
  }
  bool contains(const Extent& o) const { return o.empty() || (contains(o.lo) && contains(o.hi)); }
  Extent intersect(const Extent& o) const {
    Extent r;
    for (int i = 0; i < D; ++i) {
      r.lo[i] = std::max(lo[i], o.lo[i]);
      r.hi[i] = std::min(hi[i], o.hi[i]);
    }
    return r;
  }
  Extent grown(int by) const {
    Extent r = *this;
    for (int i = 0; i < D; ++i) {
      r.lo[i] -= by;
      r.hi[i] += by;
    }
    return r;
  }
  /// True iff p lies in the extent and on one of its faces.
  bool on_shell(const Point<D>& p) const {
    if (!contains(p)) return false;
    for (int i = 0; i < D; ++i)
      if (p[i] == lo[i] || p[i] == hi[i]) return true;
    return false;
  }
  friend bool operator==(const Extent&, const Extent&) = default;

  /// Calls f(point) for every point, lexicographically (axis 0 most significant).
  template <class F>
  void for_each(F&& f) const {
    if (empty()) return;
    Point<D> p = lo;
    while (true) {
      f(static_cast<const Point<D>&>(p));
      int i = D - 1;
      while (i >= 0 && p[i] == hi[i]) {
        p[i] = lo[i];
        --i;
      }
      if (i < 0) return;
      ++p[i];
    }
  }
};

template <int D>
int linf(const Point<D>& p) {
  int m = 0;
  for (int v : p) m = std::max(m, std::abs(v));
  return m;
}

template <int D>
int l1(const Point<D>& a, const Point<D>& b) {
  int s = 0;
  for (int i = 0; i < D; ++i) s += std::abs(a[i] - b[i]);
  return s;
}

enum class Adjacency { axis, diagonal };

/// Running maxima and minima of the 2^(D-1) signed coordinate sums
/// x_0 +- x_1 +- ... ; the L1 diameter of a set is the largest spread among
/// them.
template <int D>
struct L1Extremes {
  static constexpr int kFunctionals = 1 << (D - 1);
  std::array<int, kFunctionals> max;
  std::array<int, kFunctionals> min;

  L1Extremes() {
    max.fill(std::numeric_limits<int>::min());
    min.fill(std::numeric_limits<int>::max());
  }
  static int functional(int k, const Point<D>& p) {
    int s = p[0];
    for (int i = 1; i < D; ++i) s += ((k >> (i - 1)) & 1) ? -p[i] : p[i];
    return s;
  }
  void add(const Point<D>& p) {
    for (int k = 0; k < kFunctionals; ++k) {
      const int f = functional(k, p);
      max[k] = std::max(max[k], f);
      min[k] = std::min(min[k], f);
    }
  }
  void merge(const L1Extremes& o) {
    for (int k = 0; k < kFunctionals; ++k) {
      max[k] = std::max(max[k], o.max[k]);
      min[k] = std::min(min[k], o.min[k]);
    }
  }
  bool empty() const { return max[0] < min[0]; }
  int diameter() const {
    int d = 0;
    for (int k = 0; k < kFunctionals; ++k) d = std::max(d, max[k] - min[k]);
    return d;
  }
};

/// L1 (ambient graph distance) diameter of a vertex set.
template <int D>
int l1_diameter(std::span<const Point<D>> vs) {
  if (vs.empty()) throw InvalidArgument("l1_diameter of an empty vertex set");
  L1Extremes<D> ex;
  for (const auto& v : vs) ex.add(v);
  return ex.diameter();
}

/// A finite window of Z^D sized to hold every box B(x) with |x|_inf <= R.
///
/// Vertices are indexed lexicographically over the window extent. Edges are
/// stored in "slots" lower_index * D + axis; a slot whose upper endpoint falls
/// outside the window is not an edge.
template <int D>
class LatticeWindow {
 public:
  static_assert(D >= 2 && D <= 3, "supported dimensions are 2 and 3");
  static constexpr int kDim = D;

  LatticeWindow(int n, int radius) : n_(n), radius_(radius) {
    if (n < 5) throw InvalidArgument("box scale N must be >= 5, got " + std::to_string(n));
    if (radius < 3) throw InvalidArgument("box radius R must be >= 3, got " + std::to_string(radius));
    half_ = (3 * n) / 4;
    const int reach = n * radius + half_;
    for (int i = 0; i < D; ++i) {
      extent_.lo[i] = -reach;
      extent_.hi[i] = reach;
    }
    std::size_t stride = 1;
    for (int i = D - 1; i >= 0; --i) {
      stride_[i] = stride;
      stride *= static_cast<std::size_t>(extent_.side(i));
    }
    vertex_count_ = stride;
    if (vertex_count_ * D >= std::numeric_limits<VertexIndex>::max())
      throw InvalidArgument("window too large for 32-bit vertex indices");
    std::size_t box_stride = 1;
    for (int i = D - 1; i >= 0; --i) {
      box_stride_[i] = box_stride;
      box_stride *= static_cast<std::size_t>(2 * radius + 1);
    }
    box_count_ = box_stride;
  }

  int dim() const { return D; }
  int box_scale() const { return n_; }
  int box_radius() const { return radius_; }
  /// floor(3N/4), the half-width of every box.
  int half_width() const { return half_; }
  /// NR + floor(3N/4): the window is [-reach, reach]^D.
  int reach() const { return extent_.hi[0]; }
  const Extent<D>& extent() const { return extent_; }
  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t slot_count() const { return vertex_count_ * D; }

  std::size_t edge_count() const {
    std::size_t total = 0;
    for (int a = 0; a < D; ++a) {
      std::size_t c = 1;
      for (int i = 0; i < D; ++i) c *= static_cast<std::size_t>(extent_.side(i) - (i == a ? 1 : 0));
      total += c;
    }
    return total;
  }

  bool contains(const Point<D>& p) const { return extent_.contains(p); }
  bool on_rim(const Point<D>& p) const { return extent_.on_shell(p); }

  VertexIndex index(const Point<D>& p) const {
    std::size_t k = 0;
    for (int i = 0; i < D; ++i) k += static_cast<std::size_t>(p[i] - extent_.lo[i]) * stride_[i];
    return static_cast<VertexIndex>(k);
  }
  Point<D> point(VertexIndex v) const {
    Point<D> p;
    std::size_t k = v;
    for (int i = 0; i < D; ++i) {
      p[i] = static_cast<int>(k / stride_[i]) + extent_.lo[i];
      k %= stride_[i];
    }
    return p;
  }
  /// Index offset between a vertex and its +axis neighbour.
  std::size_t stride(int axis) const { return stride_[axis]; }

  bool contains(const Edge<D>& e) const {
    return e.axis >= 0 && e.axis < D && contains(e.lower) && e.lower[e.axis] < extent_.hi[e.axis];
  }
  std::size_t slot(const Edge<D>& e) const {
    if (!contains(e)) throw InvalidArgument("edge outside window");
    return static_cast<std::size_t>(index(e.lower)) * D + static_cast<std::size_t>(e.axis);
  }
  bool is_edge_slot(std::size_t s) const {
    if (s >= slot_count()) return false;
    const int axis = static_cast<int>(s % D);
    const Point<D> lower = point(static_cast<VertexIndex>(s / D));
    return lower[axis] < extent_.hi[axis];
  }
  Edge<D> edge(std::size_t s) const {
    if (!is_edge_slot(s)) throw InvalidArgument("slot is not a window edge");
    return Edge<D>{point(static_cast<VertexIndex>(s / D)), static_cast<int>(s % D)};
  }
  /// The edge between two adjacent points, in canonical form.
  static Edge<D> edge_between(const Point<D>& a, const Point<D>& b) {
    for (int i = 0; i < D; ++i) {
      if (a[i] != b[i]) return a[i] < b[i] ? Edge<D>{a, i} : Edge<D>{b, i};
    }
    throw InvalidArgument("edge_between: points coincide");
  }

  /// Calls f(neighbour_index, slot) for every window neighbour of v.
  template <class F>
  void for_each_incident(VertexIndex v, F&& f) const {
    const Point<D> p = point(v);
    for_each_incident(v, p, f);
  }
  template <class F>
  void for_each_incident(VertexIndex v, const Point<D>& p, F&& f) const {
    for (int a = 0; a < D; ++a) {
      if (p[a] < extent_.hi[a]) {
        const auto u = static_cast<VertexIndex>(v + stride_[a]);
        f(u, static_cast<std::size_t>(v) * D + a);
      }
      if (p[a] > extent_.lo[a]) {
        const auto u = static_cast<VertexIndex>(v - stride_[a]);
        f(u, static_cast<std::size_t>(u) * D + a);
      }
    }
  }

  // ---- renormalized boxes -------------------------------------------------

  std::size_t box_count() const { return box_count_; }
  bool box_in_bounds(const BoxId<D>& b) const { return linf<D>(b) <= radius_; }
  bool box_on_rim(const BoxId<D>& b) const { return linf<D>(b) == radius_; }
  void require_box(const BoxId<D>& b) const {
    if (!box_in_bounds(b)) throw InvalidArgument("box id outside the window's box radius");
  }
  std::size_t box_index(const BoxId<D>& b) const {
    std::size_t k = 0;
    for (int i = 0; i < D; ++i) k += static_cast<std::size_t>(b[i] + radius_) * box_stride_[i];
    return k;
  }
  BoxId<D> box_id(std::size_t k) const {
    BoxId<D> b;
    for (int i = 0; i < D; ++i) {
      b[i] = static_cast<int>(k / box_stride_[i]) - radius_;
      k %= box_stride_[i];
    }
    return b;
  }

  /// B(b) = { y : |y - N b|_inf <= floor(3N/4) }.
  Extent<D> box_extent(const BoxId<D>& b) const {
    require_box(b);
    Extent<D> e;
    for (int i = 0; i < D; ++i) {
      e.lo[i] = n_ * b[i] - half_;
      e.hi[i] = n_ * b[i] + half_;
    }
    return e;
  }
  /// B(x) ∩ B(y); empty iff |x - y|_inf >= 2.
  Extent<D> box_overlap(const BoxId<D>& x, const BoxId<D>& y) const {
    return box_extent(x).intersect(box_extent(y));
  }

  std::vector<BoxId<D>> box_neighbors(const BoxId<D>& b, Adjacency mode) const {
    require_box(b);
    std::vector<BoxId<D>> out;
    if (mode == Adjacency::axis) {
      for (int a = 0; a < D; ++a)
        for (int s : {-1, 1}) {
          BoxId<D> c = b;
          c[a] += s;
          if (box_in_bounds(c)) out.push_back(c);
        }
      return out;
    }
    Extent<D> cube;
    for (int i = 0; i < D; ++i) {
      cube.lo[i] = b[i] - 1;
      cube.hi[i] = b[i] + 1;
    }
    cube.for_each([&](const BoxId<D>& c) {
      if (c != b && box_in_bounds(c)) out.push_back(c);
    });
    return out;
  }

  /// Boxes containing vertex p (at most 2^D of them).
  template <class F>
  void for_each_box_containing(const Point<D>& p, F&& f) const {
    Extent<D> range;
    for (int i = 0; i < D; ++i) {
      // |p_i - N x_i| <= h  <=>  x_i in [ceil((p_i - h)/N), floor((p_i + h)/N)]
      range.lo[i] = std::max(-radius_, ceil_div(p[i] - half_, n_));
      range.hi[i] = std::min(radius_, floor_div(p[i] + half_, n_));
    }
    range.for_each(f);
  }

  /// Boxes containing both endpoints of an edge.
  template <class F>
  void for_each_box_containing(const Edge<D>& e, F&& f) const {
    Extent<D> range;
    for (int i = 0; i < D; ++i) {
      const int top = e.lower[i] + (i == e.axis ? 1 : 0);
      range.lo[i] = std::max(-radius_, ceil_div(top - half_, n_));
      range.hi[i] = std::min(radius_, floor_div(e.lower[i] + half_, n_));
    }
    range.for_each(f);
  }

  friend bool operator==(const LatticeWindow& a, const LatticeWindow& b) {
    return a.n_ == b.n_ && a.radius_ == b.radius_;
  }

 private:
  static int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
  static int ceil_div(int a, int b) { return -floor_div(-a, b); }

  int n_;
  int radius_;
  int half_ = 0;
  Extent<D> extent_;
  std::array<std::size_t, D> stride_{};
  std::array<std::size_t, D> box_stride_{};
  std::size_t vertex_count_ = 0;
  std::size_t box_count_ = 0;
};

/// Vertices of a box, lexicographically ordered.
template <int D>
std::vector<Point<D>> box_vertices(const BoxId<D>& b, const LatticeWindow<D>& w) {
  std::vector<Point<D>> out;
  const Extent<D> e = w.box_extent(b);
  out.reserve(e.volume());
  e.for_each([&](const Point<D>& p) { out.push_back(p); });
  return out;
}

template <int D>
std::vector<Point<D>> box_overlap(const BoxId<D>& x, const BoxId<D>& y, const LatticeWindow<D>& w) {
  if (x == y) throw InvalidArgument("box_overlap requires distinct boxes");
  std::vector<Point<D>> out;
  w.box_overlap(x, y).for_each([&](const Point<D>& p) { out.push_back(p); });
  return out;
}

struct Faces {
  std::vector<std::vector<std::size_t>> members;  // 2D entries: (axis, low), (axis, high)
  bool degenerate = false;                         // some axis has a single layer
};

/// Faces of an axis-aligned box, returned as positions into its lexicographic
/// vertex list. Face 2a is the low end of axis a, 2a+1 the high end.
template <int D>
Faces box_faces(const Extent<D>& box) {
  Faces f;
  f.members.resize(2 * D);
  std::size_t k = 0;
  box.for_each([&](const Point<D>& p) {
    for (int a = 0; a < D; ++a) {
      if (p[a] == box.lo[a]) f.members[2 * a].push_back(k);
      if (p[a] == box.hi[a]) f.members[2 * a + 1].push_back(k);
    }
    ++k;
  });
  for (int a = 0; a < D; ++a)
    if (box.lo[a] == box.hi[a]) f.degenerate = true;
  return f;
}

/// Bitmask of the faces of `box` that p lies on (bit 2a low, 2a+1 high).
template <int D>
unsigned face_mask(const Extent<D>& box, const Point<D>& p) {
  unsigned m = 0;
  for (int a = 0; a < D; ++a) {
    if (p[a] == box.lo[a]) m |= 1u << (2 * a);
    if (p[a] == box.hi[a]) m |= 1u << (2 * a + 1);
  }
  return m;
}

template <int D>
constexpr unsigned all_faces_mask() {
  return (1u << (2 * D)) - 1u;
}

}  // namespace bperc
