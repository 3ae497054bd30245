#include <gtest/gtest.h>

#include "bperc/pipeline.hpp"
#include "bperc/separating.hpp"
#include "helpers.hpp"

using namespace bperc;
using namespace bperc::testing;

namespace {

using Cls2 = BoxClassification<2, Configuration<2>>;

template <int D>
Configuration<D> ball_with_moat(const LatticeWindow<D>& w, std::initializer_list<int> radii) {
  auto c = all_open(w);
  for (int r : radii) plant_closed_shell<D>(c, r);
  return c;
}

std::vector<std::size_t> ring_of(const LatticeWindow<2>& w, int r) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < w.box_count(); ++k)
    if (linf<2>(w.box_id(k)) == r) out.push_back(k);
  return out;
}

// Maximal bad ⊠-component containing the internal boundary of C_o(N), by a
// flood fill over boxes that calls is_good and is_substantial box by box.
std::vector<std::size_t> flood_fill_s_o(const Configuration<2>& c) {
  const auto& w = c.window();
  const ClusterLabeling<2> lab(c);
  const auto co = lab.members(lab.root(Point<2>{}));
  std::vector<std::size_t> sub;
  for (std::size_t k = 0; k < w.box_count(); ++k)
    if (is_substantial<2>(w.box_id(k), co, c)) sub.push_back(k);
  const auto boundary = with_internal_boundary<2>(sub, w).boundary;
  std::vector<char> seen(w.box_count(), 0);
  std::vector<std::size_t> stack(boundary.begin(), boundary.end()), out;
  for (auto k : stack) seen[k] = 1;
  while (!stack.empty()) {
    const auto k = stack.back();
    stack.pop_back();
    out.push_back(k);
    for (const auto& nb : w.box_neighbors(w.box_id(k), Adjacency::diagonal)) {
      const auto j = w.box_index(nb);
      if (!seen[j] && !is_good<2>(nb, c)) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(BuildSo, AbsentForAllClosed) {
  const LatticeWindow<2> w(10, 3);
  const auto c = all_closed(w);
  EXPECT_FALSE(build_S_o<2>(ClusterLabeling<2>(c), Cls2(c)).has_value());
}

TEST(BuildSo, AbsentForAllOpen) {
  const LatticeWindow<2> w(10, 3);
  const auto c = all_open(w);
  EXPECT_FALSE(build_S_o<2>(ClusterLabeling<2>(c), Cls2(c)).has_value());
}

TEST(BuildSo, BallIsSurroundedByItsBadRing) {
  const LatticeWindow<2> w(10, 4);
  const auto c = ball_with_moat(w, {10});
  const ClusterLabeling<2> lab(c);
  const Cls2 cls(c);
  const auto s = build_S_o<2>(lab, cls);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->boxes, flood_fill_s_o(c));
  EXPECT_EQ(s->boxes, ring_of(w, 1));
  EXPECT_TRUE(s->surrounds_origin);
  EXPECT_FALSE(s->touches_rim);
  EXPECT_EQ(s->boundary.size(), 1u + 16u);
  EXPECT_TRUE(occurs<2>(*s, cls));
}

TEST(BuildSo, BallInThreeDimensions) {
  const LatticeWindow<3> w(6, 3);
  const auto c = ball_with_moat(w, {6});
  const ClusterLabeling<3> lab(c);
  const BoxClassification<3, Configuration<3>> cls(c);
  const auto s = build_S_o<3>(lab, cls);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->size(), 26u);
  const auto cut = extract_cut<3>(*s, cls);
  EXPECT_EQ(cut.cut.size(), 6u * 13u * 13u);
}

TEST(BuildSo, RimHitIsAMarginViolation) {
  // All closed beyond the ball: every outer box is bad and S_o reaches the rim.
  const LatticeWindow<2> w(10, 4);
  const auto c = open_where<2>(w, [](const Point<2>& p) { return linf<2>(p) <= 10; });
  EXPECT_THROW(build_S_o<2>(ClusterLabeling<2>(c), Cls2(c)), MarginViolation);
}

TEST(Occurs, GoodBoxInsideFails) {
  const LatticeWindow<2> w(10, 4);
  const auto c = ball_with_moat(w, {10});
  const Cls2 cls(c);
  auto boxes = ring_of(w, 1);
  boxes.push_back(w.box_index({0, 0}));
  const auto s = make_component<2>(boxes, w);
  const auto occ = occurrence<2>(s, cls);
  EXPECT_FALSE(occ.all_bad);
  EXPECT_FALSE(occ.occurs());
}

TEST(Occurs, NothingOccursWhenAllOpen) {
  const LatticeWindow<2> w(10, 4);
  const auto c = all_open(w);
  const Cls2 cls(c);
  EXPECT_FALSE(occurs<2>(make_component<2>(ring_of(w, 1), w), cls));
  EXPECT_FALSE(occurs<2>(make_component<2>(ring_of(w, 2), w), cls));
  EXPECT_TRUE(enumerate_occurring<2>(cls).occurring.empty());
}

TEST(Occurs, RimComponentIsAMarginViolation) {
  const LatticeWindow<2> w(10, 3);
  const auto c = all_closed(w);
  EXPECT_THROW(occurs<2>(make_component<2>(ring_of(w, 3), w), Cls2(c)), MarginViolation);
}

TEST(Component, MustBeConnected) {
  const LatticeWindow<2> w(10, 4);
  EXPECT_THROW(make_component<2>({w.box_index({0, 0}), w.box_index({2, 0})}, w), InvalidArgument);
  const auto diag = make_component<2>({w.box_index({0, 0}), w.box_index({1, 1})}, w);
  EXPECT_EQ(diag.size(), 2u);
  EXPECT_TRUE(diag.surrounds_origin);  // contains B(o)
  EXPECT_FALSE(make_component<2>({w.box_index({1, 1})}, w).surrounds_origin);
}

TEST(ExtractCut, BallCutIsTheBallBoundary) {
  const LatticeWindow<2> w(10, 4);
  const auto c = ball_with_moat(w, {10});
  const ClusterLabeling<2> lab(c);
  const Cls2 cls(c);
  const auto s = build_S_o<2>(lab, cls);
  ASSERT_TRUE(s.has_value());
  const auto cut = extract_cut<2>(*s, cls);
  const auto ball = lab.members(lab.root(Point<2>{}));
  EXPECT_EQ(cut.inner, ball);
  const std::set<VertexIndex> ball_set(ball.begin(), ball.end());
  EXPECT_EQ(cut.cut, brute_force_cut<2>(ball_set, w));
  EXPECT_EQ(cut.cut.size(), 4u * 21u);
  for (auto slot : cut.cut) EXPECT_FALSE(c.open(slot));
  EXPECT_TRUE(cut_separates_origin<2>(cut.cut, w));
}

TEST(ExtractCut, NonOccurringIsAPreconditionError) {
  const LatticeWindow<2> w(10, 4);
  const auto c = all_open(w);
  EXPECT_THROW(extract_cut<2>(make_component<2>(ring_of(w, 1), w), Cls2(c)), PreconditionError);
}

TEST(ExtractCut, SeparationCheckerRejectsIncompleteCuts) {
  const LatticeWindow<2> w(5, 3);
  std::vector<std::size_t> cut;
  w.for_each_incident(w.index(Point<2>{}), [&](VertexIndex, std::size_t slot) { cut.push_back(slot); });
  std::sort(cut.begin(), cut.end());
  EXPECT_TRUE(cut_separates_origin<2>(cut, w));
  cut.pop_back();
  EXPECT_FALSE(cut_separates_origin<2>(cut, w));
}

TEST(Enumerate, TwoNestedShells) {
  const LatticeWindow<2> w(8, 8);
  const auto c = ball_with_moat(w, {8, 40});
  const Cls2 cls(c);
  const auto e = enumerate_occurring<2>(cls);
  EXPECT_TRUE(e.margin_ok());
  ASSERT_EQ(e.occurring.size(), 2u);
  std::vector<std::size_t> sizes{e.occurring[0].size(), e.occurring[1].size()};
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{8, 40}));
  const auto s_o = build_S_o<2>(ClusterLabeling<2>(c), cls);
  ASSERT_TRUE(s_o.has_value());
  EXPECT_TRUE(std::find(e.occurring.begin(), e.occurring.end(), *s_o) != e.occurring.end());
  EXPECT_EQ(s_o->size(), 8u);
  // Disjoint occurring components.
  for (auto k : e.occurring[0].boxes) EXPECT_FALSE(e.occurring[1].contains(k));
}

TEST(Enumerate, ContainsSoOnRandomPlantedSamples) {
  const LatticeWindow<2> w(10, 8);
  PipelineOptions opt;
  opt.plant_lo = 10;
  opt.plant_hi = 30;
  int checked = 0;
  for (std::uint64_t i = 0; i < 12; ++i) {
    const auto c = pipeline_configuration<2>(w, 0.8, 6, i, opt);
    const ClusterLabeling<2> lab(c);
    const Cls2 cls(c);
    std::optional<SeparatingComponent<2>> s;
    Enumeration<2> e;
    try {
      s = build_S_o<2>(lab, cls);
      e = enumerate_occurring<2>(cls);
    } catch (const MarginViolation&) {
      continue;
    }
    if (!s || !e.margin_ok()) continue;
    ASSERT_TRUE(occurs<2>(*s, cls));
    ASSERT_TRUE(std::find(e.occurring.begin(), e.occurring.end(), *s) != e.occurring.end());
    const auto cut = extract_cut<2>(*s, cls);
    ASSERT_TRUE(cut_separates_origin<2>(cut.cut, w));
    ++checked;
  }
  EXPECT_GT(checked, 6);
}

TEST(Pipeline, SampleReportOnTheBall) {
  const LatticeWindow<2> w(10, 4);
  const auto c = ball_with_moat(w, {10});
  const auto r = analyze_sample<2>(c);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_FALSE(r.excluded);
  EXPECT_TRUE(r.co_finite);
  EXPECT_TRUE(r.co_large);
  ASSERT_TRUE(r.s_o_boxes.has_value());
  EXPECT_EQ(*r.s_o_boxes, 8u);
  EXPECT_EQ(r.cut_size, std::optional<std::size_t>(84));
  EXPECT_EQ(r.phi, std::optional<std::size_t>(84));
  ASSERT_TRUE(r.inc_ex.has_value());
  EXPECT_EQ(r.inc_ex->lhs, 1);
  EXPECT_EQ(r.inc_ex->rhs, 1);
}

TEST(Pipeline, InjectedFaultIsCaught) {
  const LatticeWindow<2> w(10, 4);
  const auto c = ball_with_moat(w, {10});
  PipelineOptions opt;
  opt.inject_fault = true;
  const auto r = analyze_sample<2>(c, opt);
  EXPECT_TRUE(r.fault_injected);
  EXPECT_FALSE(r.violations.empty());
}

TEST(Pipeline, PlantedStructureSuiteIsClean) {
  PipelineOptions opt;
  opt.plant_lo = 10;
  opt.plant_hi = 40;
  const auto t = structure_suite<2>(0.8, WindowSpec{2, 10, 12}, 30, 21, 1, opt);
  EXPECT_EQ(t.violation_count(), 0u) << t.first_violation_message;
  EXPECT_GT(t.s_o_defined, 20u);
  EXPECT_EQ(t.phi_within_cut, t.phi_applicable);
  EXPECT_EQ(t.inc_ex_equal, t.inc_ex_checked);
}

TEST(Tails, TouchingForIsolatedOriginContributesFour) {
  // Spot-check of the statistic the tail experiment records.
  const LatticeWindow<2> w(5, 3);
  auto c = all_open(w);
  w.for_each_incident(w.index(Point<2>{}), [&](VertexIndex, std::size_t slot) { c.set(slot, false); });
  EXPECT_EQ(touching_edge_count<2>(c, ClusterLabeling<2>(c)), 4u);
}

TEST(Tails, NoFiniteClusterAtFullDensity) {
  for (auto stat : {TailStatistic::cut_size, TailStatistic::touching, TailStatistic::renorm_boundary})
    EXPECT_THROW(tail_experiment<2>(1.0, WindowSpec{2, 10, 3}, 50, 1, stat), InsufficientData);
}

TEST(Tails, SurvivalCountsAreConsistent) {
  const auto t = tail_experiment<2>(0.6, WindowSpec{2, 5, 3}, 400, 3, TailStatistic::touching, 1, false);
  EXPECT_EQ(t.samples, 400u);
  EXPECT_EQ(t.at_least(0), t.finite);
  EXPECT_LE(t.finite + t.excluded + t.undefined, t.samples);
  double prev = 1.0;
  for (const auto& [v, count] : t.counts) {
    EXPECT_LE(t.survival(v), prev);
    prev = t.survival(v);
  }
}
