// Acceptance run: one PASS/FAIL line per criterion, with supporting detail.
// Supplementary lines are printed for context and never change the verdict.
//
// usage: acceptance <path to bperc cli>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bperc/counting.hpp"
#include "bperc/estimators.hpp"
#include "bperc/expansion.hpp"
#include "bperc/pipeline.hpp"
#include "bperc/renorm.hpp"

namespace fs = std::filesystem;
using namespace bperc;

namespace {

constexpr std::uint64_t kSeed = 20240611;
constexpr double kPlanted3 = 0.8;

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void note(const std::string& s) { std::printf("    %s\n", s.c_str()); }
void supplementary(const std::string& s) { std::printf("    [supplementary, not counted] %s\n", s.c_str()); }

unsigned long long ull(std::uint64_t v) { return static_cast<unsigned long long>(v); }

std::string tally_line(const char* label, const StructureTally& t) {
  return fmt("%s: samples=%llu violations=%llu excluded=%llu (%.1f%%) finite=%llu S_o=%llu occurring=%llu", label,
             ull(t.samples), ull(t.violation_count()), ull(t.excluded), 100 * t.exclusion_rate(), ull(t.finite),
             ull(t.s_o_defined), ull(t.occurring_total));
}

bool structure_ok(const StructureTally& t) { return t.violation_count() == 0 && t.exclusion_rate() < 0.01; }

// Runs shared by several criteria.
struct Shared {
  StructureTally d2, d3, d2_planted, d3_planted;
};

bool criterion_structure(Shared& s) {
  s.d2 = structure_suite<2>(0.65, {2, 10, 12}, 1000, kSeed, workers());
  s.d3 = structure_suite<3>(0.35, {3, 6, 7}, 300, kSeed + 1, workers());
  note(tally_line("d=2 p=0.65 N=10 R=12", s.d2));
  note(tally_line("d=3 p=0.35 N=6 R=7", s.d3));
  for (const auto* t : {&s.d2, &s.d3})
    for (const auto& [why, n] : t->exclusions) note(fmt("excluded %llu: %s", ull(n), why.c_str()));

  PipelineOptions o2;
  o2.plant_lo = 10;
  o2.plant_hi = 40;
  s.d2_planted = structure_suite<2>(0.8, {2, 10, 12}, 1000, kSeed + 2, workers(), o2);
  PipelineOptions o3;
  o3.plant_lo = 6;
  o3.plant_hi = 18;
  s.d3_planted = structure_suite<3>(kPlanted3, {3, 6, 7}, 300, kSeed + 3, workers(), o3);
  supplementary(tally_line("planted shells d=2 p=0.8 N=10 R=12 radius 10..40", s.d2_planted));
  supplementary(tally_line("planted shells d=3 N=6 R=7 radius 6..18", s.d3_planted) + fmt(" p=%.2f", kPlanted3));
  return structure_ok(s.d2) && structure_ok(s.d3);
}

bool phi_ok(const StructureTally& t) { return t.phi_applicable > 0 && t.phi_within_cut == t.phi_applicable; }

bool criterion_containment(const Shared& s) {
  for (const auto& [label, t] : {std::pair{"d=2 p=0.65", &s.d2}, std::pair{"d=3 p=0.35", &s.d3}})
    note(fmt("%s: phi <= cut in %llu of %llu applicable samples", label, ull(t->phi_within_cut),
               ull(t->phi_applicable)));
  supplementary(fmt("planted d=2: %llu of %llu; planted d=3: %llu of %llu", ull(s.d2_planted.phi_within_cut),
                    ull(s.d2_planted.phi_applicable), ull(s.d3_planted.phi_within_cut),
                    ull(s.d3_planted.phi_applicable)));
  if (s.d2.phi_applicable + s.d3.phi_applicable == 0) note("no applicable samples: nothing was tested");
  return phi_ok(s.d2) && phi_ok(s.d3);
}

std::string tail_line(const TailEstimate& t) {
  std::string s = fmt("%s: finite=%llu excluded=%llu undefined=%llu", to_string(t.statistic), ull(t.finite),
                      ull(t.excluded), ull(t.undefined));
  if (t.fit)
    s += fmt(" fit n in [%zu,%zu] t=%.4f (95%% CI %.4f..%.4f) R2=%.4f", t.fit_lo, t.fit_hi, t.rate, t.rate_ci.lo,
             t.rate_ci.hi, t.fit->r_squared);
  else
    s += " fit: " + t.fit_status;
  return s;
}

bool tail_ok(const TailEstimate& t) { return t.fit && t.rate > 0 && t.fit->r_squared >= 0.98; }

// `range` is the pilot-frozen fit range; without one the data-driven range is used.
TailEstimate run_tail(TailStatistic stat, const WindowSpec& spec, std::uint64_t n, std::uint64_t seed,
                      std::optional<std::pair<std::size_t, std::size_t>> range) {
  auto t = tail_experiment<3>(0.35, spec, n, seed, stat, workers(), false);
  try {
    if (range)
      fit_tail(t, range->first, range->second);
    else
      fit_tail(t);
  } catch (const InsufficientData& e) {
    t.fit_status = e.what();
  }
  return t;
}

bool criterion_tails() {
  const auto cut = run_tail(TailStatistic::cut_size, {3, 6, 7}, 5000, kSeed + 4, std::nullopt);
  const auto phi = run_tail(TailStatistic::touching, {3, 6, 7}, 5000, kSeed + 5, std::pair{6, 24});
  note("d=3 p=0.35 N=6 R=7, 5000 samples");
  note(tail_line(cut));
  note(tail_line(phi));
  supplementary("R=3, 10^4 samples, " + tail_line(run_tail(TailStatistic::touching, {3, 6, 3}, 10000, kSeed + 6,
                                                          std::nullopt)));
  return tail_ok(cut) && tail_ok(phi);
}

std::string expansion_line(const ExpansionResult& r) {
  std::string s = fmt("samples=%llu excluded=%llu sum a_n=%.5f direct=%.5f (%.2f SE) decay: %s", ull(r.samples),
                      ull(r.excluded), r.sum_terms, r.direct, r.discrepancy_se, r.decay_status.c_str());
  if (r.decay) s += fmt(" (ratio %.3f)", r.decay->ratio);
  return s;
}

bool inc_ex_ok(const StructureTally& t) { return t.inc_ex_checked > 0 && t.inc_ex_equal == t.inc_ex_checked; }

bool criterion_inclusion_exclusion(const Shared& s) {
  note(fmt("per-configuration identity: d=2 %llu/%llu, d=3 %llu/%llu", ull(s.d2.inc_ex_equal),
             ull(s.d2.inc_ex_checked), ull(s.d3.inc_ex_equal), ull(s.d3.inc_ex_checked)));
  const auto r = empirical_expansion<2>(0.65, {2, 10, 12}, 20, 1000, kSeed + 7, workers());
  note("d=2 p=0.65 N=10 R=12: " + expansion_line(r));
  supplementary(fmt("per-configuration identity, planted: d=2 %llu/%llu, d=3 %llu/%llu",
                    ull(s.d2_planted.inc_ex_equal), ull(s.d2_planted.inc_ex_checked),
                    ull(s.d3_planted.inc_ex_equal), ull(s.d3_planted.inc_ex_checked)));
  PipelineOptions o;
  o.plant_lo = 10;
  o.plant_hi = 40;
  supplementary("planted d=2 p=0.8 n_max=200: " +
                expansion_line(empirical_expansion<2>(0.8, {2, 10, 12}, 200, 1000, kSeed + 8, workers(), o)));
  const bool statistical = r.aggregate.samples > 0 && r.discrepancy_se <= 3.0;
  return inc_ex_ok(s.d2) && inc_ex_ok(s.d3) && statistical && r.decay && r.decay->pass;
}

bool criterion_disk() {
  const auto a = disk_bound_sweep(1'000'000, kSeed + 9, false);
  const auto b = disk_bound_sweep(1'000'000, kSeed + 10, true);
  note(fmt("general p < 1: %llu tuples, %llu violations", ull(a.tuples), ull(a.violations)));
  note(fmt("p = 1 variant: %llu tuples, %llu violations", ull(b.tuples), ull(b.violations)));
  if (b.violations)
    note(fmt("first p = 1 violation: m=%u b=%u delta=%.4f z=%.4f%+.4fi", b.m, b.b, b.delta, b.z.real(), b.z.imag()));
  return a.violations == 0 && b.violations == 0;
}

bool criterion_good_trend() {
  constexpr double kFrozenAt20 = 0.06;
  double prev = -1;
  bool increasing = true;
  double at20 = 0;
  for (int n : {5, 10, 20}) {
    const auto g = good_probability<2>(0.6, n, 10000, kSeed + 11 + static_cast<std::uint64_t>(n));
    note(fmt("N=%d: Pr(good)=%.4f (95%% CI %.4f..%.4f)", n, g.estimate, g.ci.lo, g.ci.hi));
    increasing = increasing && g.estimate > prev;
    prev = g.estimate;
    at20 = g.estimate;
  }
  note(fmt("strictly increasing: %s; N=20 threshold %.2f: %s", increasing ? "yes" : "no", kFrozenAt20,
             at20 >= kFrozenAt20 ? "met" : "not met"));
  return increasing && at20 >= kFrozenAt20;
}

template <int D>
std::vector<BoxId<D>> random_box_set(std::uint64_t seed, std::size_t size) {
  // ⊠-connected growth from the origin box
  std::vector<BoxId<D>> s{BoxId<D>{}};
  std::set<BoxId<D>> seen{BoxId<D>{}};
  for (std::uint64_t k = 0; s.size() < size; ++k) {
    const std::uint64_t h = splitmix64(seed + k);
    BoxId<D> b = s[h % s.size()];
    for (int a = 0; a < D; ++a) b[a] += static_cast<int>((h >> (20 + 2 * a)) % 3) - 1;
    if (seen.insert(b).second) s.push_back(b);
  }
  return s;
}

template <int D>
std::uint64_t packing_failures(std::uint64_t sets) {
  const LatticeWindow<D> w(10, 40);
  std::uint64_t failures = 0;
  for (std::uint64_t i = 0; i < sets; ++i) {
    const auto s = random_box_set<D>(splitmix64(kSeed ^ (i + 1)), 1 + i % 60);
    const auto pack = disjoint_packing<D>(s);
    bool ok = pack.size() * (1u << D) >= s.size();
    for (std::size_t x = 0; x < pack.size() && ok; ++x) {
      ok = std::find(s.begin(), s.end(), pack[x]) != s.end();
      for (std::size_t y = x + 1; y < pack.size() && ok; ++y) ok = w.box_overlap(pack[x], pack[y]).empty();
    }
    failures += !ok;
  }
  return failures;
}

bool criterion_counting() {
  const auto table = partitions(20);
  std::size_t mismatches = 0;
  for (unsigned n = 0; n <= 20; ++n) mismatches += table.p[n] != partitions_by_listing(n);
  const bool anchors = table.p[4] == 5 && table.p[10] == 42;
  note(fmt("partitions n<=20: %zu mismatches against listing; p(4)=5, p(10)=42: %s", mismatches,
             anchors ? "yes" : "no"));

  std::size_t animal_mismatches = 0;
  AnimalCensus diagonal;
  for (auto mode : {Adjacency::axis, Adjacency::diagonal}) {
    const auto a = count_animals<2>(mode, 8);
    const auto b = count_fixed_animals_bfs<2>(mode, 8);
    for (std::size_t n = 1; n <= 8; ++n) animal_mismatches += a.fixed[n] != b[n];
    if (mode == Adjacency::diagonal) diagonal = a;
  }
  note(fmt("d=2 animals n<=8, both adjacencies: %zu mismatches between enumerators", animal_mismatches));
  std::size_t d3_mismatches = 0;
  for (auto mode : {Adjacency::axis, Adjacency::diagonal}) {
    const auto a = count_animals<3>(mode, 5);
    const auto b = count_fixed_animals_bfs<3>(mode, 5);
    for (std::size_t n = 1; n <= 5; ++n) d3_mismatches += a.fixed[n] != b[n];
  }
  supplementary(fmt("d=3 animals n<=5, both adjacencies: %zu mismatches", d3_mismatches));

  const auto f2 = packing_failures<2>(2000), f3 = packing_failures<3>(2000);
  note(fmt("packing on 2000 connected sets per dimension: %llu failures (d=2), %llu (d=3)", ull(f2), ull(f3)));

  const auto good = good_probability<2>(0.65, 10, 10000, kSeed + 40);
  const double c_hat = 1 - good.estimate;
  const double big_m = 2 * growth_estimate(diagonal).mu;
  const auto bound = exp_dec_bound(1.0, c_hat, 4.0, big_m, std::max(partition_bound(partitions(200)).r, 1.0 + 1e-9));
  note(fmt("d=2 N=10 p=0.65: c_hat=%.4f, M=%.3f, k=4, M*c_hat^(1/k)=%.3f %s", c_hat, big_m, bound.rate,
             bound.decaying ? "< 1" : ">= 1: the bound does not decay at this operating point (reported)"));
  return mismatches == 0 && anchors && animal_mismatches == 0 && f2 == 0 && f3 == 0;
}

bool criterion_estimators() {
  const WindowSpec small{2, 5, 3};
  bool ok = true;
  auto check = [&](bool c, const std::string& what) {
    note((c ? "ok   " : "FAIL ") + what);
    ok = ok && c;
  };
  check(theta_hat<2>(1.0, small, 1000, kSeed).estimate == 1.0, "theta(1) = 1");
  check(theta_hat<2>(0.0, small, 1000, kSeed).estimate == 0.0, "theta(0) = 0");

  const auto theta = theta_hat<2>(0.7, small, 100000, kSeed + 20, workers());
  const auto hist = size_histogram<2>(0.7, small, 100000, kSeed + 20, workers());
  check(hist.total() == hist.samples &&
            hist.infinite == static_cast<std::uint64_t>(std::llround(theta.estimate * double(theta.samples))),
        fmt("histogram + theta normalization: %llu finite + %llu infinite = %llu samples",
            ull(hist.total() - hist.infinite), ull(hist.infinite), ull(hist.samples)));

  const WindowSpec mid{2, 5, 4};
  const auto chi = chi_f_hat<2>(1, 0.7, mid, 200000, kSeed + 21, workers());
  const auto sum = tau_f_sum_hat<2>(make_window<2>(mid).reach() - 1, 0.7, mid, 200000, kSeed + 22, workers());
  const double se = std::hypot(chi.standard_error, sum.standard_error);
  check(std::abs(chi.estimate - sum.estimate) <= 3 * se,
        fmt("chi_f_1=%.5f vs sum of tau_f=%.5f, |diff|=%.2f SE (independent samples)", chi.estimate, sum.estimate,
            se > 0 ? std::abs(chi.estimate - sum.estimate) / se : 0.0));

  const auto kappa = kappa_hat<2>(0.7, small, 100000, kSeed + 23, workers());
  const double slack = kZ95 * std::hypot(kappa.standard_error, theta.standard_error);
  check(kappa.estimate <= 1 - theta.estimate + slack,
        fmt("kappa=%.5f <= 1 - theta=%.5f within combined CI (%.5f)", kappa.estimate, 1 - theta.estimate, slack));

  const auto kd = kappa_derivative_check<2>(0.7, 0.02, small, 1'000'000, kSeed + 24, 0.5, workers());
  check(kd.discrepancy_se <= 3.0,
        fmt("kappa derivative p=0.7 h=0.02, 10^6 samples: central %.5f, pivotal %.5f, |diff| %.2f SE (paired SE "
            "%.5f, unpaired %.5f)",
            kd.central_difference, kd.pivotal_form, kd.discrepancy_se, kd.standard_error, kd.independent_se));

  try {
    const auto d = tau_f_decay<2>(0.7, {2, 5, 5}, {1, 0}, 20, 2'000'000, kSeed + 25, workers());
    std::string pts;
    bool decreasing = true;
    double prev = 2;
    for (const auto& p : d.points) {
      if (p.hits == 0) break;
      pts += fmt(" %d:%.3g", p.distance, p.estimate);
      decreasing = decreasing && p.estimate < prev;
      prev = p.estimate;
    }
    check(decreasing && d.rate > 0,
          fmt("tau_f decay p=0.7: fitted rate %.3f over r=%d..%d; positive estimates%s", d.rate, d.fit_lo, d.fit_hi,
              pts.c_str()));
  } catch (const InsufficientData& e) {
    check(false, std::string("tau_f decay p=0.7: ") + e.what());
  }
  return ok;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool criterion_determinism(const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / "bperc_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> manifests = {
      {"sample", "kind = sample\nd = 2\nN = 10\nR = 12\np = 0.8, 0.65\nsamples = 200\nplant_lo = 10\nplant_hi = 40\n"},
      {"tails", "kind = tails\nstatistic = touching\nd = 3\nN = 6\nR = 3\np = 0.35\nsamples = 2000\n"},
      {"estimate", "kind = estimate\nquantity = histogram\nd = 2\nN = 5\nR = 3\np = 0.6\nsamples = 20000\n"},
      {"classify", "kind = classify\nd = 3\nN = 6\nR = 3\np = 0.5\nsamples = 50\n"},
  };
  bool ok = true;
  for (const auto& [name, body] : manifests) {
    const fs::path m = root / (name + ".manifest");
    std::ofstream(m) << "schema = bperc-manifest/1\nseed = 99\n" << body;
    std::vector<fs::path> outs;
    for (const char* w : {"1", "4", "4"}) {
      const fs::path out = root / (name + "_w" + w + "_" + std::to_string(outs.size()));
      const std::string cmd =
          cli + " --manifest " + m.string() + " --workers " + w + " --out " + out.string() + " 2>/dev/null";
      const int rc = std::system(cmd.c_str());
      if (rc == -1 || !fs::exists(out / "summary.json")) {
        note(name + ": run failed: " + cmd);
        ok = false;
      }
      outs.push_back(out);
    }
    std::size_t files = 0, differing = 0;
    for (const auto& e : fs::directory_iterator(outs[0])) {
      if (e.path().filename() == "timing.json") continue;
      ++files;
      const std::string ref = slurp(e.path());
      for (std::size_t k = 1; k < outs.size(); ++k) differing += ref != slurp(outs[k] / e.path().filename());
    }
    note(fmt("%s: %zu output files, workers 1/4/4, %zu differing", name.c_str(), files, differing));
    ok = ok && files > 0 && differing == 0;
  }
  fs::remove_all(root);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path to bperc cli>\n", argv[0]);
    return 64;
  }
  const std::string cli = argv[1];
  Shared shared;
  const std::vector<std::pair<const char*, std::function<bool()>>> criteria = {
      {"structure suite: zero violations, margin exclusions < 1%", [&] { return criterion_structure(shared); }},
      {"cut containment: phi <= |cut| in every applicable sample", [&] { return criterion_containment(shared); }},
      {"tail signature at d=3 p=0.35 N=6: t > 0 and R2 >= 0.98 for |cut| and phi", criterion_tails},
      {"inclusion-exclusion: exact identity, sum vs direct within 3 SE, geometric decay",
       [&] { return criterion_inclusion_exclusion(shared); }},
      {"disk bound: 10^6 tuples, zero violations, including p = 1", criterion_disk},
      {"good-box trend at d=2 p=0.6 over N = 5, 10, 20", criterion_good_trend},
      {"counting oracles", criterion_counting},
      {"estimator identities", criterion_estimators},
      {"determinism across worker counts", [&] { return criterion_determinism(cli); }},
  };
  int passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::printf("criterion %zu: %s\n", i + 1, criteria[i].first);
    std::fflush(stdout);
    try {
      pass = criteria[i].second();
    } catch (const std::exception& e) {
      note(std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %zu (%.1fs)\n\n", pass ? "PASS" : "FAIL", i + 1, secs);
    std::fflush(stdout);
    passed += pass;
  }
  std::printf("%d of %zu criteria passed\n", passed, criteria.size());
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
