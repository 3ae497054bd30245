#include "runner.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <nlohmann/json.hpp>

#include "bperc/counting.hpp"
#include "bperc/estimators.hpp"
#include "bperc/expansion.hpp"
#include "bperc/io.hpp"
#include "bperc/pipeline.hpp"
#include "bperc/renorm.hpp"

namespace bperc::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
std::string num(T v) requires std::is_integral_v<T> {
  return std::to_string(v);
}

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct Reproducer {
  json header;
  std::vector<std::uint8_t> blob;
};

struct Report {
  json summary = json::object();
  std::vector<Table> tables;
  int status = kExitOk;
  std::vector<std::string> notes;
  std::optional<Reproducer> reproducer;

  void raise(int code, const std::string& why) {
    notes.push_back(why);
    if (code == kExitViolation || status == kExitOk) status = code;
  }
};

json interval(const Interval& ci) { return json::array({ci.lo, ci.hi}); }

json fit_json(const LinearFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"slope_se", f.slope_se}, {"r_squared", f.r_squared}};
}

json report_json(const EstimatorReport& r) {
  json j = {{"quantity", r.quantity}, {"p", r.p},          {"samples", r.samples},
            {"estimate", r.estimate}, {"standard_error", r.standard_error}, {"ci", interval(r.ci)}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

template <int D>
Point<D> parse_point(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  Point<D> x{};
  for (int i = 0; i < D; ++i) x[i] = std::stoi(boost::trim_copy(parts[i]));
  return x;
}

WindowSpec window_of(const Manifest& m) { return WindowSpec{m.d, m.n, m.r}; }

PipelineOptions pipeline_options(const Manifest& m) {
  PipelineOptions opt;
  opt.inject_fault = m.get_bool("inject_fault", false);
  opt.plant_lo = static_cast<int>(m.get_int("plant_lo", 0));
  opt.plant_hi = static_cast<int>(m.get_int("plant_hi", 0));
  return opt;
}

double default_p_c(int d) { return d == 2 ? 0.5 : 0.25; }

template <int D>
Reproducer make_reproducer(const Manifest& m, double p, std::uint64_t index, const PipelineOptions& opt,
                           const std::string& message) {
  const auto w = make_window<D>(window_of(m));
  const auto c = pipeline_configuration<D>(w, p, m.seed, index, opt);
  Reproducer r;
  r.header = configuration_header<D>(c, m.hash());
  r.header["violation"] = message;
  r.header["options"] = {{"inject_fault", opt.inject_fault}, {"plant_lo", opt.plant_lo}, {"plant_hi", opt.plant_hi}};
  r.header["blob"] = "reproducer.bin";
  r.blob = configuration_blob<D>(c);
  return r;
}

json tally_json(const StructureTally& t) {
  json j = {{"samples", t.samples},
            {"excluded", t.excluded},
            {"exclusion_rate", t.exclusion_rate()},
            {"finite_origin_cluster", t.finite},
            {"large_finite_origin_cluster", t.large_finite},
            {"s_o_defined", t.s_o_defined},
            {"touching_applicable", t.phi_applicable},
            {"touching_within_cut", t.phi_within_cut},
            {"inc_ex_checked", t.inc_ex_checked},
            {"inc_ex_equal", t.inc_ex_equal},
            {"occurring_components", t.occurring_total},
            {"witness_disagreements", t.witness_disagreements},
            {"faults_injected", t.faults_injected},
            {"violating_samples", t.violating_samples},
            {"violations", t.violations},
            {"exclusions", t.exclusions}};
  if (t.first_violation) j["first_violation"] = {{"sample_index", *t.first_violation}, {"message", t.first_violation_message}};
  return j;
}

// ---------------------------------------------------------------- sample

template <int D>
void run_sample(const Manifest& m, Report& rep) {
  const auto w = make_window<D>(window_of(m));
  const auto opt = pipeline_options(m);
  struct Acc {
    std::vector<SampleReport> rows;
    StructureTally tally;
    void merge(const Acc& a) {
      rows.insert(rows.end(), a.rows.begin(), a.rows.end());
      tally.merge(a.tally);
    }
  };
  Table table{"samples",
              {"p", "index", "co_finite", "co_large", "co_size", "co_diameter", "excluded", "exclusion", "s_o_boxes",
               "cut_size", "touching", "occurring", "witness_disagreements", "violations"},
              {}};
  auto opt_num = [](const std::optional<std::size_t>& v) { return v ? num(*v) : std::string(); };
  json per_p = json::array();
  for (double p : m.p) {
    const auto acc = run_blocks(m.samples, m.workers, Acc{}, [&](std::uint64_t i, Acc& a) {
      auto r = analyze_sample<D>(pipeline_configuration<D>(w, p, m.seed, i, opt), opt);
      a.tally.add(r);
      a.rows.push_back(std::move(r));
    });
    for (const auto& r : acc.rows)
      table.rows.push_back({num(p), num(r.index), num(int(r.co_finite)), num(int(r.co_large)), num(r.co_size),
                            num(r.co_diameter), num(int(r.excluded)), r.exclusion, opt_num(r.s_o_boxes),
                            opt_num(r.cut_size), opt_num(r.phi), num(r.occurring_sizes.size()),
                            num(r.witness_disagreements), num(r.violations.size())});
    json j = tally_json(acc.tally);
    j["p"] = p;
    per_p.push_back(j);
    if (acc.tally.first_violation && !rep.reproducer) {
      rep.reproducer = make_reproducer<D>(m, p, *acc.tally.first_violation, opt, acc.tally.first_violation_message);
      rep.raise(kExitViolation, "invariant violation at p=" + num(p) + ": " + acc.tally.first_violation_message);
    }
  }
  rep.summary["results"] = per_p;
  rep.tables.push_back(std::move(table));
}

// ---------------------------------------------------------------- classify

template <int D>
void run_classify(const Manifest& m, Report& rep) {
  const auto w = make_window<D>(window_of(m));
  const std::size_t origin_box = w.box_index(BoxId<D>{});
  struct Row {
    std::uint64_t index = 0;
    std::array<std::uint64_t, 4> failures{};
    bool origin_good = false;
  };
  struct Acc {
    std::vector<Row> rows;
    void merge(const Acc& a) { rows.insert(rows.end(), a.rows.begin(), a.rows.end()); }
  };
  Table table{"boxes", {"p", "index", "boxes", "good", "no_crossing", "overlap_not_crossed", "second_large_cluster",
                        "origin_good"}, {}};
  json per_p = json::array();
  for (double p : m.p) {
    const auto acc = run_blocks(m.samples, m.workers, Acc{}, [&](std::uint64_t i, Acc& a) {
      const auto c = sample<D>(w, p, m.seed, i);
      const BoxClassification<D, Configuration<D>> cls(c);
      Row row;
      row.index = i;
      for (std::size_t k = 0; k < w.box_count(); ++k) ++row.failures[static_cast<std::size_t>(cls.info(k).failure)];
      row.origin_good = cls.good(origin_box);
      a.rows.push_back(row);
    });
    std::array<std::uint64_t, 4> totals{};
    std::uint64_t origin_good = 0;
    for (const auto& r : acc.rows) {
      table.rows.push_back({num(p), num(r.index), num(w.box_count()), num(r.failures[0]), num(r.failures[1]),
                            num(r.failures[2]), num(r.failures[3]), num(int(r.origin_good))});
      for (std::size_t f = 0; f < 4; ++f) totals[f] += r.failures[f];
      origin_good += r.origin_good;
    }
    const std::uint64_t boxes = m.samples * w.box_count();
    per_p.push_back({{"p", p},
                     {"samples", m.samples},
                     {"boxes", boxes},
                     {"good_fraction", static_cast<double>(totals[0]) / static_cast<double>(boxes)},
                     {"failures",
                      {{"no_crossing", totals[1]}, {"overlap_not_crossed", totals[2]}, {"second_large_cluster", totals[3]}}},
                     {"origin_good", origin_good},
                     {"origin_good_probability", static_cast<double>(origin_good) / static_cast<double>(m.samples)},
                     {"origin_good_ci", interval(wilson_interval(origin_good, m.samples))}});
  }
  rep.summary["results"] = per_p;
  rep.tables.push_back(std::move(table));
}

// ---------------------------------------------------------------- tails

template <int D>
void run_tails(const Manifest& m, Report& rep) {
  const std::string name = m.require("statistic");
  const TailStatistic stat = name == "cut_size" ? TailStatistic::cut_size
                             : name == "touching" ? TailStatistic::touching
                                                  : TailStatistic::renorm_boundary;
  Table table{"survival", {"p", "value", "count", "at_least", "survival"}, {}};
  json per_p = json::array();
  for (double p : m.p) {
    TailEstimate t;
    try {
      t = tail_experiment<D>(p, window_of(m), m.samples, m.seed, stat, m.workers, false);
    } catch (const InvariantViolation& e) {
      rep.raise(kExitViolation, e.what());
      per_p.push_back({{"p", p}, {"status", "invariant_violation"}, {"message", e.what()}});
      continue;
    }
    json j = {{"p", p},
              {"statistic", name},
              {"samples", t.samples},
              {"finite", t.finite},
              {"excluded", t.excluded},
              {"undefined", t.undefined},
              {"exclusion_rate", t.samples ? static_cast<double>(t.excluded) / static_cast<double>(t.samples) : 0.0}};
    try {
      fit_tail(t);
      j["fit"] = fit_json(*t.fit);
      j["fit_range"] = {t.fit_lo, t.fit_hi};
      j["rate"] = t.rate;
      j["rate_ci"] = interval(t.rate_ci);
      j["status"] = "ok";
    } catch (const InsufficientData& e) {
      j["status"] = "insufficient_data";
      j["message"] = e.what();
      rep.raise(kExitInsufficient, std::string("p=") + num(p) + ": " + e.what());
    }
    for (const auto& [value, count] : t.counts)
      table.rows.push_back({num(p), num(value), num(count), num(t.at_least(value)), num(t.survival(value))});
    per_p.push_back(j);
  }
  rep.summary["results"] = per_p;
  rep.tables.push_back(std::move(table));
}

// ---------------------------------------------------------------- expansion

template <int D>
json expansion_block(const Manifest& m, double p, Table& table, Report& rep) {
  const auto n_max = static_cast<std::size_t>(m.get_int("n_max", 20));
  ExpansionResult r;
  try {
    r = empirical_expansion<D>(p, window_of(m), n_max, m.samples, m.seed, m.workers, pipeline_options(m));
  } catch (const InvariantViolation& e) {
    rep.raise(kExitViolation, e.what());
    return {{"p", p}, {"status", "invariant_violation"}, {"message", e.what()}};
  }
  const auto& agg = r.aggregate;
  for (std::size_t n = 0; n < agg.per_n.size(); ++n)
    table.rows.push_back({num(p), num(n), num(agg.per_n[n].mean()), num(agg.per_n[n].standard_error())});
  json j = {{"p", p},
            {"samples", r.samples},
            {"excluded", r.excluded},
            {"exclusion_rate", static_cast<double>(r.excluded) / static_cast<double>(r.samples)},
            {"used_samples", agg.samples},
            {"sum_of_terms", r.sum_terms},
            {"direct_union", r.direct},
            {"combined_se", r.combined_se},
            {"discrepancy_se", r.discrepancy_se},
            {"overflow_subsets", agg.overflow_subsets},
            {"complexity", {{"min_ratio", r.complexity.min_ratio}, {"max_ratio", r.complexity.max_ratio},
                            {"lo", r.complexity_lo}, {"hi", r.complexity_hi}, {"pass", r.complexity.pass}}},
            {"decay_status", r.decay_status}};
  if (r.decay)
    j["decay"] = {{"ratio", r.decay->ratio}, {"ratio_upper", r.decay->ratio_upper}, {"first_n", r.decay->first_n},
                  {"last_n", r.decay->last_n}, {"pass", r.decay->pass}};
  else
    rep.raise(kExitInsufficient, "p=" + num(p) + ": " + r.decay_status);
  if (!r.complexity.pass) rep.raise(kExitViolation, "p=" + num(p) + ": event complexity outside its bounds");
  return j;
}

template <int D>
void run_expansion(const Manifest& m, Report& rep) {
  Table table{"terms", {"p", "n", "a_n", "standard_error"}, {}};
  json per_p = json::array();
  for (double p : m.p) per_p.push_back(expansion_block<D>(m, p, table, rep));
  rep.summary["results"] = per_p;
  rep.tables.push_back(std::move(table));
}

// ---------------------------------------------------------------- estimate

template <int D>
void run_estimate(const Manifest& m, Report& rep) {
  const std::string q = m.require("quantity");
  const WindowSpec spec = window_of(m);
  json per_p = json::array();
  Table table{q, {}, {}};
  auto report_row = [&](const EstimatorReport& r) {
    table.header = {"quantity", "p", "samples", "estimate", "standard_error", "ci_lo", "ci_hi"};
    table.rows.push_back({r.quantity, num(r.p), num(r.samples), num(r.estimate), num(r.standard_error), num(r.ci.lo),
                          num(r.ci.hi)});
    per_p.push_back(report_json(r));
  };
  for (double p : m.p) {
    if (q == "theta") {
      report_row(theta_hat<D>(p, spec, m.samples, m.seed, m.workers));
    } else if (q == "tau" || q == "tau_f") {
      std::vector<Point<D>> xs{Point<D>{}, parse_point<D>(m.require("x"))};
      report_row(tau_hat<D>(xs, p, spec, m.samples, m.seed, q == "tau_f", m.workers));
    } else if (q == "chi_f") {
      report_row(chi_f_hat<D>(static_cast<unsigned>(m.get_int("k", 1)), p, spec, m.samples, m.seed, m.workers));
    } else if (q == "tau_f_sum") {
      const auto w = make_window<D>(spec);
      report_row(tau_f_sum_hat<D>(static_cast<int>(m.get_int("range", w.reach() - 1)), p, spec, m.samples, m.seed,
                                  m.workers));
    } else if (q == "kappa") {
      report_row(kappa_hat<D>(p, spec, m.samples, m.seed, m.workers));
    } else if (q == "histogram") {
      const auto h = size_histogram<D>(p, spec, m.samples, m.seed, m.workers);
      table.header = {"p", "size", "count"};
      for (const auto& [n, c] : h.finite) table.rows.push_back({num(p), num(n), num(c)});
      table.rows.push_back({num(p), "infinite", num(h.infinite)});
      const std::uint64_t classified = h.total();
      per_p.push_back({{"quantity", q},
                       {"p", p},
                       {"samples", h.samples},
                       {"infinite", h.infinite},
                       {"classified", classified},
                       {"normalized", classified == h.samples},
                       {"first_moment", h.first_moment()}});
      if (classified != h.samples) rep.raise(kExitViolation, "size histogram does not classify every sample once");
    } else if (q == "kappa_derivative") {
      const auto r = kappa_derivative_check<D>(p, m.get_double("h", 0.02), spec, m.samples, m.seed,
                                               m.get_double("p_c", default_p_c(D)), m.workers);
      table.header = {"p", "h", "samples", "central_difference", "pivotal_form", "difference", "standard_error",
                      "discrepancy_se"};
      table.rows.push_back({num(p), num(r.h), num(r.samples), num(r.central_difference), num(r.pivotal_form),
                            num(r.difference), num(r.standard_error), num(r.discrepancy_se)});
      per_p.push_back({{"quantity", q},
                       {"p", p},
                       {"h", r.h},
                       {"samples", r.samples},
                       {"central_difference", r.central_difference},
                       {"pivotal_form", r.pivotal_form},
                       {"difference", r.difference},
                       {"standard_error", r.standard_error},
                       {"independent_se", r.independent_se},
                       {"discrepancy_se", r.discrepancy_se}});
    } else if (q == "tau_f_decay") {
      table.header = {"p", "distance", "hits", "estimate"};
      json j = {{"quantity", q}, {"p", p}, {"samples", m.samples}};
      try {
        const auto r = tau_f_decay<D>(p, spec, parse_point<D>(m.require("direction")),
                                      static_cast<int>(m.get_int("max_dist", 10)), m.samples, m.seed, m.workers);
        for (const auto& pt : r.points) table.rows.push_back({num(p), num(pt.distance), num(pt.hits), num(pt.estimate)});
        j["fit"] = fit_json(*r.fit);
        j["fit_range"] = {r.fit_lo, r.fit_hi};
        j["rate"] = r.rate;
        j["status"] = "ok";
      } catch (const InsufficientData& e) {
        j["status"] = "insufficient_data";
        j["message"] = e.what();
        rep.raise(kExitInsufficient, e.what());
      }
      per_p.push_back(j);
    }
  }
  rep.summary["results"] = per_p;
  rep.tables.push_back(std::move(table));
}

// ---------------------------------------------------------------- counting

json census_json(const AnimalCensus& c, const char* mode, Table& table) {
  for (std::size_t n = 1; n <= c.n_max(); ++n)
    table.rows.push_back({mode, num(n), num(c.fixed[n]), num(c.containing[n])});
  json j = {{"mode", mode}, {"n_max", c.n_max()}, {"states", c.states}};
  if (c.n_max() >= 4) {
    const auto g = growth_estimate(c);
    j["growth"] = {{"last_ratio", g.last_ratio}, {"extrapolated", g.extrapolated}, {"mu", g.mu}};
  }
  return j;
}

json disk_json(const DiskSweep& s) {
  json j = {{"tuples", s.tuples}, {"violations", s.violations}};
  if (s.violations)
    j["first_violation"] = {{"m", s.m}, {"b", s.b}, {"p", s.p}, {"delta", s.delta}, {"z", {s.z.real(), s.z.imag()}}};
  return j;
}

template <int D>
void run_counting(const Manifest& m, Report& rep) {
  const auto n_max = static_cast<std::size_t>(m.get_int("n_max", D == 2 ? 8 : 6));
  Table animals{"animals", {"mode", "n", "fixed", "containing_origin"}, {}};
  const auto axis = count_animals<D>(Adjacency::axis, n_max);
  const auto diag = count_animals<D>(Adjacency::diagonal, n_max);
  json j;
  j["animals"] = {census_json(axis, "axis", animals), census_json(diag, "diagonal", animals)};

  const auto pmax = static_cast<std::size_t>(m.get_int("partitions_max", 100));
  const auto table = partitions(pmax);
  const auto bound = partition_bound(table);
  Table parts{"partitions", {"n", "p_n"}, {}};
  for (std::size_t n = 0; n <= pmax; ++n) parts.rows.push_back({num(n), table.p[n].str()});
  j["partitions"] = {{"n_max", pmax},
                     {"log_r", bound.log_r},
                     {"r", bound.r},
                     {"violations", bound.violations},
                     {"log_ratio_decreasing_from", bound.decreasing_from}};

  if (const auto tuples = static_cast<std::uint64_t>(m.get_int("tuples", 0)); tuples > 0) {
    j["disk_bound"] = disk_json(disk_bound_sweep(tuples, m.seed, false));
    j["disk_bound_at_one"] = disk_json(disk_bound_sweep(tuples, m.seed ^ 1, true));
  }
  if (m.has("c_hat") && diag.n_max() >= 4) {
    const double k = static_cast<double>(1u << D);
    const double big_m = 2.0 * growth_estimate(diag).mu;
    const auto b = exp_dec_bound(1.0, m.get_double("c_hat", 0.5), k, big_m, std::max(bound.r, 1.0 + 1e-9));
    j["exp_dec"] = {{"M", big_m}, {"k", k}, {"c_hat", m.get_double("c_hat", 0.5)}, {"rate", b.rate},
                    {"decaying", b.decaying}};
    if (!b.decaying) rep.notes.push_back("M * c_hat^(1/k) = " + num(b.rate) + " >= 1: no decay at this c_hat");
  }
  rep.summary["results"] = j;
  rep.tables.push_back(std::move(animals));
  rep.tables.push_back(std::move(parts));
}

// ---------------------------------------------------------------- verify

template <int D>
json verify_structure(const Manifest& m, Report& rep) {
  const auto opt = pipeline_options(m);
  json per_p = json::array();
  for (double p : m.p) {
    const auto t = structure_suite<D>(p, window_of(m), m.samples, m.seed, m.workers, opt);
    json j = tally_json(t);
    j["p"] = p;
    j["pass"] = t.violating_samples == 0;
    per_p.push_back(j);
    if (t.first_violation && !rep.reproducer) {
      rep.reproducer = make_reproducer<D>(m, p, *t.first_violation, opt, t.first_violation_message);
      rep.raise(kExitViolation, "structure: sample " + num(*t.first_violation) + " at p=" + num(p) + ": " +
                                    t.first_violation_message);
    }
  }
  return per_p;
}

template <int D>
json verify_expansion(const Manifest& m, Report& rep) {
  Table table{"terms", {"p", "n", "a_n", "standard_error"}, {}};
  json j;
  json per_p = json::array();
  // Only invariant failures fail the suite here; thin statistics do not.
  Report local;
  for (double p : m.p) per_p.push_back(expansion_block<D>(m, p, table, local));
  if (local.status == kExitViolation)
    for (const auto& n : local.notes) rep.raise(kExitViolation, "expansion: " + n);
  j["per_p"] = per_p;
  const auto tuples = static_cast<std::uint64_t>(m.get_int("tuples", 10'000));
  const auto disk = disk_bound_sweep(tuples, m.seed, false);
  j["disk_bound"] = disk_json(disk);
  if (disk.violations) rep.raise(kExitViolation, "expansion: disk bound violated");
  // Reported only: the p = 1 variant does not hold for m > b.
  j["disk_bound_at_one"] = disk_json(disk_bound_sweep(tuples, m.seed ^ 1, true));
  rep.tables.push_back(std::move(table));
  return j;
}

template <int D>
json verify_counting(const Manifest& m, Report& rep) {
  json j;
  const auto pmax = static_cast<unsigned>(std::min<long long>(m.get_int("partitions_max", 20), 60));
  const auto table = partitions(pmax);
  std::size_t partition_mismatch = 0;
  for (unsigned n = 0; n <= pmax; ++n)
    if (table.p[n] != partitions_by_listing(n)) ++partition_mismatch;
  j["partitions"] = {{"n_max", pmax}, {"mismatches", partition_mismatch}};
  if (partition_mismatch) rep.raise(kExitViolation, "counting: pentagonal recurrence disagrees with listing");

  const auto n_max = static_cast<std::size_t>(m.get_int("n_max", D == 2 ? 8 : 5));
  json animals = json::array();
  for (auto mode : {Adjacency::axis, Adjacency::diagonal}) {
    const auto a = count_animals<D>(mode, n_max);
    const auto b = count_fixed_animals_bfs<D>(mode, n_max);
    std::size_t mismatch = 0;
    for (std::size_t n = 1; n <= n_max; ++n) mismatch += a.fixed[n] != b[n];
    animals.push_back({{"mode", mode == Adjacency::axis ? "axis" : "diagonal"}, {"n_max", n_max}, {"mismatches", mismatch}});
    if (mismatch) rep.raise(kExitViolation, "counting: animal enumerators disagree");
  }
  j["animals"] = animals;

  // Parity packing on random box sets.
  const auto sets = static_cast<std::uint64_t>(m.get_int("tuples", 1000));
  std::uint64_t packing_failures = 0;
  for (std::uint64_t i = 0; i < sets; ++i) {
    const std::uint64_t h = splitmix64(m.seed ^ splitmix64(i ^ 0x7061636bull));
    std::vector<BoxId<D>> s;
    const std::size_t size = 1 + h % 40;
    for (std::size_t k = 0; k < size; ++k) {
      const std::uint64_t g = splitmix64(h + k + 1);
      BoxId<D> b;
      for (int a = 0; a < D; ++a) b[a] = static_cast<int>((g >> (8 * a)) % 9) - 4;
      s.push_back(b);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    const auto pack = disjoint_packing<D>(s);
    bool ok = pack.size() * (1u << D) >= s.size();
    for (std::size_t x = 0; x < pack.size() && ok; ++x)
      for (std::size_t y = x + 1; y < pack.size() && ok; ++y) {
        int dist = 0;
        for (int a = 0; a < D; ++a) dist = std::max(dist, std::abs(pack[x][a] - pack[y][a]));
        ok = dist >= 2;
      }
    packing_failures += !ok;
  }
  j["packing"] = {{"sets", sets}, {"failures", packing_failures}};
  if (packing_failures) rep.raise(kExitViolation, "counting: packing not disjoint or too small");
  return j;
}

template <int D>
void run_replay(const Manifest& m, Report& rep) {
  const std::string path = m.require("replay");
  json header;
  try {
    std::ifstream f(path);
    if (!f) throw UsageError("replay: cannot read " + path);
    header = json::parse(f);
  } catch (const json::exception& e) {
    throw UsageError(std::string("replay: malformed reproducer: ") + e.what());
  }
  if (header.value("manifest_hash", std::string()) != m.hash())
    throw UsageError("replay: reproducer manifest hash " + header.value("manifest_hash", std::string("(none)")) +
                     " does not match this manifest (" + m.hash() + ")");
  const auto w = make_window<D>(window_of(m));
  const auto blob_path = (fs::path(path).parent_path() / header.value("blob", std::string("reproducer.bin"))).string();
  const auto c = configuration_from_blob<D>(header, read_bytes(blob_path), w);
  const auto opt = pipeline_options(m);
  const auto regenerated = pipeline_configuration<D>(w, c.p(), c.seed(), c.sample_index(), opt);
  const auto r = analyze_sample<D>(c, opt);
  rep.summary["replay"] = {{"sample_index", c.sample_index()},
                           {"p", c.p()},
                           {"bits_match_regenerated", c == regenerated},
                           {"violations", r.violations}};
  if (!r.violations.empty()) rep.raise(kExitViolation, "replay reproduces: " + r.violations.front());
}

template <int D>
void run_verify(const Manifest& m, Report& rep) {
  const std::string suite = m.require("suite");
  if (m.has("replay")) {
    run_replay<D>(m, rep);
    return;
  }
  json j;
  if (suite == "structure" || suite == "all") j["structure"] = verify_structure<D>(m, rep);
  if (suite == "expansion" || suite == "all") j["expansion"] = verify_expansion<D>(m, rep);
  if (suite == "counting" || suite == "all") j["counting"] = verify_counting<D>(m, rep);
  j["pass"] = rep.status != kExitViolation;
  rep.summary["results"] = j;
}

template <int D>
void dispatch(const Manifest& m, Report& rep) {
  if (m.kind == "sample") run_sample<D>(m, rep);
  else if (m.kind == "classify") run_classify<D>(m, rep);
  else if (m.kind == "tails") run_tails<D>(m, rep);
  else if (m.kind == "expansion") run_expansion<D>(m, rep);
  else if (m.kind == "estimate") run_estimate<D>(m, rep);
  else if (m.kind == "counting") run_counting<D>(m, rep);
  else if (m.kind == "verify") run_verify<D>(m, rep);
}

void write_outputs(const Manifest& m, Report& rep) {
  const fs::path dir(m.out);
  fs::create_directories(dir);
  const std::string hash = m.hash();
  for (const auto& t : rep.tables) {
    std::ostringstream csv;
    csv << "# manifest_hash=" << hash << "\n" << boost::join(t.header, ",") << "\n";
    for (const auto& row : t.rows) csv << boost::join(row, ",") << "\n";
    write_file((dir / (t.name + ".csv")).string(), csv.str());
  }
  if (rep.reproducer) {
    write_file((dir / "reproducer.json").string(), rep.reproducer->header.dump(2) + "\n");
    write_file((dir / "reproducer.bin").string(), rep.reproducer->blob);
  }
  json s = rep.summary;
  s["manifest_hash"] = hash;
  s["schema"] = kSchema;
  s["kind"] = m.kind;
  s["seed"] = m.seed;
  s["manifest"] = m.canonical();
  s["exit_code"] = rep.status;
  s["notes"] = rep.notes;
  if (rep.reproducer) s["reproducer"] = "reproducer.json";
  write_file((dir / "summary.json").string(), s.dump(2) + "\n");
}

}  // namespace

int run(const Manifest& m, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  Report rep;
  try {
    if (m.d == 3)
      dispatch<3>(m, rep);
    else
      dispatch<2>(m, rep);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  } catch (const InvariantViolation& e) {
    rep.raise(kExitViolation, e.what());
  } catch (const InsufficientData& e) {
    rep.raise(kExitInsufficient, e.what());
  }
  write_outputs(m, rep);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file((fs::path(m.out) / "timing.json").string(),
             json{{"manifest_hash", m.hash()}, {"wall_seconds", seconds}}.dump(2) + "\n");
  for (const auto& n : rep.notes) log << "note: " << n << "\n";
  log << "manifest " << m.hash() << " kind=" << m.kind << " exit=" << rep.status << " wall=" << seconds << "s\n";
  return rep.status;
}

}  // namespace bperc::cli
