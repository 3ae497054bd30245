#include "manifest.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/program_options.hpp>

namespace bperc::cli {
namespace {

namespace po = boost::program_options;

const std::set<std::string> kCoreKeys = {"schema", "kind", "d", "N", "R", "p", "samples", "seed", "workers", "out"};

// Keys a kind may use beyond the core ones.
const std::map<std::string, std::set<std::string>> kKindKeys = {
    {"sample", {"inject_fault", "plant_lo", "plant_hi"}},
    {"classify", {}},
    {"tails", {"statistic"}},
    {"expansion", {"n_max", "plant_lo", "plant_hi"}},
    {"estimate", {"quantity", "k", "h", "x", "direction", "max_dist", "range", "p_c"}},
    {"counting", {"n_max", "partitions_max", "tuples", "delta", "c_hat"}},
    {"verify", {"suite", "inject_fault", "plant_lo", "plant_hi", "n_max", "partitions_max", "tuples", "replay"}},
};

// Which core keys each kind needs.
const std::map<std::string, std::set<std::string>> kKindRequires = {
    {"sample", {"d", "N", "R", "p", "samples", "seed"}},
    {"classify", {"d", "N", "R", "p", "samples", "seed"}},
    {"tails", {"d", "N", "R", "p", "samples", "seed", "statistic"}},
    {"expansion", {"d", "N", "R", "p", "samples", "seed", "n_max"}},
    {"estimate", {"d", "N", "R", "p", "samples", "seed", "quantity"}},
    {"counting", {"d", "n_max"}},
    {"verify", {"suite"}},
};

template <class T>
T convert(const std::string& key, const std::string& value) {
  try {
    return boost::lexical_cast<T>(boost::trim_copy(value));
  } catch (const boost::bad_lexical_cast&) {
    throw UsageError("manifest key '" + key + "': cannot parse '" + value + "'");
  }
}

std::vector<double> parse_grid(const std::string& value) {
  std::vector<std::string> parts;
  boost::split(parts, value, boost::is_any_of(","));
  std::vector<double> out;
  for (const auto& s : parts) {
    const double v = convert<double>("p", s);
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError("manifest key 'p': " + s + " is not in [0,1]");
    out.push_back(v);
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void validate(const Manifest& m, const std::map<std::string, std::string>& raw) {
  const auto& req = kKindRequires.at(m.kind);
  for (const auto& key : req)
    if (!raw.count(key)) throw UsageError("manifest: kind '" + m.kind + "' requires key '" + key + "'");
  if (raw.count("d") && m.d != 2 && m.d != 3) throw UsageError("manifest: d must be 2 or 3");
  if (raw.count("N") && m.n < 1) throw UsageError("manifest: N must be >= 1");
  if (raw.count("R") && m.r < 1) throw UsageError("manifest: R must be >= 1");
  if (raw.count("samples") && m.samples == 0) throw UsageError("manifest: samples must be >= 1");
  if (m.workers == 0) throw UsageError("manifest: workers must be >= 1");
  if (m.kind == "verify") {
    static const std::set<std::string> suites = {"structure", "expansion", "counting", "all"};
    const std::string suite = m.extra.at("suite");
    if (!suites.count(suite)) throw UsageError("manifest: unknown suite '" + suite + "'");
    if (suite != "counting")
      for (const char* key : {"d", "N", "R", "p", "samples", "seed"})
        if (!raw.count(key)) throw UsageError("manifest: suite '" + suite + "' requires key '" + key + "'");
    if ((suite == "counting" || suite == "all") && !raw.count("d"))
      throw UsageError("manifest: suite '" + suite + "' requires key 'd'");
  }
  if (m.kind == "tails") {
    static const std::set<std::string> stats = {"cut_size", "touching", "renorm_boundary"};
    if (!stats.count(m.extra.at("statistic"))) throw UsageError("manifest: unknown statistic");
  }
  if (m.kind == "estimate") {
    static const std::set<std::string> qs = {"theta", "tau", "tau_f", "chi_f", "tau_f_sum", "kappa",
                                             "histogram", "kappa_derivative", "tau_f_decay"};
    const auto q = m.extra.at("quantity");
    if (!qs.count(q)) throw UsageError("manifest: unknown quantity '" + q + "'");
    if ((q == "tau" || q == "tau_f") && !m.has("x")) throw UsageError("manifest: quantity '" + q + "' requires key 'x'");
    if (q == "chi_f" && !m.has("k")) throw UsageError("manifest: quantity 'chi_f' requires key 'k'");
    if (q == "kappa_derivative" && !m.has("h")) throw UsageError("manifest: quantity 'kappa_derivative' requires key 'h'");
    if (q == "tau_f_decay" && !(m.has("direction") && m.has("max_dist")))
      throw UsageError("manifest: quantity 'tau_f_decay' requires keys 'direction' and 'max_dist'");
  }
  // Type-check every kind-specific key now so nothing fails mid-run.
  static const std::set<std::string> ints = {"k", "n_max", "partitions_max", "max_dist", "range", "plant_lo", "plant_hi",
                                             "tuples"};
  static const std::set<std::string> doubles = {"h", "delta", "c_hat", "p_c"};
  for (const auto& [key, value] : m.extra) {
    if (ints.count(key) && convert<long long>(key, value) < 0) throw UsageError("manifest key '" + key + "' is negative");
    if (doubles.count(key)) convert<double>(key, value);
  }
  if (m.has("inject_fault")) m.get_bool("inject_fault", false);
  for (const char* key : {"x", "direction"}) {
    if (!m.has(key)) continue;
    std::vector<std::string> parts;
    boost::split(parts, m.extra.at(key), boost::is_any_of(","));
    if (static_cast<int>(parts.size()) != m.d) throw UsageError(std::string("manifest key '") + key + "' needs d coordinates");
    for (const auto& part : parts) convert<int>(key, part);
  }
}

}  // namespace

std::string Manifest::get(const std::string& key, const std::string& fallback) const {
  const auto it = extra.find(key);
  return it == extra.end() ? fallback : it->second;
}

std::string Manifest::require(const std::string& key) const {
  const auto it = extra.find(key);
  if (it == extra.end()) throw UsageError("manifest: missing key '" + key + "'");
  return it->second;
}

long long Manifest::get_int(const std::string& key, long long fallback) const {
  return has(key) ? convert<long long>(key, extra.at(key)) : fallback;
}

double Manifest::get_double(const std::string& key, double fallback) const {
  return has(key) ? convert<double>(key, extra.at(key)) : fallback;
}

bool Manifest::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto v = boost::to_lower_copy(boost::trim_copy(extra.at(key)));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("manifest key '" + key + "': expected a boolean");
}

std::string Manifest::canonical() const {
  std::map<std::string, std::string> kv(extra.begin(), extra.end());
  kv.erase("replay");
  kv["schema"] = kSchema;
  kv["kind"] = kind;
  if (d) kv["d"] = std::to_string(d);
  if (n) kv["N"] = std::to_string(n);
  if (r) kv["R"] = std::to_string(r);
  if (!p.empty()) {
    std::string g;
    for (std::size_t i = 0; i < p.size(); ++i) {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, p[i]);
      g += (i ? "," : "") + std::string(buf, res.ptr);
    }
    kv["p"] = g;
  }
  if (samples) kv["samples"] = std::to_string(samples);
  kv["seed"] = std::to_string(seed);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string Manifest::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

Manifest parse_manifest(const std::string& text, const Overrides& overrides) {
  std::map<std::string, std::string> raw;
  try {
    std::istringstream in(text);
    const auto parsed = po::parse_config_file(in, po::options_description{}, true);
    for (const auto& opt : parsed.options) {
      if (opt.value.size() != 1) throw UsageError("manifest key '" + opt.string_key + "' has no value");
      if (!raw.emplace(opt.string_key, boost::trim_copy(opt.value.front())).second)
        throw UsageError("manifest key '" + opt.string_key + "' given twice");
    }
  } catch (const po::error& e) {
    throw UsageError(std::string("manifest: ") + e.what());
  }

  if (!raw.count("schema")) throw UsageError("manifest: missing 'schema'");
  if (raw.at("schema") != kSchema)
    throw UsageError("manifest: unsupported schema '" + raw.at("schema") + "' (expected " + kSchema + ")");
  if (!raw.count("kind")) throw UsageError("manifest: missing 'kind'");

  Manifest m;
  m.kind = raw.at("kind");
  if (!kKindKeys.count(m.kind)) throw UsageError("manifest: unknown kind '" + m.kind + "'");
  const auto& allowed = kKindKeys.at(m.kind);
  for (const auto& [key, value] : raw) {
    if (kCoreKeys.count(key)) continue;
    if (!allowed.count(key)) throw UsageError("manifest: key '" + key + "' is not valid for kind '" + m.kind + "'");
    m.extra[key] = value;
  }
  if (raw.count("d")) m.d = convert<int>("d", raw.at("d"));
  if (raw.count("N")) m.n = convert<int>("N", raw.at("N"));
  if (raw.count("R")) m.r = convert<int>("R", raw.at("R"));
  if (raw.count("p")) m.p = parse_grid(raw.at("p"));
  if (raw.count("samples")) m.samples = convert<std::uint64_t>("samples", raw.at("samples"));
  if (raw.count("seed")) m.seed = convert<std::uint64_t>("seed", raw.at("seed"));
  if (raw.count("workers")) m.workers = convert<unsigned>("workers", raw.at("workers"));
  if (raw.count("out")) m.out = raw.at("out");

  if (overrides.seed) {
    m.seed = *overrides.seed;
    raw["seed"] = std::to_string(*overrides.seed);
  }
  if (overrides.workers) m.workers = *overrides.workers;
  if (overrides.out) m.out = *overrides.out;
  validate(m, raw);
  if (m.out.empty()) throw UsageError("no output directory (set 'out' or pass --out)");
  return m;
}

Manifest load_manifest(const std::string& path, const Overrides& overrides) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read manifest " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_manifest(ss.str(), overrides);
}

}  // namespace bperc::cli
