#pragma once
// Experiment manifests: versioned key = value text, validated before any
// computation.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bperc::cli {

inline constexpr const char* kSchema = "bperc-manifest/1";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Manifest {
  std::string kind;  // sample | classify | tails | expansion | estimate | counting | verify
  int d = 0;
  int n = 0;
  int r = 0;
  std::vector<double> p;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out;
  std::map<std::string, std::string> extra;  // kind-specific keys, verbatim

  bool has(const std::string& key) const { return extra.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Sorted key=value lines of every setting that can change results
  /// (workers, out and replay are left out).
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
};

/// Parses and validates manifest text. Throws UsageError.
Manifest parse_manifest(const std::string& text, const Overrides& overrides = {});
Manifest load_manifest(const std::string& path, const Overrides& overrides = {});

}  // namespace bperc::cli
