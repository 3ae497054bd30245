#pragma once
// Signed sums of p^m (1-p)^b, the polynomials in which probabilities of
// events depending on finitely many edges are written.

#include <bit>
#include <complex>
#include <cstdlib>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "bperc/errors.hpp"

namespace bperc {

struct Monomial {
  std::int64_t coeff = 0;
  unsigned open = 0;    // m
  unsigned closed = 0;  // b
  friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Canonical form: terms merged by (m, b), zero coefficients dropped, sorted
/// by (m, b).
class ExponentPolynomial {
 public:
  ExponentPolynomial() = default;

  void add(int sign, unsigned m, unsigned b, std::uint64_t multiplicity = 1) {
    if (sign != 1 && sign != -1) throw InvalidArgument("term sign must be +1 or -1");
    terms_[{m, b}] += sign * static_cast<std::int64_t>(multiplicity);
    if (terms_[{m, b}] == 0) terms_.erase({m, b});
  }
  void add(const ExponentPolynomial& o) {
    for (const auto& t : o.terms()) add(t.coeff > 0 ? 1 : -1, t.open, t.closed, static_cast<std::uint64_t>(std::abs(t.coeff)));
  }

  std::vector<Monomial> terms() const {
    std::vector<Monomial> out;
    out.reserve(terms_.size());
    for (const auto& [k, c] : terms_) out.push_back({c, k.first, k.second});
    return out;
  }
  bool empty() const { return terms_.empty(); }

  /// Sum of coeff z^m (1-z)^b. Terms of total degree above 64 go through the
  /// complex logarithm so that huge exponents neither overflow nor lose the
  /// phase.
  std::complex<double> eval(std::complex<double> z) const {
    std::complex<double> total = 0.0;
    const std::complex<double> w = 1.0 - z;
    for (const auto& [k, c] : terms_) total += static_cast<double>(c) * monomial(z, w, k.first, k.second);
    return total;
  }
  double eval(double p) const { return eval(std::complex<double>(p, 0.0)).real(); }

  friend bool operator==(const ExponentPolynomial&, const ExponentPolynomial&) = default;

 private:
  static std::complex<double> ipow(std::complex<double> x, unsigned e) {
    std::complex<double> r = 1.0;
    while (e) {
      if (e & 1u) r *= x;
      x *= x;
      e >>= 1;
    }
    return r;
  }
  static std::complex<double> monomial(std::complex<double> z, std::complex<double> w, unsigned m, unsigned b) {
    if (m + b <= 64) return ipow(z, m) * ipow(w, b);
    if ((m && z == 0.0) || (b && w == 0.0)) return 0.0;
    std::complex<double> lg = 0.0;
    if (m) lg += static_cast<double>(m) * std::log(z);
    if (b) lg += static_cast<double>(b) * std::log(w);
    return std::exp(lg);
  }

  std::map<std::pair<unsigned, unsigned>, std::int64_t> terms_;
};

/// Probability polynomial of an event on k <= 25 edges, by summing
/// p^{#open}(1-p)^{#closed} over every assignment where the event holds.
/// `event` receives the assignment as a bit mask (bit i = edge i open).
inline ExponentPolynomial exhaustive_polynomial(unsigned edge_count, const std::function<bool(std::uint32_t)>& event) {
  if (edge_count > 25) throw InvalidArgument("exhaustive_polynomial is capped at 25 edges");
  std::vector<std::uint64_t> count(static_cast<std::size_t>(edge_count) + 1, 0);
  const std::uint32_t total = std::uint32_t{1} << edge_count;
  for (std::uint32_t mask = 0; mask < total; ++mask)
    if (event(mask)) ++count[static_cast<std::size_t>(std::popcount(mask))];
  ExponentPolynomial poly;
  for (unsigned m = 0; m <= edge_count; ++m)
    if (count[m]) poly.add(1, m, edge_count - m, count[m]);
  return poly;
}

}  // namespace bperc
