#include "pedghmm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "pedghmm/error.hpp"

namespace pedghmm {

double paired_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("paired_test: series lengths differ");
  const std::size_t n = a.size();
  if (n < 2) throw InputError("paired_test needs at least 2 pairs");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += b[i] - a[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  bool constant = true;
  const double d0 = b[0] - a[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double d = b[i] - a[i];
    if (!std::isfinite(d)) throw InputError("paired_test: non-finite value");
    if (d != d0) constant = false;
    ss += (d - mean) * (d - mean);
  }
  if (constant) {
    if (d0 == 0.0) return 0.5;
    return d0 > 0.0 ? 0.0 : 1.0;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::cdf(boost::math::complement(dist, t));
}

double chi_square_survival_even(double x, std::size_t k) {
  if (k == 0) throw InputError("chi-square needs at least 2 degrees of freedom");
  if (x <= 0.0) return 1.0;
  // exp(-x/2) Σ_{i<k} (x/2)^i / i!, summed in log space.
  const double h = x / 2.0;
  const double lh = std::log(h);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(k);
  for (std::size_t i = 0; i < k; ++i) {
    terms[i] = static_cast<double>(i) * lh - std::lgamma(static_cast<double>(i) + 1.0);
    best = std::max(best, terms[i]);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - best);
  return std::min(1.0, std::exp(best + std::log(s) - h));
}

double combine_pvalues(std::span<const double> ps, std::vector<std::string>* warnings) {
  if (ps.empty()) throw InputError("combine_pvalues needs at least one p-value");
  double stat = 0.0;
  std::size_t clamped = 0;
  for (double p : ps) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("p-value outside [0, 1]");
    if (p == 0.0) {
      ++clamped;
      p = kPValueFloor;
    }
    stat -= 2.0 * std::log(p);
  }
  if (clamped > 0) {
    const std::string msg = "combine_pvalues: clamped " + std::to_string(clamped) + " zero p-value(s) to 1e-300";
    if (warnings) warnings->push_back(msg);
    else std::cerr << "warning: " << msg << '\n';
  }
  return chi_square_survival_even(stat, ps.size());
}

}  // namespace pedghmm
