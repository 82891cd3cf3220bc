#pragma once

// Reference data for the statistics tests. The p-values were produced by
// scipy.stats.ttest_rel(a, b, alternative="less") on the samples below; the
// t-distribution tail is also recomputed here from the incomplete beta
// function, independent of Boost.

#include <cmath>
#include <utility>
#include <vector>

namespace pedghmm::testing {

inline std::pair<std::vector<double>, std::vector<double>> reference_sample(int k) {
  const int n = 5 + k;
  std::vector<double> a, b;
  for (int i = 0; i < n; ++i) {
    a.push_back(10 + 2 * std::sin(1.3 * i + k) + 0.5 * std::cos(0.37 * i * i));
    b.push_back(a.back() + 0.15 * (k % 5 - 2) + 0.4 * std::cos(0.7 * i * (k + 1) + 1.0));
  }
  return {a, b};
}

inline constexpr double kReferencePValues[20] = {
    0.9930026526473441,    0.8420679797041946,   0.3969609352677695,   0.10194824720939244,  0.00827139589217874,
    0.9932962140134483,    0.8515511584948579,   0.19969270145952062,  1.0309125400050323e-15, 0.003976572330596196,
    0.9993682633976847,    0.9644198713948338,   0.4968242577269526,   0.017421799113707205, 8.99609046832117e-05,
    0.9997793823697229,    0.9618287928770117,   6.013956910263627e-05, 0.03398426709848391, 2.2553489926328547e-05,
};

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

/// P(T <= t) for Student's t with nu degrees of freedom.
inline double student_t_cdf(double t, double nu) {
  const double tail = 0.5 * incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

/// One-sided paired t-test of mean(a) < mean(b), textbook formula.
inline double reference_paired_p(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  return student_t_cdf(t, static_cast<double>(n - 1));
}

/// Upper tail of chi-square with 2k degrees of freedom, via the regularized
/// gamma series.
inline double chi_square_sf(double x, int dof) {
  const double a = dof / 2.0, z = x / 2.0;
  if (z <= 0.0) return 1.0;
  double sum = 1.0 / a, term = sum;
  for (int n = 1; n < 100000; ++n) {
    term *= z / (a + n);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  const double lower = std::exp(-z + a * std::log(z) - std::lgamma(a)) * sum;
  return 1.0 - lower;
}

}  // namespace pedghmm::testing
