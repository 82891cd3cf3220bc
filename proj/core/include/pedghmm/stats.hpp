#pragma once

#include <span>
#include <string>
#include <vector>

namespace pedghmm {

/// Inputs of exactly 0 are raised to this before combination.
inline constexpr double kPValueFloor = 1e-300;

/// One-sided paired t-test of mean(a) < mean(b). When every difference is
/// identical the statistic is unbounded: 0.5 if all differences are 0,
/// otherwise 0 or 1 by their sign. Throws InputError for length mismatch or
/// fewer than 2 pairs.
double paired_test(std::span<const double> a, std::span<const double> b);

/// Fisher's method: survival of -2 Σ ln p under chi-square with 2k degrees
/// of freedom. Warnings (clamped zeros) go to `warnings` when given, else to
/// stderr. Throws InputError for an empty list or values outside [0, 1].
double combine_pvalues(std::span<const double> ps, std::vector<std::string>* warnings = nullptr);

/// Upper tail of chi-square with 2k degrees of freedom at x.
double chi_square_survival_even(double x, std::size_t k);

}  // namespace pedghmm
