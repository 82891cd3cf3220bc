#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <random>

#include "pedghmm/error.hpp"
#include "pedghmm/stats.hpp"
#include "stats_reference.hpp"

using namespace pedghmm;
namespace tst = pedghmm::testing;

TEST(PairedTest, IdenticalIsHalf) {
  const std::vector<double> a{1.0, 2.5, 3.0, 0.2};
  EXPECT_EQ(paired_test(a, a), 0.5);
}

TEST(PairedTest, ConstantShiftUsesSignRule) {
  std::vector<double> b, a;
  for (int i = 0; i < 10; ++i) {
    b.push_back(3.0 + i);
    a.push_back(2.0 + i);
  }
  EXPECT_LT(paired_test(a, b), 1e-6);
  EXPECT_EQ(paired_test(b, a), 1.0);
}

TEST(PairedTest, TextbookSample) {
  const std::vector<double> before{200, 190, 210, 220, 205};
  const std::vector<double> after{210, 195, 215, 225, 215};
  EXPECT_NEAR(paired_test(before, after), 0.0023179197089522037, 1e-4);
  EXPECT_NEAR(paired_test(before, after), tst::reference_paired_p(before, after), 1e-10);
}

TEST(PairedTest, ReferenceSamples) {
  for (int k = 0; k < 20; ++k) {
    const auto [a, b] = tst::reference_sample(k);
    EXPECT_NEAR(paired_test(a, b), tst::kReferencePValues[k], 1e-4) << "sample " << k;
    EXPECT_NEAR(paired_test(a, b), tst::reference_paired_p(a, b), 1e-9) << "sample " << k;
  }
}

TEST(PairedTest, Antisymmetric) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a, b;
    for (int i = 0; i < 8; ++i) {
      a.push_back(g(rng));
      b.push_back(g(rng) + 0.3);
    }
    EXPECT_NEAR(paired_test(a, b) + paired_test(b, a), 1.0, 1e-9);
  }
}

TEST(PairedTest, Errors) {
  const std::vector<double> a{1, 2, 3}, b{1, 2};
  EXPECT_THROW(paired_test(a, b), InputError);
  EXPECT_THROW(paired_test(std::vector<double>{1}, std::vector<double>{2}), InputError);
}

TEST(Fisher, KnownValues) {
  EXPECT_NEAR(combine_pvalues(std::vector<double>{0.37}), 0.37, 1e-12);
  EXPECT_NEAR(combine_pvalues(std::vector<double>{0.5, 0.5}), 0.5966, 1e-3);
  EXPECT_NEAR(combine_pvalues(std::vector<double>{0.5, 0.5}), 0.5965735902799727, 1e-12);
  EXPECT_EQ(combine_pvalues(std::vector<double>{1.0, 1.0, 1.0}), 1.0);
  EXPECT_NEAR(combine_pvalues(std::vector<double>{0.01, 0.2, 0.7}), 0.04082702883527948, 1e-12);
  EXPECT_NEAR(combine_pvalues(std::vector<double>{1e-10, 0.3}), 7.568947120279912e-10, 1e-18);
}

TEST(Fisher, MatchesChiSquareSurvival) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> ps(1 + rep % 12);
    double stat = 0.0;
    for (double& p : ps) {
      p = u(rng);
      stat -= 2.0 * std::log(p);
    }
    const int dof = 2 * static_cast<int>(ps.size());
    const boost::math::chi_squared dist(dof);
    EXPECT_NEAR(combine_pvalues(ps), boost::math::cdf(boost::math::complement(dist, stat)), 1e-12);
    EXPECT_NEAR(combine_pvalues(ps), tst::chi_square_sf(stat, dof), 1e-9);
  }
}

TEST(Fisher, ZeroIsClampedWithWarning) {
  std::vector<std::string> warnings;
  const double p = combine_pvalues(std::vector<double>{0.0, 0.5}, &warnings);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1e-290);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Fisher, Errors) {
  EXPECT_THROW(combine_pvalues(std::vector<double>{}), InputError);
  EXPECT_THROW(combine_pvalues(std::vector<double>{1.2}), InputError);
  EXPECT_THROW(combine_pvalues(std::vector<double>{-0.1}), InputError);
}

TEST(ChiSquare, EvenSurvival) {
  EXPECT_NEAR(chi_square_survival_even(2.772588722239781, 2), 0.5965735902799727, 1e-14);
  EXPECT_EQ(chi_square_survival_even(0.0, 3), 1.0);
  EXPECT_NEAR(chi_square_survival_even(3.0, 1), std::exp(-1.5), 1e-15);
}
