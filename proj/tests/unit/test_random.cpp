#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "psou/random.hpp"

using psou::RandomStream;

namespace {

struct Stats {
  double mean = 0.0;
  double var = 0.0;
};

template <class F>
Stats sample_stats(F draw, int n) {
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  Stats st;
  st.mean = s / n;
  st.var = s2 / n - st.mean * st.mean;
  return st;
}

}  // namespace

TEST(SplitMix, ReferenceValue) {
  // First output of the reference SplitMix64 generator started from state 0.
  EXPECT_EQ(psou::splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(RandomStream, SameSeedSameSequence) {
  RandomStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  RandomStream c(42), d(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(c.normal(), d.normal());
}

TEST(RandomStream, ChildStreamsDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t i = 0; i < 100; ++i) firsts.insert(RandomStream::child(7, i).next_u64());
  EXPECT_EQ(firsts.size(), 100u);
  EXPECT_NE(psou::derive_seed(1, 0), psou::derive_seed(2, 0));
  EXPECT_EQ(psou::derive_seed(1, 5), psou::derive_seed(1, 5));
}

TEST(RandomStream, UniformOpenInterval) {
  RandomStream r(1);
  const int n = 400000;
  double lo = 1.0, hi = 0.0;
  const Stats st = sample_stats(
      [&] {
        const double u = r.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        return u;
      },
      n);
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(st.mean, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(st.var, 1.0 / 12.0, 0.002);
}

TEST(RandomStream, NormalMoments) {
  RandomStream r(2);
  const int n = 400000;
  double s3 = 0.0, s4 = 0.0;
  const Stats st = sample_stats(
      [&] {
        const double x = r.normal();
        s3 += x * x * x;
        s4 += x * x * x * x;
        return x;
      },
      n);
  EXPECT_NEAR(st.mean, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(st.var, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s3 / n, 0.0, 5.0 * std::sqrt(15.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 5.0 * std::sqrt(96.0 / n));
}

TEST(RandomStream, ExponentialMoments) {
  RandomStream r(3);
  const int n = 400000;
  const double rate = 2.5;
  const Stats st = sample_stats([&] { return r.exponential(rate); }, n);
  EXPECT_NEAR(st.mean, 1.0 / rate, 5.0 / rate / std::sqrt(n));
  EXPECT_NEAR(st.var, 1.0 / (rate * rate), 0.01);
}

class PoissonMoments : public ::testing::TestWithParam<double> {};

TEST_P(PoissonMoments, MeanAndVariance) {
  const double mean = GetParam();
  RandomStream r(4);
  const int n = 300000;
  const Stats st = sample_stats([&] { return static_cast<double>(r.poisson(mean)); }, n);
  EXPECT_NEAR(st.mean, mean, 5.0 * std::sqrt(mean / n));
  // var of the sample variance for Poisson: (mu + 2 mu^2) / n
  EXPECT_NEAR(st.var, mean, 5.0 * std::sqrt((mean + 2.0 * mean * mean) / n));
}

INSTANTIATE_TEST_SUITE_P(Branches, PoissonMoments, ::testing::Values(0.05, 1.0, 3.0, 11.9, 12.0, 40.0, 1000.0));

TEST(RandomStream, PoissonProbabilities) {
  // Chi-square against the Poisson(3) pmf on {0, ..., 9, >= 10}.
  RandomStream r(5);
  const int n = 200000;
  std::vector<int> counts(11, 0);
  for (int i = 0; i < n; ++i) ++counts[std::min<std::uint64_t>(r.poisson(3.0), 10)];
  double p = std::exp(-3.0), tail = 1.0, chi2 = 0.0;
  for (int k = 0; k < 10; ++k) {
    chi2 += std::pow(counts[k] - n * p, 2) / (n * p);
    tail -= p;
    p *= 3.0 / (k + 1);
  }
  chi2 += std::pow(counts[10] - n * tail, 2) / (n * tail);
  EXPECT_LT(chi2, 35.0);  // 10 degrees of freedom, far tail
}

TEST(RandomStream, PoissonZeroMean) {
  RandomStream r(6);
  EXPECT_EQ(r.poisson(0.0), 0u);
}

TEST(RandomStream, InverseGaussianMoments) {
  RandomStream r(7);
  const int n = 400000;
  const double mu = 0.8, lambda = 1.7;
  const Stats st = sample_stats([&] { return r.inverse_gaussian(mu, lambda); }, n);
  const double var = mu * mu * mu / lambda;
  EXPECT_NEAR(st.mean, mu, 5.0 * std::sqrt(var / n));
  EXPECT_NEAR(st.var, var, 0.03 * var);
}
