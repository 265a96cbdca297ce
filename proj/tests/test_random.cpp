#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pamlr/random.hpp"

using namespace pamlr;

namespace {

std::vector<double> beta_draws(double a, double b, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> xs(n);
  for (auto& x : xs) x = beta_sample(a, b, rng);
  return xs;
}

double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size());
}

constexpr std::size_t kDraws = 100000;

}  // namespace

TEST(BetaSampler, UniformShapeKs) {
  const auto xs = beta_draws(1, 1, kDraws, 11);
  EXPECT_LT(ks_distance(xs, [](double x) { return x; }), 0.01);
  EXPECT_NEAR(mean(xs), 0.5, 0.01);
}

TEST(BetaSampler, TwoTwoKsAndVariance) {
  const auto xs = beta_draws(2, 2, kDraws, 12);
  EXPECT_LT(ks_distance(xs, [](double x) { return 3 * x * x - 2 * x * x * x; }), 0.01);
  EXPECT_NEAR(variance(xs), 1.0 / 20.0, 0.005);
}

TEST(BetaSampler, FiveOneKsAndMean) {
  const auto xs = beta_draws(5, 1, kDraws, 13);
  EXPECT_LT(ks_distance(xs, [](double x) { return std::pow(x, 5); }), 0.01);
  EXPECT_NEAR(mean(xs), 5.0 / 6.0, 0.01);
  for (double x : xs) ASSERT_TRUE(x >= 0.0 && x <= 1.0);
}

TEST(BetaSampler, LopsidedMean) {
  EXPECT_NEAR(mean(beta_draws(100, 1, kDraws, 14)), 100.0 / 101.0, 0.01);
}

TEST(BetaSampler, SmallShapesStayInUnitInterval) {
  // Shapes near the count floor go through the log-space path.
  const auto xs = beta_draws(1e-6, 0.3, 20000, 15);
  for (double x : xs) ASSERT_TRUE(x >= 0.0 && x <= 1.0 && std::isfinite(x));
  // Beta(a, b) with a -> 0 puts almost all mass at 0
  EXPECT_LT(mean(xs), 0.01);
}

TEST(BetaSampler, SubUnitShapeKs) {
  // Beta(0.5, 1): CDF sqrt(x)
  const auto xs = beta_draws(0.5, 1, kDraws, 16);
  EXPECT_LT(ks_distance(xs, [](double x) { return std::sqrt(x); }), 0.01);
}

TEST(BetaSampler, RejectsBadShapes) {
  Rng rng(1);
  EXPECT_THROW(beta_sample(0.0, 1.0, rng), ContractViolation);
  EXPECT_THROW(beta_sample(1.0, -1.0, rng), ContractViolation);
  EXPECT_THROW(beta_sample(NAN, 1.0, rng), ContractViolation);
  EXPECT_THROW(beta_sample(1.0, INFINITY, rng), ContractViolation);
}

TEST(BetaSampler, SameSeedSameSequence) {
  EXPECT_EQ(beta_draws(2.5, 0.7, 1000, 99), beta_draws(2.5, 0.7, 1000, 99));
  EXPECT_NE(beta_draws(2.5, 0.7, 1000, 99), beta_draws(2.5, 0.7, 1000, 100));
}

TEST(BetaSampler, LargerAlphaStochasticallyLarger) {
  EXPECT_GT(mean(beta_draws(6, 3, kDraws, 21)), mean(beta_draws(4, 3, kDraws, 22)));
}

TEST(Uniform, OpenUnitInterval) {
  EXPECT_GT(bits_to_unit(0), 0.0);
  EXPECT_LT(bits_to_unit(~std::uint64_t{0}), 1.0);
}

TEST(Normal, MomentsOfBoxMuller) {
  Rng rng(5);
  std::vector<double> xs(kDraws);
  for (auto& x : xs) x = standard_normal(rng);
  EXPECT_NEAR(mean(xs), 0.0, 0.01);
  EXPECT_NEAR(variance(xs), 1.0, 0.02);
}

TEST(KeyedNormal, StatelessAndKeyed) {
  EXPECT_EQ(keyed_normal(7, 3, 100), keyed_normal(7, 3, 100));
  EXPECT_NE(keyed_normal(7, 3, 100), keyed_normal(7, 3, 101));
  EXPECT_NE(keyed_normal(7, 3, 100), keyed_normal(7, 4, 100));
  std::vector<double> xs;
  for (std::uint64_t t = 0; t < kDraws; ++t) xs.push_back(keyed_normal(42, 1, t));
  EXPECT_NEAR(mean(xs), 0.0, 0.01);
  EXPECT_NEAR(variance(xs), 1.0, 0.02);
}

TEST(DeriveSeed, DistinctStreams) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.push_back(derive_seed(1, i));
  std::sort(seeds.begin(), seeds.end());
  EXPECT_EQ(std::adjacent_find(seeds.begin(), seeds.end()), seeds.end());
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(UniformIndex, CoversRange) {
  Rng rng(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) ++hits[uniform_index(rng, 7)];
  for (int h : hits) EXPECT_NEAR(h, 10000, 400);
}
