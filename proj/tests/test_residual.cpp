#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "ecuhealth/random.hpp"
#include "ecuhealth/residual.hpp"

using namespace ecuhealth;

namespace {

/// Independent band oracle written as a plain if-chain on the distance.
HealthIndex band_oracle(double e, double mu, double sigma) {
  const double d = std::abs(e - mu);
  if (d < sigma) return HealthIndex::healthy;
  if (d < 2 * sigma) return HealthIndex::almost_healthy;
  if (d < 3 * sigma) return HealthIndex::normal;
  if (d < 4 * sigma) return HealthIndex::almost_defective;
  return HealthIndex::defective;
}

}  // namespace

TEST(Residuals, AbsoluteDifferences) {
  AutoencoderModel m;
  m.layers.push_back({2, 2, {0.0, 0.0, 0.0, 0.0}, {0.4, 0.6}, Activation::identity});
  const auto e = residuals(m, Matrix::from_rows({{0.5, 0.5}, {0.4, 0.6}}));
  EXPECT_NEAR(e(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(e(0, 1), 0.1, 1e-15);  // +0.1 and -0.1 errors give equal residuals
  EXPECT_EQ(e(1, 0), 0.0);
  EXPECT_EQ(e(1, 1), 0.0);
}

TEST(Profile, HandValues) {
  const auto p = fit_profile(Matrix::from_rows({{0.0, 0.1, 0.0}, {0.2, 0.1, 0.0}, {0.1, 0.1, 0.0}}));
  EXPECT_NEAR(p[1].mu, 0.1, 1e-15);
  EXPECT_NEAR(p[1].sigma, 0.0, 1e-15);
  EXPECT_EQ(p[2].mu, 0.0);
  EXPECT_EQ(p[2].sigma, 0.0);
  EXPECT_EQ(p[0].n, 3u);

  // Two samples {0, 0.2}: mean 0.1, squared deviations 0.01 + 0.01 over n-1 = 1.
  const auto two = fit_profile(Matrix::from_rows({{0.0}, {0.2}}));
  EXPECT_NEAR(two[0].mu, 0.1, 1e-15);
  EXPECT_NEAR(two[0].sigma, std::sqrt(0.02), 1e-15);
}

TEST(Profile, NeedsTwoFrames) {
  try {
    fit_profile(Matrix::from_rows({{0.1, 0.2}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_few_samples);
  }
}

TEST(Classify, WorkedExamples) {
  EXPECT_EQ(classify(0.12, 0.1, 0.05), HealthIndex::healthy);
  EXPECT_EQ(classify(0.18, 0.1, 0.05), HealthIndex::almost_healthy);
  EXPECT_EQ(classify(0.55, 0.1, 0.05), HealthIndex::defective);
  EXPECT_EQ(classify(0.15, 0.1, 0.05), HealthIndex::almost_healthy);  // z = 1 is lower-inclusive
  EXPECT_EQ(classify(0.1, 0.1, 0.05), HealthIndex::healthy);
  EXPECT_EQ(classify(0.1, 0.1, 0.0), HealthIndex::healthy);
  EXPECT_EQ(classify(0.1000001, 0.1, 0.0), HealthIndex::defective);
  try {
    classify(-0.01, 0.1, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::negative_residual);
  }
}

TEST(Classify, EveryBandEdgeIsLowerInclusive) {
  // Binary-exact values so the oracle and classify see the same distances.
  const double mu = 0.5, sigma = 0.125;
  EXPECT_EQ(classify(mu + 1 * sigma, mu, sigma), HealthIndex::almost_healthy);
  EXPECT_EQ(classify(mu + 2 * sigma, mu, sigma), HealthIndex::normal);
  EXPECT_EQ(classify(mu + 3 * sigma, mu, sigma), HealthIndex::almost_defective);
  EXPECT_EQ(classify(mu + 4 * sigma, mu, sigma), HealthIndex::defective);
  EXPECT_EQ(classify(mu - 3 * sigma, mu, sigma), HealthIndex::almost_defective);
}

TEST(Classify, GridAgreesWithOracleAndIsMonotone) {
  const double mu = 0.3, sigma = 0.07;
  HealthIndex prev = HealthIndex::healthy;
  for (int i = 0; i <= 10000; ++i) {
    const double e = mu + 0.0001 * i * (mu + 5 * sigma) / 1.0;
    const auto h = classify(e, mu, sigma);
    const double z = std::abs(e - mu) / sigma;
    // Away from the snapped edges the oracle must agree exactly.
    if (std::abs(z - std::round(z)) > 1e-9) { EXPECT_EQ(h, band_oracle(e, mu, sigma)) << e; }
    EXPECT_GE(h, prev);
    prev = h;
  }
  for (int i = 0; i <= 10000; ++i) {
    const double e = 1e-4 * i * 2.0;
    const double z = std::abs(e - mu) / sigma;
    if (std::abs(z - std::round(z)) > 1e-9) { EXPECT_EQ(classify(e, mu, sigma), band_oracle(e, mu, sigma)) << e; }
  }
}

TEST(Classify, NormalBandFrequencies) {
  Rng rng(2024);
  const std::size_t n = 1000000;
  Matrix draws(n, 1);
  for (std::size_t i = 0; i < n; ++i) draws(i, 0) = 10.0 + rng.normal();
  const auto p = fit_profile(draws);
  std::array<double, 5> counts{};
  for (std::size_t i = 0; i < n; ++i) counts[static_cast<std::size_t>(classify(draws(i, 0), p[0]))] += 1;
  // Two-sided normal masses of |z| in [0,1), [1,2), [2,3), [3,4), [4,inf).
  const std::array<double, 5> expected{0.682689, 0.271810, 0.042800, 0.002637, 0.0000633};
  for (std::size_t b = 0; b < 5; ++b) EXPECT_NEAR(counts[b] / n, expected[b], 0.01) << "band " << b;
}
