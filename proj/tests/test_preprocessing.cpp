#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ecuhealth/preprocessing.hpp"
#include "ecuhealth/random.hpp"

using namespace ecuhealth;

namespace {

Dataset ramp(std::size_t n) {
  const auto c = default_catalog();
  Dataset d(c);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(c.size());
    for (std::size_t s = 0; s < c.size(); ++s) {
      const double t = static_cast<double>((i * 7 + s) % n) / static_cast<double>(n);
      v[s] = c[s].physical_min + t * (c[s].physical_max - c[s].physical_min);
    }
    d.push_back({static_cast<std::int64_t>(i), v});
  }
  return d;
}

}  // namespace

TEST(Split, ThousandFramesFollowTheRatios) {
  // 0.33 * 1000 = 330 test; 0.25 * 670 = 167.5, rounded half away = 168.
  const auto idx = split_indices(1000, 42);
  EXPECT_EQ(idx.test.size(), 330u);
  EXPECT_EQ(idx.validation.size(), 168u);
  EXPECT_EQ(idx.train.size(), 502u);
}

TEST(Split, PartitionIsDisjointAndComplete) {
  const auto data = ramp(137);
  const auto parts = split(data, 5);
  std::multiset<std::int64_t> seen;
  for (const auto* d : {&parts.train, &parts.validation, &parts.test}) {
    for (const auto& f : d->frames()) seen.insert(f.timestamp_ms);
  }
  std::multiset<std::int64_t> all;
  for (const auto& f : data.frames()) all.insert(f.timestamp_ms);
  EXPECT_EQ(seen, all);
}

TEST(Split, TenFramesFillEveryPart) {
  const auto s = split_sizes(10);
  EXPECT_EQ(s.test, 3u);
  EXPECT_EQ(s.validation, 2u);
  EXPECT_EQ(s.train, 5u);
  EXPECT_THROW(split_indices(9, 1), Error);
}

TEST(Split, DeterministicPerSeed) {
  EXPECT_EQ(split_indices(500, 9).test, split_indices(500, 9).test);
  EXPECT_NE(split_indices(500, 9).test, split_indices(500, 10).test);
}

TEST(Split, TooFewFramesError) {
  try {
    split(ramp(5), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_few_frames);
  }
}

TEST(Cleanse, CleanDataIsUnchanged) {
  const auto d = ramp(50);
  const auto r = cleanse(d);
  EXPECT_EQ(r.data, d);
  EXPECT_EQ(r.report.rows_dropped_nonfinite, 0u);
  EXPECT_EQ(r.report.rows_dropped_out_of_range, 0u);
  EXPECT_EQ(r.report.rows_out, 50u);
}

TEST(Cleanse, DropsNonFiniteAndOutOfRangeFrames) {
  const auto base = ramp(100);
  Dataset d(base.catalog());
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto f = base[i];
    if (i == 3 || i == 40 || i == 77) f.values[5] = std::numeric_limits<double>::quiet_NaN();
    if (i == 50) f.values[3] = -50.0;  // engine speed below its minimum of 0
    if (i == 77) f.values[1] = 1e9;    // also out of range: still counted as non-finite
    d.push_back(f);
  }
  const auto r = cleanse(d);
  EXPECT_EQ(r.report.rows_in, 100u);
  EXPECT_EQ(r.report.rows_dropped_nonfinite, 3u);
  EXPECT_EQ(r.report.rows_dropped_out_of_range, 1u);
  EXPECT_EQ(r.report.rows_out, 96u);
  EXPECT_EQ(r.data.size(), 96u);
  EXPECT_EQ(cleanse(r.data).data, r.data);  // idempotent
}

TEST(Normalizer, FitsMinAndMaxOnTrainOnly) {
  const auto c = default_catalog();
  Dataset d(c);
  std::vector<double> base(c.size());
  for (std::size_t s = 0; s < c.size(); ++s) base[s] = c[s].physical_min;
  for (double v : {2.0, 4.0, 10.0}) {
    auto row = base;
    row[2] = v;
    row[3] = 5.0;
    d.push_back({0, row});
  }
  const auto p = fit_normalizer(d);
  EXPECT_EQ(p.min[2], 2.0);
  EXPECT_EQ(p.max[2], 10.0);
  EXPECT_EQ(p.min[3], 5.0);
  EXPECT_EQ(p.max[3], 5.0);
  EXPECT_THROW(fit_normalizer(Dataset(c)), Error);
}

TEST(Normalizer, WorkedValues) {
  NormalizationParams p{{0.0, 5.0}, {10.0, 5.0}};
  EXPECT_EQ(p.normalize(5.0, 0), 0.5);
  EXPECT_EQ(p.normalize(0.0, 0), 0.0);
  EXPECT_EQ(p.normalize(10.0, 0), 1.0);
  EXPECT_EQ(p.normalize(20.0, 0), 2.0);  // not clipped
  EXPECT_EQ(p.denormalize(0.5, 0), 5.0);
  EXPECT_EQ(p.normalize(123.0, 1), 0.0);  // constant sensor
  EXPECT_EQ(p.denormalize(0.7, 1), 5.0);
}

TEST(Normalizer, RoundTripAndMonotone) {
  const auto c = default_catalog();
  Rng rng(17);
  NormalizationParams p;
  for (const auto& s : c.sensors()) {
    p.min.push_back(s.physical_min);
    p.max.push_back(s.physical_max);
  }
  for (std::size_t s = 0; s < c.size(); ++s) {
    const double lo = c[s].physical_min, hi = c[s].physical_max;
    const double scale = std::max({std::abs(lo), std::abs(hi)});
    double prev_x = -std::numeric_limits<double>::infinity(), prev_n = prev_x;
    std::vector<double> xs(1000);
    for (auto& x : xs) x = rng.uniform(lo, hi);
    std::sort(xs.begin(), xs.end());
    for (double x : xs) {
      const double n = p.normalize(x, s);
      EXPECT_LE(std::abs(p.denormalize(n, s) - x), 1e-12 * std::max(std::abs(x), scale));
      if (x > prev_x) { EXPECT_GT(n, prev_n); }
      prev_x = x;
      prev_n = n;
    }
  }
}
