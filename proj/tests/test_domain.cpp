#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ecuhealth/domain.hpp"

using namespace ecuhealth;

TEST(Catalog, DefaultHasTwentyOrderedSensors) {
  const auto c = default_catalog();
  ASSERT_EQ(c.size(), 20u);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i].id, i);
  EXPECT_EQ(c[0].name, "manifold_air_temperature");
  EXPECT_EQ(c[19].name, "strike");
  EXPECT_EQ(c[1].forest_features, 6u);
  EXPECT_EQ(c[8].forest_features, 2u);
  EXPECT_EQ(c[19].forest_features, 19u);
  EXPECT_EQ(c.index_of("engine_speed"), std::optional<std::size_t>(3));
  EXPECT_FALSE(c.index_of("warp_drive").has_value());
}

TEST(Catalog, RejectsBrokenInvariants) {
  const auto base = default_catalog();
  auto specs = std::vector<SensorSpec>(base.sensors().begin(), base.sensors().end());
  auto expect_invalid = [](std::vector<SensorSpec> s) { EXPECT_THROW(SensorCatalog{std::move(s)}, Error); };

  auto short_list = specs;
  short_list.pop_back();
  expect_invalid(short_list);

  auto dup = specs;
  dup[5].name = dup[4].name;
  expect_invalid(dup);

  auto inverted = specs;
  std::swap(inverted[3].physical_min, inverted[3].physical_max);
  expect_invalid(inverted);

  auto bad_k = specs;
  bad_k[2].forest_features = 20;
  expect_invalid(bad_k);

  auto bad_id = specs;
  bad_id[7].id = 8;
  expect_invalid(bad_id);
}

TEST(Catalog, FingerprintTracksContent) {
  const auto catalog = default_catalog();
  auto specs = std::vector<SensorSpec>(catalog.sensors().begin(), catalog.sensors().end());
  const auto fingerprint = SensorCatalog(specs).fingerprint();
  EXPECT_EQ(fingerprint, catalog.fingerprint());
  specs[9].physical_max += 1.0;
  EXPECT_NE(SensorCatalog(specs).fingerprint(), fingerprint);
}

TEST(Dataset, EnforcesWidthAndTimestampOrder) {
  Dataset d(default_catalog());
  d.push_back({10, std::vector<double>(20, 0.0)});
  d.push_back({10, std::vector<double>(20, 0.0)});
  EXPECT_THROW(d.push_back({9, std::vector<double>(20, 0.0)}), Error);
  EXPECT_THROW(d.push_back({11, std::vector<double>(19, 0.0)}), Error);
  EXPECT_EQ(d.size(), 2u);
}

TEST(HealthIndex, NamesRoundTripAndOrder) {
  for (auto h : kAllHealthIndices) EXPECT_EQ(parse_health_index(to_string(h)), h);
  EXPECT_EQ(to_string(HealthIndex::almost_defective), "almost-defective");
  EXPECT_FALSE(parse_health_index("broken").has_value());
  EXPECT_LT(HealthIndex::normal, HealthIndex::almost_defective);
}

TEST(ValidateFrame, ReportsEveryViolation) {
  const auto c = default_catalog();
  SensorFrame f{0, std::vector<double>(20)};
  for (std::size_t s = 0; s < c.size(); ++s) f.values[s] = (c[s].physical_min + c[s].physical_max) / 2.0;
  EXPECT_TRUE(validate_frame(f, c).empty());
  f.values[2] = std::numeric_limits<double>::quiet_NaN();
  f.values[3] = -100.0;
  const auto v = validate_frame(f, c);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].kind, Violation::Kind::non_finite);
  EXPECT_EQ(v[0].sensor_id, std::optional<std::size_t>(2));
  EXPECT_EQ(v[1].kind, Violation::Kind::out_of_range);
  EXPECT_EQ(validate_frame(f, c, false).size(), 1u);

  SensorFrame short_frame{0, std::vector<double>(3, 0.0)};
  EXPECT_EQ(validate_frame(short_frame, c, false).front().kind, Violation::Kind::length_mismatch);
}
