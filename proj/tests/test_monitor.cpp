#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "ecuhealth/monitor.hpp"
#include "support.hpp"

using namespace ecuhealth;

namespace {

const MonitorPipeline& shared_pipeline() {
  static const MonitorPipeline p = fixtures::shared_outcome().artifact.pipeline();
  return p;
}

const SensorFrame& probe_frame() { return fixtures::shared_outcome().split.test[0]; }

/// A pipeline whose profile is centred exactly on the probe frame's
/// residuals, so that frame is Healthy everywhere.
MonitorPipeline centred_pipeline() {
  const auto& p = shared_pipeline();
  const auto x = p.normalizer().normalize(probe_frame().values);
  const auto y = forward(p.autoencoder(), x);
  ResidualProfile profile;
  for (std::size_t s = 0; s < x.size(); ++s) profile.sensors.push_back({std::abs(x[s] - y[s]), 0.01, 100});
  return MonitorPipeline(p.catalog(), p.normalizer(), p.autoencoder(), profile, p.bank());
}

std::vector<StreamRecord> run(const MonitorPipeline& p, std::vector<StreamItem> items) {
  std::size_t i = 0;
  std::vector<StreamRecord> out;
  process_stream(
      p, [&]() -> std::optional<StreamItem> { return i < items.size() ? std::optional(items[i++]) : std::nullopt; },
      [&](StreamRecord r) { out.push_back(std::move(r)); });
  return out;
}

}  // namespace

TEST(Monitor, HealthyFrameRaisesNothing) {
  const auto r = process_frame(centred_pipeline(), probe_frame());
  EXPECT_EQ(r.timestamp_ms, probe_frame().timestamp_ms);
  ASSERT_EQ(r.sensors.size(), 20u);
  for (const auto& h : r.sensors) {
    EXPECT_EQ(h.health, HealthIndex::healthy);
    EXPECT_FALSE(h.substituted_value.has_value());
    EXPECT_EQ(h.raw_value, probe_frame().values[h.sensor_id]);
  }
  EXPECT_TRUE(r.alerts.empty());
}

TEST(Monitor, StuckSensorIsSubstitutedWithForestEstimate) {
  const auto p = centred_pipeline();
  auto frame = probe_frame();
  frame.values[1] = 400.0;  // manifold pressure far outside anything seen
  const auto r = process_frame(p, frame);
  const auto& h = r.sensors[1];
  EXPECT_EQ(h.health, HealthIndex::defective);
  EXPECT_EQ(h.raw_value, 400.0);
  ASSERT_TRUE(h.substituted_value.has_value());
  const auto x = p.normalizer().normalize(frame.values);
  EXPECT_EQ(*h.substituted_value, p.normalizer().denormalize(predict(p.bank()[1], x), 1));
  ASSERT_FALSE(r.alerts.empty());
  EXPECT_TRUE(std::any_of(r.alerts.begin(), r.alerts.end(), [](const Alert& a) { return a.sensor_id == 1; }));
  for (const auto& s : r.sensors) {
    if (s.health != HealthIndex::defective) { EXPECT_FALSE(s.substituted_value.has_value()); }
  }
}

TEST(Monitor, AlertThresholdControlsAlerts) {
  const auto& p = shared_pipeline();
  const auto& frames = fixtures::shared_outcome().split.test;
  for (std::size_t i = 0; i < 50; ++i) {
    for (auto threshold : kAllHealthIndices) {
      const auto r = process_frame(p.with_alert_threshold(threshold), frames[i]);
      const auto expected = std::count_if(r.sensors.begin(), r.sensors.end(),
                                          [&](const SensorHealth& h) { return h.health >= threshold; });
      EXPECT_EQ(static_cast<std::ptrdiff_t>(r.alerts.size()), expected);
    }
  }
}

TEST(Monitor, RejectsStructuralViolationsOnly) {
  const auto& p = shared_pipeline();
  auto frame = probe_frame();
  frame.values[3] = 1e6;  // out of range is accepted
  EXPECT_NO_THROW(process_frame(p, frame));
  frame.values[3] = std::numeric_limits<double>::quiet_NaN();
  try {
    process_frame(p, frame);
    FAIL();
  } catch (const FrameRejected& e) {
    EXPECT_EQ(e.code(), Errc::structural_violation);
    ASSERT_EQ(e.violations().size(), 1u);
    EXPECT_EQ(e.violations()[0].sensor_id, std::optional<std::size_t>(3));
  }
  frame.values.resize(5);
  EXPECT_THROW(process_frame(p, frame), FrameRejected);
}

TEST(Monitor, PipelineRejectsMismatchedParts) {
  const auto& p = shared_pipeline();
  ResidualProfile short_profile{{p.profile().sensors.begin(), p.profile().sensors.begin() + 5}};
  EXPECT_THROW(MonitorPipeline(p.catalog(), p.normalizer(), p.autoencoder(), short_profile, p.bank()), Error);
  ForestBank empty;
  EXPECT_THROW(MonitorPipeline(p.catalog(), p.normalizer(), p.autoencoder(), p.profile(), empty), Error);
}

TEST(Stream, MapsFramesInOrder) {
  const auto& p = shared_pipeline();
  const auto& frames = fixtures::shared_outcome().split.test;
  std::vector<StreamItem> items;
  for (std::size_t i = 0; i < 30; ++i) items.emplace_back(frames[i]);
  const auto out = run(p, items);
  ASSERT_EQ(out.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(std::get<MonitorReport>(out[i]), process_frame(p, frames[i]));
}

TEST(Stream, MalformedFrameBecomesErrorRecord) {
  const auto& p = shared_pipeline();
  const auto& frames = fixtures::shared_outcome().split.test;
  std::vector<StreamItem> items;
  for (std::size_t i = 0; i < 10; ++i) items.emplace_back(frames[i]);
  auto bad = frames[4];
  bad.values[0] = std::numeric_limits<double>::infinity();
  items[4] = bad;
  items.insert(items.begin() + 7, StreamError{0, std::nullopt, "unparseable line"});
  const auto out = run(p, items);
  ASSERT_EQ(out.size(), 11u);
  std::size_t reports = 0, errors = 0;
  for (const auto& r : out) (std::holds_alternative<MonitorReport>(r) ? reports : errors)++;
  EXPECT_EQ(reports, 9u);
  EXPECT_EQ(errors, 2u);
  EXPECT_EQ(std::get<StreamError>(out[4]).sequence, 4u);
  EXPECT_EQ(std::get<StreamError>(out[4]).timestamp_ms, bad.timestamp_ms);
  EXPECT_EQ(std::get<StreamError>(out[7]).sequence, 7u);
}

TEST(Stream, ReportsDoNotDependOnOrder) {
  const auto& p = shared_pipeline();
  const auto& frames = fixtures::shared_outcome().split.test;
  std::vector<StreamItem> forward_items, reversed;
  for (std::size_t i = 0; i < 25; ++i) forward_items.emplace_back(frames[i]);
  reversed.assign(forward_items.rbegin(), forward_items.rend());
  const auto a = run(p, forward_items);
  const auto b = run(p, reversed);
  for (std::size_t i = 0; i < 25; ++i) EXPECT_EQ(std::get<MonitorReport>(a[i]), std::get<MonitorReport>(b[24 - i]));
}
