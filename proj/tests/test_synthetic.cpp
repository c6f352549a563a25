#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ecuhealth/benchmark.hpp"
#include "ecuhealth/metrics.hpp"
#include "ecuhealth/synthetic.hpp"

using namespace ecuhealth;
using namespace ecuhealth::synthetic;

namespace {

Matrix values_of(const Dataset& data) {
  Matrix m(0, data.catalog().size());
  for (const auto& f : data.frames()) m.push_row(f.values);
  return m;
}

Scenario make(std::size_t frames, std::uint64_t seed, double noise = 0.005, std::vector<FaultSpec> faults = {}) {
  ScenarioConfig c;
  c.n_frames = frames;
  c.seed = seed;
  c.noise_scale = noise;
  c.faults = std::move(faults);
  return generate(default_catalog(), c);
}

/// Builds a report whose Defective flags are given per (frame, sensor).
MonitorReport flagged_report(std::size_t width, const std::vector<std::size_t>& defective_sensors,
                             std::optional<double> substitute = std::nullopt) {
  MonitorReport r;
  for (std::size_t s = 0; s < width; ++s) {
    SensorHealth h;
    h.sensor_id = s;
    for (auto d : defective_sensors) {
      if (d == s) {
        h.health = HealthIndex::defective;
        h.substituted_value = substitute;
      }
    }
    r.sensors.push_back(h);
  }
  return r;
}

GroundTruth truth_with_flags(std::size_t frames, std::size_t width,
                             const std::vector<std::pair<std::size_t, std::size_t>>& faulted) {
  GroundTruth t{Matrix(frames, width), std::vector<std::uint8_t>(frames * width, 0)};
  for (auto [i, s] : faulted) t.fault_flags[i * width + s] = 1;
  return t;
}

}  // namespace

TEST(Synthetic, EngineSpeedTracksInjectionTimeWithoutNoise) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto m = values_of(make(1000, seed, 0.0).data);
    const double r = pearson(m.column(kEngineSpeed), m.column(kFuelInjectionTime));
    EXPECT_GE(std::abs(r), 0.9) << "seed " << seed;
  }
}

TEST(Synthetic, SameConfigIsBitIdentical) {
  const auto a = make(500, 42, 0.005, {{3, FaultKind::noise_burst, 200.0, 10, 40}});
  const auto b = make(500, 42, 0.005, {{3, FaultKind::noise_burst, 200.0, 10, 40}});
  EXPECT_EQ(values_of(a.data), values_of(b.data));
  EXPECT_EQ(a.truth.true_values, b.truth.true_values);
  EXPECT_EQ(a.truth.fault_flags, b.truth.fault_flags);
  EXPECT_NE(values_of(make(500, 43).data), values_of(a.data));
}

TEST(Synthetic, CleanDataRespectsEveryFrameInvariant) {
  const auto s = make(3000, 9);
  const auto& catalog = s.data.catalog();
  for (const auto& f : s.data.frames()) {
    EXPECT_TRUE(validate_frame(f, catalog).empty());
    for (std::size_t c = 0; c < catalog.size(); ++c) {
      if (catalog[c].kind == SensorKind::discrete_state) {
        EXPECT_TRUE(f.values[c] == 0.0 || f.values[c] == 1.0);
      }
    }
  }
  EXPECT_EQ(s.truth.true_values, values_of(s.data));
  for (std::size_t i = 0; i < s.truth.rows(); ++i) EXPECT_TRUE(s.truth.frame_clean(i));
}

TEST(Synthetic, StuckAtHoldsValueWhileTruthVaries) {
  const auto s = make(1000, 5, 0.005, {{kEngineSpeed, FaultKind::stuck_at, 2500.0, 100, 200}});
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 100; i <= 200; ++i) {
    EXPECT_EQ(s.data[i].values[kEngineSpeed], 2500.0);
    EXPECT_TRUE(s.truth.faulted(i, kEngineSpeed));
    lo = std::min(lo, s.truth.true_values(i, kEngineSpeed));
    hi = std::max(hi, s.truth.true_values(i, kEngineSpeed));
  }
  EXPECT_GT(hi - lo, 1.0);
  EXPECT_FALSE(s.truth.faulted(99, kEngineSpeed));
  EXPECT_FALSE(s.truth.faulted(201, kEngineSpeed));
}

TEST(Synthetic, FaultsAlterOnlyTheirWindow) {
  const std::vector<FaultSpec> faults = {
      {kManifoldPressure, FaultKind::offset, 25.0, 50, 80},
      {kBatteryVoltage, FaultKind::drift, 0.05, 300, 350},
      {kSpeed, FaultKind::dropout, 0.0, 0, 10},
  };
  const auto clean = make(600, 17);
  const auto faulty = make(600, 17, 0.005, faults);
  EXPECT_EQ(faulty.truth.true_values, clean.truth.true_values);
  for (std::size_t i = 0; i < 600; ++i) {
    for (std::size_t s = 0; s < kSensorCount; ++s) {
      const bool in_window = [&] {
        for (const auto& f : faults) {
          if (f.sensor_id == s && i >= f.start_frame && i <= f.end_frame) return true;
        }
        return false;
      }();
      EXPECT_EQ(faulty.truth.faulted(i, s), in_window);
      if (!in_window) { EXPECT_EQ(faulty.data[i].values[s], clean.data[i].values[s]) << i << "," << s; }
    }
  }
}

TEST(Synthetic, EachFaultKindFollowsItsDefinition) {
  const double t50 = make(400, 8).truth.true_values(50, kManifoldPressure);
  auto at = [](FaultKind kind, double p) {
    return make(400, 8, 0.005, {{kManifoldPressure, kind, p, 50, 60}});
  };
  EXPECT_EQ(at(FaultKind::stuck_at, 77.0).data[50].values[kManifoldPressure], 77.0);
  EXPECT_EQ(at(FaultKind::offset, 12.5).data[50].values[kManifoldPressure], t50 + 12.5);

  const auto drift = at(FaultKind::drift, 0.5);
  for (std::size_t i = 50; i <= 60; ++i) {
    EXPECT_EQ(drift.data[i].values[kManifoldPressure],
              drift.truth.true_values(i, kManifoldPressure) + 0.5 * static_cast<double>(i - 49));
  }
  EXPECT_EQ(at(FaultKind::dropout, 0.0).data[55].values[kManifoldPressure],
            default_catalog()[kManifoldPressure].physical_min);

  const auto burst = at(FaultKind::noise_burst, 30.0);
  double sq = 0.0;
  for (std::size_t i = 50; i <= 60; ++i) {
    const double d = burst.data[i].values[kManifoldPressure] - burst.truth.true_values(i, kManifoldPressure);
    sq += d * d;
  }
  EXPECT_GT(std::sqrt(sq / 11.0), 5.0);
}

TEST(Synthetic, StrongCorrelationSignsAgreeAcrossSeeds) {
  // Pairs whose long-run correlation is clearly non-zero must keep its sign in
  // every short run; pairs near zero carry no sign to preserve.
  const auto reference = values_of(make(50000, 1000).data);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = values_of(make(1000, seed).data);
    for (std::size_t a = 0; a < kSensorCount; ++a) {
      for (std::size_t b = a + 1; b < kSensorCount; ++b) {
        const double r = pearson(reference.column(a), reference.column(b));
        if (std::abs(r) < 0.3) continue;
        const double c = pearson(m.column(a), m.column(b));
        EXPECT_GT(r * c, 0.0) << "sensors " << a << "," << b << " seed " << seed;
      }
    }
  }
}

TEST(Synthetic, RejectsUnknownSensorAndBadWindows) {
  ScenarioConfig c;
  c.n_frames = 100;
  c.faults = {{kSensorCount, FaultKind::offset, 1.0, 0, 5}};
  try {
    generate(default_catalog(), c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_sensor);
  }
  c.faults = {{0, FaultKind::offset, 1.0, 50, 100}};
  EXPECT_THROW(generate(default_catalog(), c), Error);
  c.faults = {{0, FaultKind::offset, 1.0, 60, 50}};
  EXPECT_THROW(generate(default_catalog(), c), Error);
}

TEST(Synthetic, ConfigNamesSensorsAndFaultParameters) {
  const auto doc = nlohmann::json::parse(R"({
    "n_frames": 300, "seed": 4, "noise_scale": 0.01,
    "faults": [
      {"sensor": "engine_speed", "kind": "stuck-at", "value": 900, "start_frame": 10, "end_frame": 20},
      {"sensor": 9, "kind": "drift", "rate": 0.01, "start_frame": 100, "end_frame": 299}
    ]})");
  const auto c = scenario_from_json(doc, default_catalog());
  EXPECT_EQ(c.n_frames, 300u);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.noise_scale, 0.01);
  ASSERT_EQ(c.faults.size(), 2u);
  EXPECT_EQ(c.faults[0], (FaultSpec{kEngineSpeed, FaultKind::stuck_at, 900.0, 10, 20}));
  EXPECT_EQ(c.faults[1], (FaultSpec{kBatteryVoltage, FaultKind::drift, 0.01, 100, 299}));

  auto bad = doc;
  bad["faults"][0]["sensor"] = "exhaust_colour";
  try {
    scenario_from_json(bad, default_catalog());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_sensor);
  }
  bad = doc;
  bad["faults"][0]["kind"] = "melted";
  EXPECT_THROW(scenario_from_json(bad, default_catalog()), Error);
}

TEST(Synthetic, TruthFileRoundTrips) {
  const auto s = make(200, 6, 0.005, {{kSpeed, FaultKind::offset, 40.0, 20, 30}});
  std::stringstream buf;
  write_truth(buf, s.data, s.truth);
  const auto back = read_truth(buf, s.data.catalog());
  EXPECT_EQ(back.true_values, s.truth.true_values);
  EXPECT_EQ(back.fault_flags, s.truth.fault_flags);

  std::stringstream wrong("timestamp_ms,a,b\n");
  EXPECT_THROW(read_truth(wrong, s.data.catalog()), Error);
}

TEST(Benchmark, ExactFlagsScorePerfectly) {
  const auto s = make(100, 2, 0.005, {{kSpeed, FaultKind::stuck_at, 0.0, 40, 49}});
  std::vector<MonitorReport> reports;
  for (std::size_t i = 0; i < 100; ++i) {
    reports.push_back(s.truth.faulted(i, kSpeed) ? flagged_report(kSensorCount, {kSpeed})
                                                 : flagged_report(kSensorCount, {}));
  }
  const auto b = benchmark_report(reports, s.truth);
  EXPECT_EQ(b.sensors[kSpeed].precision, 1.0);
  EXPECT_EQ(b.sensors[kSpeed].recall, 1.0);
  EXPECT_EQ(b.sensors[kSpeed].fault_windows, 1u);
  EXPECT_EQ(b.sensors[kSpeed].windows_detected, 1u);
  EXPECT_EQ(b.sensors[kSpeed].mean_detection_latency, 0.0);
  EXPECT_EQ(b.recall, 1.0);
  EXPECT_EQ(b.false_defective, 0u);
  EXPECT_EQ(b.clean_frames, 90u);
}

TEST(Benchmark, SilentDetectorOnCleanScenario) {
  const auto s = make(50, 2);
  const std::vector<MonitorReport> reports(50, flagged_report(kSensorCount, {}));
  const auto b = benchmark_report(reports, s.truth);
  for (const auto& sb : b.sensors) {
    EXPECT_EQ(sb.precision, 1.0);
    EXPECT_FALSE(sb.recall.has_value());
    EXPECT_FALSE(sb.mean_detection_latency.has_value());
  }
  EXPECT_FALSE(b.recall.has_value());
  EXPECT_EQ(b.false_defective_rate, 0.0);
  EXPECT_EQ(b.clean_entries, 50u * kSensorCount);
}

TEST(Benchmark, HandScoredConfusionMatrix) {
  // Ten frames, one sensor: frames 0-8 faulted; the detector misses frame 8
  // and flags the clean frame 9. tp 8, fn 1, fp 1 -> 8/9 both ways.
  std::vector<std::pair<std::size_t, std::size_t>> faulted;
  for (std::size_t i = 0; i < 9; ++i) faulted.emplace_back(i, 0);
  const auto truth = truth_with_flags(10, 1, faulted);
  std::vector<MonitorReport> reports;
  for (std::size_t i = 0; i < 10; ++i) reports.push_back(flagged_report(1, i == 8 ? std::vector<std::size_t>{} : std::vector<std::size_t>{0}));
  const auto b = benchmark_report(reports, truth);
  const auto& sb = b.sensors[0];
  EXPECT_EQ(sb.true_positives, 8u);
  EXPECT_EQ(sb.false_positives, 1u);
  EXPECT_EQ(sb.false_negatives, 1u);
  EXPECT_EQ(sb.true_negatives, 0u);
  EXPECT_DOUBLE_EQ(sb.precision, 8.0 / 9.0);
  EXPECT_DOUBLE_EQ(*sb.recall, 8.0 / 9.0);
  EXPECT_EQ(b.clean_frames, 1u);
  EXPECT_EQ(b.false_defective, 1u);
  EXPECT_EQ(b.false_defective_rate, 1.0);
}

TEST(Benchmark, LatencyAndSubstitutionError) {
  // Two windows: [2,5] first flagged at 4 (latency 2); [8,9] first flagged at 8
  // (latency 0). Substitutions are 1.5 against true values 0.
  auto truth = truth_with_flags(10, 1, {{2, 0}, {3, 0}, {4, 0}, {5, 0}, {8, 0}, {9, 0}});
  std::vector<MonitorReport> reports;
  for (std::size_t i = 0; i < 10; ++i) {
    const bool flag = i == 4 || i == 5 || i == 8;
    reports.push_back(flagged_report(1, flag ? std::vector<std::size_t>{0} : std::vector<std::size_t>{}, 1.5));
  }
  const auto b = benchmark_report(reports, truth);
  const auto& sb = b.sensors[0];
  EXPECT_EQ(sb.fault_windows, 2u);
  EXPECT_EQ(sb.windows_detected, 2u);
  EXPECT_EQ(sb.mean_detection_latency, 1.0);
  EXPECT_EQ(sb.substitutions_scored, 3u);
  EXPECT_EQ(sb.substitution_mae, 1.5);
}

TEST(Benchmark, RejectsMisalignedInputs) {
  const auto truth = truth_with_flags(10, 2, {});
  const std::vector<MonitorReport> short_run(9, flagged_report(2, {}));
  try {
    benchmark_report(short_run, truth);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::length_mismatch);
  }
  const std::vector<MonitorReport> narrow(10, flagged_report(1, {}));
  EXPECT_THROW(benchmark_report(narrow, truth), Error);
}
