#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/io.hpp"
#include "ecuhealth/matrix.hpp"
#include "ecuhealth/random.hpp"
#include "ecuhealth/text.hpp"

namespace ecuhealth::synthetic {

enum class FaultKind { stuck_at, offset, drift, noise_burst, dropout };

inline std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::stuck_at: return "stuck-at";
    case FaultKind::offset: return "offset";
    case FaultKind::drift: return "drift";
    case FaultKind::noise_burst: return "noise-burst";
    case FaultKind::dropout: return "dropout";
  }
  return "unknown";
}

inline FaultKind parse_fault_kind(std::string_view s) {
  for (auto k : {FaultKind::stuck_at, FaultKind::offset, FaultKind::drift, FaultKind::noise_burst,
                 FaultKind::dropout}) {
    if (to_string(k) == s) return k;
  }
  throw Error(Errc::parse_error, "unknown fault kind '" + std::string(s) + "'");
}

/// One injected fault. `parameter` is the stuck value, offset delta, drift
/// rate per frame, or noise-burst standard deviation, all in raw physical
/// units; dropout ignores it and reads physical_min.
struct FaultSpec {
  std::size_t sensor_id = 0;
  FaultKind kind = FaultKind::stuck_at;
  double parameter = 0.0;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;

  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

struct ScenarioConfig {
  std::size_t n_frames = 1000;
  std::uint64_t seed = 0;
  /// Gaussian noise standard deviation as a fraction of each continuous
  /// sensor's physical span.
  double noise_scale = 0.005;
  std::int64_t start_timestamp_ms = 0;
  std::int64_t period_ms = 1000;
  std::vector<FaultSpec> faults;
};

/// Pre-fault values and per-entry fault flags, aligned with the frames.
struct GroundTruth {
  Matrix true_values;
  std::vector<std::uint8_t> fault_flags;

  std::size_t rows() const noexcept { return true_values.rows(); }
  bool faulted(std::size_t frame, std::size_t sensor) const {
    return fault_flags[frame * true_values.cols() + sensor] != 0;
  }
  bool frame_clean(std::size_t frame) const {
    for (std::size_t s = 0; s < true_values.cols(); ++s) {
      if (faulted(frame, s)) return false;
    }
    return true;
  }
};

struct Scenario {
  Dataset data;
  GroundTruth truth;
};

/// Channel layout the generator writes; matches default_catalog() order.
enum Channel : std::size_t {
  kManifoldAirTemperature = 0,
  kManifoldPressure,
  kStepperRotationRate,
  kEngineSpeed,
  kThrottlePositionVoltage,
  kFuelInjectionTime,
  kThrottlePosition,
  kEngineWaterTemperature,
  kCoilChargingTime,
  kBatteryVoltage,
  kVehicleCondition,
  kUpstreamOxygenVoltage,
  kDownstreamOxygenVoltage,
  kSpeed,
  kMotorLoadPercent,
  kCanisterPercent,
  kFanStatus,
  kAdvanceAngle,
  kMove,
  kStrike,
};

/// Hidden vehicle state. Continuous latents are mean-reverting random walks
/// on [0, 1]; regimes are two-state Markov chains.
struct LatentState {
  double demand = 0.45;      // driver pedal demand
  double cruise = 0.5;       // road speed, lags demand
  double thermal = 0.75;     // coolant heat state
  double ambient = 0.5;      // outside air
  double electrical = 0.5;   // alternator/battery state
  double lambda_phase = 0.0; // closed-loop mixture oscillation
  double purge = 0.5;        // canister purge duty
  bool moving = true;
  bool throttle_open = true;
  bool fan = false;
  bool knock = false;

  void step(Rng& rng) {
    auto revert = [&](double& x, double rate, double target, double vol) {
      x = std::clamp(x + rate * (target - x) + vol * rng.normal(), 0.0, 1.0);
    };
    revert(demand, 0.08, 0.45, 0.07);
    revert(cruise, 0.03, 0.15 + 0.75 * demand, 0.01);
    revert(thermal, 0.02, 0.75, 0.03);
    revert(ambient, 0.02, 0.5, 0.03);
    revert(electrical, 0.05, 0.5, 0.05);
    revert(purge, 0.05, 0.5, 0.07);
    lambda_phase = std::fmod(lambda_phase + 0.9 + 0.3 * rng.normal(), 2.0 * std::numbers::pi);

    moving = moving ? !rng.bernoulli(1.0 / 60.0) : rng.bernoulli(1.0 / 15.0);
    if (!moving) {
      throttle_open = false;
    } else {
      throttle_open = throttle_open ? !rng.bernoulli(1.0 / 25.0) : rng.bernoulli(1.0 / 6.0);
    }
    fan = fan ? !rng.bernoulli(1.0 / 15.0) : rng.bernoulli(0.005 + 0.05 * thermal * thermal);
    const bool knock_prone = throttle_open && demand > 0.6;
    if (!knock_prone) {
      knock = false;
    } else {
      knock = knock ? !rng.bernoulli(0.25) : rng.bernoulli(0.08 * (demand - 0.6) / 0.4 + 0.03);
    }
  }
};

/// Noise-free sensor readings as fixed functions of the latent state.
inline std::array<double, kSensorCount> sensor_readings(const LatentState& z) {
  std::array<double, kSensorCount> v{};
  const double open = z.throttle_open ? 1.0 : 0.0;
  const double moving = z.moving ? 1.0 : 0.0;
  const double fan = z.fan ? 1.0 : 0.0;
  const double cold = 1.0 - z.thermal;

  const double tp = z.throttle_open ? 8.0 + 87.0 * z.demand : 2.0;
  const double speed = z.moving ? 10.0 + 110.0 * z.cruise : 0.0;
  const double rpm = 850.0 + 250.0 * cold + 60.0 * fan + open * 1500.0 * z.demand + 28.0 * speed;
  const double map = 30.0 + open * 40.0 * std::pow(z.demand, 0.8) + 0.007 * (rpm - 850.0);
  const double water = 70.0 + 30.0 * z.thermal;
  const double ambient = -5.0 + 40.0 * z.ambient;
  const double battery = 12.4 + 1.8 * (1.0 - std::exp(-(rpm - 700.0) / 900.0)) +
                         0.15 * (z.electrical - 0.5) - 0.12 * fan;
  const bool fuel_cut = z.moving && !z.throttle_open;

  v[kThrottlePosition] = tp;
  v[kThrottlePositionVoltage] = 0.45 + 0.04 * tp;
  v[kSpeed] = speed;
  v[kEngineSpeed] = rpm;
  v[kManifoldPressure] = map;
  v[kMotorLoadPercent] = 100.0 * (map - 20.0) / 85.0 * (0.9 + 0.1 * rpm / 6000.0);
  v[kFuelInjectionTime] = 1.4 + 0.10 * (map - 30.0) * (1.0 + 0.3 * cold) + 0.0012 * (rpm - 850.0);
  v[kEngineWaterTemperature] = water;
  v[kManifoldAirTemperature] = ambient + 0.2 * (water - ambient) - 0.03 * speed;
  v[kStepperRotationRate] = 30.0 + 70.0 * cold + 35.0 * fan + 25.0 * (1.0 - open);
  v[kBatteryVoltage] = battery;
  v[kCoilChargingTime] = 1.0 + 40.0 / battery + 0.0006 * rpm;
  v[kVehicleCondition] = open;
  v[kUpstreamOxygenVoltage] = fuel_cut ? 0.06 : 0.45 + 0.38 * std::sin(z.lambda_phase);
  v[kDownstreamOxygenVoltage] =
      fuel_cut ? 0.2 : 0.62 + 0.08 * std::sin(z.lambda_phase - 1.2) + 0.06 * z.thermal;
  v[kCanisterPercent] = 90.0 * (0.4 + 0.3 * z.purge) * z.thermal;
  v[kFanStatus] = fan;
  v[kAdvanceAngle] = 8.0 + 0.0045 * rpm - 0.18 * (map - 30.0) - 9.0 * (z.knock ? 1.0 : 0.0) + 4.0 * cold;
  v[kMove] = moving;
  v[kStrike] = z.knock ? 1.0 : 0.0;
  return v;
}

inline void validate(const ScenarioConfig& config, const SensorCatalog& catalog) {
  if (config.n_frames < 1) throw Error(Errc::invalid_argument, "scenario needs at least one frame");
  if (!(config.noise_scale >= 0.0) || !std::isfinite(config.noise_scale)) {
    throw Error(Errc::invalid_argument, "noise_scale must be finite and non-negative");
  }
  for (const auto& f : config.faults) {
    if (f.sensor_id >= catalog.size()) {
      throw Error(Errc::unknown_sensor, "fault targets sensor id " + std::to_string(f.sensor_id));
    }
    if (f.start_frame > f.end_frame || f.end_frame >= config.n_frames) {
      throw Error(Errc::invalid_argument, "fault window [" + std::to_string(f.start_frame) + ", " +
                                              std::to_string(f.end_frame) + "] does not fit " +
                                              std::to_string(config.n_frames) + " frames");
    }
    if (!std::isfinite(f.parameter)) throw Error(Errc::invalid_argument, "fault parameter must be finite");
  }
}

/// Generates clean correlated telemetry, then overwrites fault windows.
/// Ground truth keeps the pre-fault values; entries outside fault windows
/// are bit-identical to a fault-free run with the same seed.
inline Scenario generate(const SensorCatalog& catalog, const ScenarioConfig& config) {
  validate(config, catalog);
  constexpr std::size_t kBurnIn = 500;
  Rng latent_rng(derive_seed(config.seed, 0x1A7E));
  Rng noise_rng(derive_seed(config.seed, 0x7015E));
  LatentState state;
  for (std::size_t i = 0; i < kBurnIn; ++i) state.step(latent_rng);

  const std::size_t n = config.n_frames;
  const std::size_t width = catalog.size();
  Matrix values(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    state.step(latent_rng);
    const auto clean = sensor_readings(state);
    for (std::size_t s = 0; s < width; ++s) {
      const auto& spec = catalog[s];
      double v = clean[s];
      if (spec.kind == SensorKind::continuous) {
        v += config.noise_scale * (spec.physical_max - spec.physical_min) * noise_rng.normal();
      }
      values(i, s) = std::clamp(v, spec.physical_min, spec.physical_max);
    }
  }

  GroundTruth truth{values, std::vector<std::uint8_t>(n * width, 0)};
  for (std::size_t fi = 0; fi < config.faults.size(); ++fi) {
    const auto& f = config.faults[fi];
    Rng fault_rng(derive_seed(config.seed, 0xFA17, fi));
    for (std::size_t i = f.start_frame; i <= f.end_frame; ++i) {
      const double t = truth.true_values(i, f.sensor_id);
      double& out = values(i, f.sensor_id);
      switch (f.kind) {
        case FaultKind::stuck_at: out = f.parameter; break;
        case FaultKind::offset: out = t + f.parameter; break;
        case FaultKind::drift: out = t + f.parameter * static_cast<double>(i - f.start_frame + 1); break;
        case FaultKind::noise_burst: out = t + f.parameter * fault_rng.normal(); break;
        case FaultKind::dropout: out = catalog[f.sensor_id].physical_min; break;
      }
      truth.fault_flags[i * width + f.sensor_id] = 1;
    }
  }

  Scenario out{Dataset(catalog), std::move(truth)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = values.row(i);
    out.data.push_back({config.start_timestamp_ms + static_cast<std::int64_t>(i) * config.period_ms,
                        std::vector<double>(row.begin(), row.end())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration and ground-truth files

inline ScenarioConfig scenario_from_json(const nlohmann::json& doc, const SensorCatalog& catalog) {
  try {
    ScenarioConfig c;
    c.n_frames = doc.at("n_frames").get<std::size_t>();
    c.seed = doc.value("seed", std::uint64_t{0});
    c.noise_scale = doc.value("noise_scale", c.noise_scale);
    c.start_timestamp_ms = doc.value("start_timestamp_ms", c.start_timestamp_ms);
    c.period_ms = doc.value("period_ms", c.period_ms);
    for (const auto& f : doc.value("faults", nlohmann::json::array())) {
      FaultSpec spec;
      const auto& sensor = f.at("sensor");
      if (sensor.is_string()) {
        const auto id = catalog.index_of(sensor.get<std::string>());
        if (!id) throw Error(Errc::unknown_sensor, "'" + sensor.get<std::string>() + "'");
        spec.sensor_id = *id;
      } else {
        spec.sensor_id = sensor.get<std::size_t>();
      }
      spec.kind = parse_fault_kind(f.at("kind").get<std::string>());
      switch (spec.kind) {
        case FaultKind::stuck_at: spec.parameter = f.at("value").get<double>(); break;
        case FaultKind::offset: spec.parameter = f.at("delta").get<double>(); break;
        case FaultKind::drift: spec.parameter = f.at("rate").get<double>(); break;
        case FaultKind::noise_burst: spec.parameter = f.at("scale").get<double>(); break;
        case FaultKind::dropout: break;
      }
      spec.start_frame = f.at("start_frame").get<std::size_t>();
      spec.end_frame = f.at("end_frame").get<std::size_t>();
      c.faults.push_back(spec);
    }
    validate(c, catalog);
    return c;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, std::string("scenario config: ") + ex.what());
  }
}

inline std::string truth_header(const SensorCatalog& catalog) {
  std::string line(io::kTimestampColumn);
  for (const auto& s : catalog.sensors()) line += "," + s.name + "_fault";
  for (const auto& s : catalog.sensors()) line += "," + s.name + "_true";
  return line;
}

/// Ground-truth CSV: timestamp, 20 fault flags (0/1), 20 true values.
inline void write_truth(std::ostream& out, const Dataset& data, const GroundTruth& truth) {
  const auto& catalog = data.catalog();
  out << truth_header(catalog) << '\n';
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    out << data[i].timestamp_ms;
    for (std::size_t s = 0; s < catalog.size(); ++s) out << ',' << (truth.faulted(i, s) ? 1 : 0);
    for (std::size_t s = 0; s < catalog.size(); ++s) out << ',' << text::shortest(truth.true_values(i, s));
    out << '\n';
  }
}

inline GroundTruth read_truth(std::istream& in, const SensorCatalog& catalog) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != truth_header(catalog)) {
    throw Error(Errc::parse_error, "ground-truth header does not match catalog");
  }
  const std::size_t w = catalog.size();
  GroundTruth truth{Matrix(0, w), {}};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(text::trim(line), ',');
    if (fields.size() != 1 + 2 * w) {
      throw Error(Errc::parse_error, "ground truth line " + std::to_string(line_no) + " has " +
                                         std::to_string(fields.size()) + " columns");
    }
    std::vector<double> row(w);
    for (std::size_t s = 0; s < w; ++s) {
      const auto flag = text::parse_int(fields[1 + s]);
      const auto v = text::parse_real(fields[1 + w + s]);
      if (!flag || !v) throw Error(Errc::parse_error, "ground truth line " + std::to_string(line_no));
      truth.fault_flags.push_back(*flag != 0 ? 1 : 0);
      row[s] = *v;
    }
    truth.true_values.push_row(row);
  }
  return truth;
}

}  // namespace ecuhealth::synthetic
