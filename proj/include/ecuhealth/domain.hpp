#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecuhealth/error.hpp"
#include "ecuhealth/text.hpp"

namespace ecuhealth {

inline constexpr std::size_t kSensorCount = 20;

enum class SensorKind { continuous, discrete_state };

inline std::string_view to_string(SensorKind kind) {
  return kind == SensorKind::continuous ? "continuous" : "discrete-state";
}

inline SensorKind parse_sensor_kind(std::string_view s) {
  if (s == "continuous") return SensorKind::continuous;
  if (s == "discrete-state") return SensorKind::discrete_state;
  throw Error(Errc::parse_error, "unknown sensor kind '" + std::string(s) + "'");
}

struct SensorSpec {
  std::size_t id = 0;
  std::string name;
  std::string unit;
  double physical_min = 0.0;
  double physical_max = 1.0;
  SensorKind kind = SensorKind::continuous;
  /// Number of peer sensors the per-sensor forest regressor reads.
  std::size_t forest_features = 1;

  friend bool operator==(const SensorSpec&, const SensorSpec&) = default;
};

/// The ordered set of monitored channels. Construction enforces the catalog
/// invariants, so every SensorCatalog in circulation is well formed.
class SensorCatalog {
 public:
  explicit SensorCatalog(std::vector<SensorSpec> sensors) : sensors_(std::move(sensors)) {
    if (sensors_.size() != kSensorCount) {
      throw Error(Errc::invalid_argument, "catalog must list exactly " +
                                              std::to_string(kSensorCount) + " sensors, got " +
                                              std::to_string(sensors_.size()));
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < sensors_.size(); ++i) {
      const auto& s = sensors_[i];
      if (s.id != i) {
        throw Error(Errc::invalid_argument, "sensor '" + s.name + "' has id " +
                                                std::to_string(s.id) + ", expected " +
                                                std::to_string(i));
      }
      if (s.name.empty()) throw Error(Errc::invalid_argument, "sensor " + std::to_string(i) + " has no name");
      if (!names.insert(s.name).second) {
        throw Error(Errc::invalid_argument, "duplicate sensor name '" + s.name + "'");
      }
      if (!std::isfinite(s.physical_min) || !std::isfinite(s.physical_max) ||
          s.physical_min > s.physical_max ||
          (s.kind == SensorKind::continuous && !(s.physical_min < s.physical_max))) {
        throw Error(Errc::invalid_argument, "sensor '" + s.name + "' has an invalid physical range");
      }
      if (s.forest_features < 1 || s.forest_features > kSensorCount - 1) {
        throw Error(Errc::invalid_argument, "sensor '" + s.name + "' forest feature count must be in 1..19");
      }
    }
  }

  std::size_t size() const noexcept { return sensors_.size(); }
  const SensorSpec& operator[](std::size_t id) const { return sensors_.at(id); }
  std::span<const SensorSpec> sensors() const noexcept { return sensors_; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (const auto& s : sensors_) {
      if (s.name == name) return s.id;
    }
    return std::nullopt;
  }

  /// Hex FNV-1a hash of the canonical catalog text.
  std::string fingerprint() const {
    std::string canon;
    for (const auto& s : sensors_) {
      canon += std::to_string(s.id) + '|' + s.name + '|' + s.unit + '|' +
               text::digits17(s.physical_min) + '|' + text::digits17(s.physical_max) + '|' +
               std::string(to_string(s.kind)) + '|' + std::to_string(s.forest_features) + '\n';
    }
    return text::hex64(text::fnv1a(canon));
  }

  friend bool operator==(const SensorCatalog&, const SensorCatalog&) = default;

 private:
  std::vector<SensorSpec> sensors_;
};

/// The 20-channel catalog of the monitored ECU. Ranges are plausible bounds
/// for a small petrol passenger car; forest feature counts are the per-sensor
/// peer counts used by the substitution regressors.
inline SensorCatalog default_catalog() {
  using K = SensorKind;
  struct Row {
    const char* name;
    const char* unit;
    double lo, hi;
    K kind;
    std::size_t k;
  };
  static constexpr Row rows[kSensorCount] = {
      {"manifold_air_temperature", "degC", -40.0, 120.0, K::continuous, 19},
      {"manifold_pressure", "kPa", 10.0, 110.0, K::continuous, 6},
      {"stepper_rotation_rate", "steps", 0.0, 255.0, K::continuous, 3},
      {"engine_speed", "rpm", 0.0, 8000.0, K::continuous, 5},
      {"throttle_position_voltage", "V", 0.0, 5.0, K::continuous, 4},
      {"fuel_injection_time", "ms", 0.0, 25.0, K::continuous, 7},
      {"throttle_position", "%", 0.0, 100.0, K::continuous, 5},
      {"engine_water_temperature", "degC", -40.0, 130.0, K::continuous, 18},
      {"coil_charging_time", "ms", 0.0, 10.0, K::continuous, 2},
      {"battery_voltage", "V", 6.0, 16.0, K::continuous, 6},
      {"vehicle_condition", "state", 0.0, 1.0, K::discrete_state, 17},
      {"upstream_oxygen_voltage", "V", 0.0, 1.0, K::continuous, 17},
      {"downstream_oxygen_voltage", "V", 0.0, 1.0, K::continuous, 17},
      {"speed", "km/h", 0.0, 250.0, K::continuous, 15},
      {"motor_load_percent", "%", 0.0, 100.0, K::continuous, 9},
      {"canister_percent", "%", 0.0, 100.0, K::continuous, 2},
      {"fan_status", "state", 0.0, 1.0, K::discrete_state, 5},
      {"advance_angle", "deg", -20.0, 60.0, K::continuous, 3},
      {"move", "state", 0.0, 1.0, K::discrete_state, 1},
      {"strike", "state", 0.0, 1.0, K::discrete_state, 19},
  };
  std::vector<SensorSpec> specs;
  specs.reserve(kSensorCount);
  for (std::size_t i = 0; i < kSensorCount; ++i) {
    const auto& r = rows[i];
    specs.push_back({i, r.name, r.unit, r.lo, r.hi, r.kind, r.k});
  }
  return SensorCatalog(std::move(specs));
}

struct SensorFrame {
  std::int64_t timestamp_ms = 0;
  std::vector<double> values;

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

/// Frames sharing one catalog, in non-decreasing timestamp order. Values may
/// still be non-finite or out of range until cleansed.
class Dataset {
 public:
  explicit Dataset(SensorCatalog catalog) : catalog_(std::move(catalog)) {}

  Dataset(SensorCatalog catalog, std::vector<SensorFrame> frames)
      : catalog_(std::move(catalog)) {
    frames_.reserve(frames.size());
    for (auto& f : frames) push_back(std::move(f));
  }

  void push_back(SensorFrame frame) {
    if (frame.values.size() != catalog_.size()) {
      throw Error(Errc::dimension_mismatch, "frame at " + std::to_string(frame.timestamp_ms) +
                                                " has " + std::to_string(frame.values.size()) +
                                                " values, catalog has " +
                                                std::to_string(catalog_.size()));
    }
    if (!frames_.empty() && frame.timestamp_ms < frames_.back().timestamp_ms) {
      throw Error(Errc::invalid_argument, "timestamps must be non-decreasing (" +
                                              std::to_string(frame.timestamp_ms) + " after " +
                                              std::to_string(frames_.back().timestamp_ms) + ")");
    }
    frames_.push_back(std::move(frame));
  }

  const SensorCatalog& catalog() const noexcept { return catalog_; }
  std::span<const SensorFrame> frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.size(); }
  bool empty() const noexcept { return frames_.empty(); }
  const SensorFrame& operator[](std::size_t i) const { return frames_.at(i); }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  SensorCatalog catalog_;
  std::vector<SensorFrame> frames_;
};

struct SplitDataset {
  Dataset train;
  Dataset validation;
  Dataset test;
};

enum class HealthIndex { healthy = 0, almost_healthy, normal, almost_defective, defective };

inline constexpr HealthIndex kAllHealthIndices[] = {
    HealthIndex::healthy, HealthIndex::almost_healthy, HealthIndex::normal,
    HealthIndex::almost_defective, HealthIndex::defective};

inline std::string_view to_string(HealthIndex h) {
  switch (h) {
    case HealthIndex::healthy: return "healthy";
    case HealthIndex::almost_healthy: return "almost-healthy";
    case HealthIndex::normal: return "normal";
    case HealthIndex::almost_defective: return "almost-defective";
    case HealthIndex::defective: return "defective";
  }
  return "unknown";
}

inline std::optional<HealthIndex> parse_health_index(std::string_view s) {
  for (auto h : kAllHealthIndices) {
    if (to_string(h) == s) return h;
  }
  return std::nullopt;
}

struct SensorHealth {
  std::size_t sensor_id = 0;
  double raw_value = 0.0;
  /// Reconstruction in raw physical units.
  double reconstructed_value = 0.0;
  /// |normalized raw - normalized reconstruction|.
  double residual = 0.0;
  /// Distance of the residual from the profile mean, in standard deviations.
  double z_band = 0.0;
  HealthIndex health = HealthIndex::healthy;
  std::optional<double> substituted_value;

  friend bool operator==(const SensorHealth&, const SensorHealth&) = default;
};

struct Alert {
  std::size_t sensor_id = 0;
  HealthIndex health = HealthIndex::healthy;
  std::string message;

  friend bool operator==(const Alert&, const Alert&) = default;
};

struct MonitorReport {
  std::int64_t timestamp_ms = 0;
  std::vector<SensorHealth> sensors;
  std::vector<Alert> alerts;

  friend bool operator==(const MonitorReport&, const MonitorReport&) = default;
};

struct Violation {
  enum class Kind { length_mismatch, non_finite, out_of_range };
  Kind kind;
  std::optional<std::size_t> sensor_id;
  std::string message;
};

inline std::string_view to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::length_mismatch: return "length-mismatch";
    case Violation::Kind::non_finite: return "non-finite";
    case Violation::Kind::out_of_range: return "out-of-range";
  }
  return "unknown";
}

/// Lists every frame invariant the frame breaks. With check_range false only
/// structural problems (length, non-finite values) are reported.
inline std::vector<Violation> validate_frame(const SensorFrame& frame, const SensorCatalog& catalog,
                                             bool check_range = true) {
  std::vector<Violation> out;
  if (frame.values.size() != catalog.size()) {
    out.push_back({Violation::Kind::length_mismatch, std::nullopt,
                   "expected " + std::to_string(catalog.size()) + " values, got " +
                       std::to_string(frame.values.size())});
  }
  const std::size_t n = std::min(frame.values.size(), catalog.size());
  for (std::size_t s = 0; s < n; ++s) {
    const double v = frame.values[s];
    const auto& spec = catalog[s];
    if (!std::isfinite(v)) {
      out.push_back({Violation::Kind::non_finite, s, spec.name + " is not finite"});
    } else if (check_range && (v < spec.physical_min || v > spec.physical_max)) {
      out.push_back({Violation::Kind::out_of_range, s,
                     spec.name + " = " + text::shortest(v) + " outside [" +
                         text::shortest(spec.physical_min) + ", " +
                         text::shortest(spec.physical_max) + "]"});
    }
  }
  return out;
}

}  // namespace ecuhealth
