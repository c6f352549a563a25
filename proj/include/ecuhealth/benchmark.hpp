#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/synthetic.hpp"

namespace ecuhealth::synthetic {

/// Detection scores of one sensor. A sensor counts as flagged in a frame
/// when the monitor classified it Defective.
struct SensorBenchmark {
  std::size_t sensor_id = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t true_negatives = 0;
  /// tp / (tp + fp); 1 by convention when nothing was flagged.
  double precision = 1.0;
  /// tp / (tp + fn); empty when the sensor was never faulted.
  std::optional<double> recall;
  /// Contiguous fault windows and how many of them were flagged at least once.
  std::size_t fault_windows = 0;
  std::size_t windows_detected = 0;
  /// Mean frames from window start to first flag, over detected windows.
  std::optional<double> mean_detection_latency;
  /// Mean |substituted - true| in physical units over faulted frames that
  /// carried a substitution.
  std::optional<double> substitution_mae;
  std::size_t substitutions_scored = 0;
};

struct BenchmarkReport {
  std::vector<SensorBenchmark> sensors;
  std::size_t faulted_entries = 0;
  std::size_t detected_entries = 0;
  /// Over every faulted (frame, sensor) entry; empty without faults.
  std::optional<double> recall;
  /// Frames in which no sensor is faulted, and Defective classifications in
  /// them.
  std::size_t clean_frames = 0;
  std::size_t clean_entries = 0;
  std::size_t false_defective = 0;
  /// false_defective / clean_entries; 0 when there are no clean frames.
  double false_defective_rate = 0.0;
};

/// Scores Defective classifications against the injected fault flags and
/// substitutions against the true values.
inline BenchmarkReport benchmark_report(std::span<const MonitorReport> reports, const GroundTruth& truth) {
  const std::size_t n = truth.rows();
  const std::size_t width = truth.true_values.cols();
  if (reports.size() != n) {
    throw Error(Errc::length_mismatch, std::to_string(reports.size()) + " reports for " + std::to_string(n) +
                                           " ground-truth frames");
  }
  if (truth.fault_flags.size() != n * width) {
    throw Error(Errc::length_mismatch, "fault flags do not cover the true values");
  }
  for (const auto& r : reports) {
    if (r.sensors.size() != width) {
      throw Error(Errc::length_mismatch, "report covers " + std::to_string(r.sensors.size()) +
                                             " sensors, ground truth " + std::to_string(width));
    }
  }

  BenchmarkReport out;
  out.sensors.resize(width);
  for (std::size_t s = 0; s < width; ++s) {
    auto& b = out.sensors[s];
    b.sensor_id = s;
    double abs_error = 0.0;
    double latency_sum = 0.0;
    bool in_window = false;
    bool window_hit = false;
    std::size_t window_start = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& h = reports[i].sensors[s];
      const bool flagged = h.health == HealthIndex::defective;
      const bool faulted = truth.faulted(i, s);
      if (faulted) {
        if (!in_window) {
          in_window = true;
          window_hit = false;
          window_start = i;
          ++b.fault_windows;
        }
        if (flagged) {
          ++b.true_positives;
          if (!window_hit) {
            window_hit = true;
            ++b.windows_detected;
            latency_sum += static_cast<double>(i - window_start);
          }
        } else {
          ++b.false_negatives;
        }
        if (h.substituted_value) {
          abs_error += std::abs(*h.substituted_value - truth.true_values(i, s));
          ++b.substitutions_scored;
        }
      } else {
        in_window = false;
        flagged ? ++b.false_positives : ++b.true_negatives;
      }
    }
    const std::size_t flagged_total = b.true_positives + b.false_positives;
    if (flagged_total > 0) b.precision = static_cast<double>(b.true_positives) / static_cast<double>(flagged_total);
    const std::size_t faulted_total = b.true_positives + b.false_negatives;
    if (faulted_total > 0) b.recall = static_cast<double>(b.true_positives) / static_cast<double>(faulted_total);
    if (b.windows_detected > 0) b.mean_detection_latency = latency_sum / static_cast<double>(b.windows_detected);
    if (b.substitutions_scored > 0) b.substitution_mae = abs_error / static_cast<double>(b.substitutions_scored);
    out.faulted_entries += faulted_total;
    out.detected_entries += b.true_positives;
  }
  if (out.faulted_entries > 0) {
    out.recall = static_cast<double>(out.detected_entries) / static_cast<double>(out.faulted_entries);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!truth.frame_clean(i)) continue;
    ++out.clean_frames;
    for (const auto& h : reports[i].sensors) {
      ++out.clean_entries;
      if (h.health == HealthIndex::defective) ++out.false_defective;
    }
  }
  if (out.clean_entries > 0) {
    out.false_defective_rate = static_cast<double>(out.false_defective) / static_cast<double>(out.clean_entries);
  }
  return out;
}

}  // namespace ecuhealth::synthetic
