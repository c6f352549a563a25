#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ecuhealth/autoencoder.hpp"
#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/forest.hpp"
#include "ecuhealth/preprocessing.hpp"
#include "ecuhealth/residual.hpp"
#include "ecuhealth/text.hpp"

namespace ecuhealth {

/// Fitted components of the runtime monitor. Immutable once assembled.
class MonitorPipeline {
 public:
  MonitorPipeline(SensorCatalog catalog, NormalizationParams normalizer, AutoencoderModel autoencoder,
                  ResidualProfile profile, ForestBank bank,
                  HealthIndex alert_threshold = HealthIndex::almost_defective)
      : catalog_(std::move(catalog)),
        normalizer_(std::move(normalizer)),
        autoencoder_(std::move(autoencoder)),
        profile_(std::move(profile)),
        bank_(std::move(bank)),
        alert_threshold_(alert_threshold) {
    const std::size_t n = catalog_.size();
    if (normalizer_.size() != n || normalizer_.max.size() != n) {
      throw Error(Errc::dimension_mismatch, "normalizer does not cover the catalog");
    }
    autoencoder_.validate();
    if (autoencoder_.input_dim() != n) {
      throw Error(Errc::dimension_mismatch, "autoencoder width does not match the catalog");
    }
    if (profile_.size() != n) throw Error(Errc::dimension_mismatch, "residual profile does not cover the catalog");
    bank_.validate(n);
  }

  const SensorCatalog& catalog() const noexcept { return catalog_; }
  const NormalizationParams& normalizer() const noexcept { return normalizer_; }
  const AutoencoderModel& autoencoder() const noexcept { return autoencoder_; }
  const ResidualProfile& profile() const noexcept { return profile_; }
  const ForestBank& bank() const noexcept { return bank_; }
  HealthIndex alert_threshold() const noexcept { return alert_threshold_; }

  MonitorPipeline with_alert_threshold(HealthIndex threshold) const {
    MonitorPipeline copy = *this;
    copy.alert_threshold_ = threshold;
    return copy;
  }

 private:
  SensorCatalog catalog_;
  NormalizationParams normalizer_;
  AutoencoderModel autoencoder_;
  ResidualProfile profile_;
  ForestBank bank_;
  HealthIndex alert_threshold_;
};

/// Thrown for frames that fail structural validation; carries every
/// violation found.
class FrameRejected : public Error {
 public:
  explicit FrameRejected(std::vector<Violation> violations)
      : Error(Errc::structural_violation, describe(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  static std::string describe(const std::vector<Violation>& vs) {
    std::string out;
    for (const auto& v : vs) {
      if (!out.empty()) out += "; ";
      out += v.message;
    }
    return out;
  }

  std::vector<Violation> violations_;
};

inline std::string alert_message(const SensorSpec& spec, HealthIndex health, double z,
                                 const std::optional<double>& substitute) {
  std::string msg = spec.name + " classified " + std::string(to_string(health)) + " (z=" +
                    text::shortest(z) + ")";
  if (substitute) msg += "; substituted with estimate " + text::shortest(*substitute) + " " + spec.unit;
  return msg;
}

/// Normalize, reconstruct, classify every sensor, substitute Defective
/// readings with their forest estimate, and raise alerts at or above the
/// pipeline's alert threshold. Out-of-range readings are accepted; only
/// length and non-finite violations reject the frame.
inline MonitorReport process_frame(const MonitorPipeline& pipeline, const SensorFrame& frame) {
  const auto& catalog = pipeline.catalog();
  auto violations = validate_frame(frame, catalog, /*check_range=*/false);
  if (!violations.empty()) throw FrameRejected(std::move(violations));

  const auto& norm = pipeline.normalizer();
  const auto x = norm.normalize(frame.values);
  const auto recon = forward(pipeline.autoencoder(), x);

  MonitorReport report;
  report.timestamp_ms = frame.timestamp_ms;
  report.sensors.reserve(catalog.size());
  for (std::size_t s = 0; s < catalog.size(); ++s) {
    SensorHealth h;
    h.sensor_id = s;
    h.raw_value = frame.values[s];
    h.reconstructed_value = norm.denormalize(recon[s], s);
    h.residual = std::abs(x[s] - recon[s]);
    const auto& stats = pipeline.profile()[s];
    h.z_band = z_distance(h.residual, stats.mu, stats.sigma);
    h.health = classify(h.residual, stats);
    if (h.health == HealthIndex::defective) {
      h.substituted_value = norm.denormalize(predict(pipeline.bank()[s], x), s);
    }
    if (h.health >= pipeline.alert_threshold()) {
      report.alerts.push_back(
          {s, h.health, alert_message(catalog[s], h.health, h.z_band, h.substituted_value)});
    }
    report.sensors.push_back(std::move(h));
  }
  return report;
}

/// Error record for a frame that could not be processed.
struct StreamError {
  /// Zero-based position of the item in the input stream.
  std::size_t sequence = 0;
  std::optional<std::int64_t> timestamp_ms;
  std::string message;

  friend bool operator==(const StreamError&, const StreamError&) = default;
};

using StreamItem = std::variant<SensorFrame, StreamError>;
using StreamRecord = std::variant<MonitorReport, StreamError>;

struct StreamSummary {
  std::size_t reports = 0;
  std::size_t errors = 0;
  std::size_t alerts = 0;
};

/// Maps process_frame over a frame source. `next()` returns the next item or
/// nullopt at end of stream; items that are already errors (e.g. unparsable
/// lines) and rejected frames become error records, and processing
/// continues. Records are emitted in input order.
template <class Source, class Sink>
StreamSummary process_stream(const MonitorPipeline& pipeline, Source&& next, Sink&& emit) {
  StreamSummary summary;
  std::size_t sequence = 0;
  while (std::optional<StreamItem> item = next()) {
    if (auto* err = std::get_if<StreamError>(&*item)) {
      err->sequence = sequence;
      emit(StreamRecord{std::move(*err)});
      ++summary.errors;
    } else {
      const auto& frame = std::get<SensorFrame>(*item);
      try {
        auto report = process_frame(pipeline, frame);
        summary.alerts += report.alerts.size();
        emit(StreamRecord{std::move(report)});
        ++summary.reports;
      } catch (const FrameRejected& e) {
        emit(StreamRecord{StreamError{sequence, frame.timestamp_ms, e.what()}});
        ++summary.errors;
      }
    }
    ++sequence;
  }
  return summary;
}

}  // namespace ecuhealth
