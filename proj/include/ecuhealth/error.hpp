#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecuhealth {

enum class Errc {
  invalid_argument,
  too_few_frames,
  empty_dataset,
  dimension_mismatch,
  empty_batch,
  diverged_loss,
  constant_target,
  too_few_samples,
  negative_residual,
  invalid_k,
  empty_samples,
  structural_violation,
  unknown_sensor,
  length_mismatch,
  parse_error,
  fingerprint_mismatch,
  unsupported_version,
  io_error,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::too_few_frames: return "TooFewFrames";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::empty_batch: return "EmptyBatch";
    case Errc::diverged_loss: return "DivergedLoss";
    case Errc::constant_target: return "ConstantTarget";
    case Errc::too_few_samples: return "TooFewSamples";
    case Errc::negative_residual: return "NegativeResidual";
    case Errc::invalid_k: return "InvalidK";
    case Errc::empty_samples: return "EmptySamples";
    case Errc::structural_violation: return "StructuralViolation";
    case Errc::unknown_sensor: return "UnknownSensor";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::parse_error: return "ParseError";
    case Errc::fingerprint_mismatch: return "FingerprintMismatch";
    case Errc::unsupported_version: return "UnsupportedVersion";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error kind. what() is prefixed with
/// the kind name so messages surfaced to users always name the failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  Errc code() const noexcept { return code_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace ecuhealth
