#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/matrix.hpp"
#include "ecuhealth/random.hpp"
#include "ecuhealth/text.hpp"

namespace ecuhealth {

inline constexpr double kTestFraction = 0.33;
inline constexpr double kValidationFraction = 0.25;
inline constexpr std::size_t kMinSplitFrames = 10;

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// test = round(0.33 n); validation = round(0.25 (n - test)); train = rest.
inline SplitSizes split_sizes(std::size_t n) {
  SplitSizes s;
  s.test = static_cast<std::size_t>(std::llround(kTestFraction * static_cast<double>(n)));
  s.validation = static_cast<std::size_t>(
      std::llround(kValidationFraction * static_cast<double>(n - s.test)));
  s.train = n - s.test - s.validation;
  return s;
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded uniform partition of 0..n-1. Each part is returned in ascending
/// order so that timestamp order survives the split.
inline SplitIndices split_indices(std::size_t n, std::uint64_t seed) {
  if (n < kMinSplitFrames) {
    throw Error(Errc::too_few_frames, "split needs at least " + std::to_string(kMinSplitFrames) +
                                          " frames, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5017));
  rng.shuffle(std::span(order));
  const auto sizes = split_sizes(n);
  SplitIndices out;
  const auto test_end = order.begin() + static_cast<std::ptrdiff_t>(sizes.test);
  const auto val_end = test_end + static_cast<std::ptrdiff_t>(sizes.validation);
  out.test.assign(order.begin(), test_end);
  out.validation.assign(test_end, val_end);
  out.train.assign(val_end, order.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

inline Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out(data.catalog());
  for (auto i : indices) out.push_back(data[i]);
  return out;
}

inline SplitDataset split(const Dataset& data, std::uint64_t seed) {
  const auto idx = split_indices(data.size(), seed);
  return {subset(data, idx.train), subset(data, idx.validation), subset(data, idx.test)};
}

struct CleansingReport {
  std::size_t rows_in = 0;
  std::size_t rows_dropped_nonfinite = 0;
  std::size_t rows_dropped_out_of_range = 0;
  std::size_t rows_out = 0;

  friend bool operator==(const CleansingReport&, const CleansingReport&) = default;
};

struct CleanseResult {
  Dataset data;
  CleansingReport report;
};

/// Drops frames holding any non-finite value (counted as non-finite even if
/// another value is also out of range) or any value outside the physical
/// range. Surviving frames are copied unchanged.
inline CleanseResult cleanse(const Dataset& data) {
  const auto& catalog = data.catalog();
  CleanseResult out{Dataset(catalog), {}};
  out.report.rows_in = data.size();
  for (const auto& frame : data.frames()) {
    bool nonfinite = false;
    bool out_of_range = false;
    for (std::size_t s = 0; s < frame.values.size(); ++s) {
      const double v = frame.values[s];
      if (!std::isfinite(v)) {
        nonfinite = true;
        break;
      }
      if (v < catalog[s].physical_min || v > catalog[s].physical_max) out_of_range = true;
    }
    if (nonfinite) {
      ++out.report.rows_dropped_nonfinite;
    } else if (out_of_range) {
      ++out.report.rows_dropped_out_of_range;
    } else {
      out.data.push_back(frame);
    }
  }
  out.report.rows_out = out.data.size();
  return out;
}

/// Per-sensor min/max fitted on training frames.
struct NormalizationParams {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t size() const noexcept { return min.size(); }

  double normalize(double x, std::size_t sensor) const {
    const double lo = min[sensor];
    const double hi = max[sensor];
    if (!(hi > lo)) return 0.0;
    return (x - lo) / (hi - lo);
  }

  double denormalize(double x, std::size_t sensor) const {
    const double lo = min[sensor];
    const double hi = max[sensor];
    if (!(hi > lo)) return lo;
    return lo + x * (hi - lo);
  }

  std::vector<double> normalize(std::span<const double> values) const {
    if (values.size() != size()) {
      throw Error(Errc::dimension_mismatch, "frame has " + std::to_string(values.size()) +
                                                " values, normalizer has " + std::to_string(size()));
    }
    std::vector<double> out(values.size());
    for (std::size_t s = 0; s < values.size(); ++s) out[s] = normalize(values[s], s);
    return out;
  }

  /// Hex hash of the fitted ranges.
  std::string fingerprint() const {
    return text::hex64(text::fnv1a(text::encode_reals(min) + "/" + text::encode_reals(max)));
  }

  friend bool operator==(const NormalizationParams&, const NormalizationParams&) = default;
};

inline NormalizationParams fit_normalizer(const Dataset& train) {
  if (train.empty()) throw Error(Errc::empty_dataset, "cannot fit a normalizer on no frames");
  const std::size_t n = train.catalog().size();
  NormalizationParams p{std::vector<double>(train[0].values), std::vector<double>(train[0].values)};
  for (const auto& f : train.frames()) {
    for (std::size_t s = 0; s < n; ++s) {
      p.min[s] = std::min(p.min[s], f.values[s]);
      p.max[s] = std::max(p.max[s], f.values[s]);
    }
  }
  return p;
}

inline double normalize(double x, std::size_t sensor, const NormalizationParams& params) {
  return params.normalize(x, sensor);
}

inline double denormalize(double x, std::size_t sensor, const NormalizationParams& params) {
  return params.denormalize(x, sensor);
}

inline std::vector<double> normalize(const SensorFrame& frame, const NormalizationParams& params) {
  return params.normalize(frame.values);
}

/// Model-ready matrix: one normalized row per frame. Values outside [0, 1]
/// are kept as they are.
inline Matrix normalize(const Dataset& data, const NormalizationParams& params) {
  Matrix out(data.size(), params.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& v = data[i].values;
    if (v.size() != params.size()) {
      throw Error(Errc::dimension_mismatch, "dataset width does not match normalizer");
    }
    for (std::size_t s = 0; s < v.size(); ++s) out(i, s) = params.normalize(v[s], s);
  }
  return out;
}

}  // namespace ecuhealth
