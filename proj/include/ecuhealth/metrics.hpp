#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "ecuhealth/error.hpp"

namespace ecuhealth {

inline void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::length_mismatch, std::to_string(a.size()) + " observations vs " +
                                           std::to_string(b.size()) + " predictions");
  }
}

inline double mean(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

/// Coefficient of determination 1 - SSE/SST against the observations' mean.
inline double r_squared(std::span<const double> observed, std::span<const double> predicted) {
  require_same_length(observed, predicted);
  if (observed.empty()) throw Error(Errc::empty_dataset, "R^2 of no observations");
  const double y_bar = mean(observed);
  double sse = 0.0;
  double sst = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = observed[i] - predicted[i];
    const double d = observed[i] - y_bar;
    sse += e * e;
    sst += d * d;
  }
  if (sst == 0.0) throw Error(Errc::constant_target, "observations have zero variance");
  return 1.0 - sse / sst;
}

inline double mean_absolute_error(std::span<const double> observed, std::span<const double> predicted) {
  require_same_length(observed, predicted);
  if (observed.empty()) throw Error(Errc::empty_dataset, "MAE of no observations");
  double sum = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) sum += std::abs(observed[i] - predicted[i]);
  return sum / static_cast<double>(observed.size());
}

/// Pearson correlation; 0 when either side is constant.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b);
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace ecuhealth
