#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "ecuhealth/autoencoder.hpp"
#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/matrix.hpp"

namespace ecuhealth {

/// E[i][s] = |x[i][s] - reconstruction(x[i])[s]| on normalized data.
inline Matrix residuals(const AutoencoderModel& model, const Matrix& data) {
  Matrix out = reconstruct(model, data);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t s = 0; s < data.cols(); ++s) out(r, s) = std::abs(data(r, s) - out(r, s));
  }
  return out;
}

struct ResidualStats {
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;

  friend bool operator==(const ResidualStats&, const ResidualStats&) = default;
};

/// Per-sensor statistics of validation residuals.
struct ResidualProfile {
  std::vector<ResidualStats> sensors;

  std::size_t size() const noexcept { return sensors.size(); }
  const ResidualStats& operator[](std::size_t s) const { return sensors.at(s); }

  friend bool operator==(const ResidualProfile&, const ResidualProfile&) = default;
};

/// Sample mean and (n-1) standard deviation of each residual column.
inline ResidualProfile fit_profile(const Matrix& residual_matrix) {
  const std::size_t n = residual_matrix.rows();
  if (n < 2) {
    throw Error(Errc::too_few_samples, "residual profile needs at least 2 frames, got " + std::to_string(n));
  }
  ResidualProfile profile;
  profile.sensors.resize(residual_matrix.cols());
  for (std::size_t s = 0; s < residual_matrix.cols(); ++s) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += residual_matrix(r, s);
    const double mu = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = residual_matrix(r, s) - mu;
      ss += d * d;
    }
    profile.sensors[s] = {mu, std::sqrt(ss / static_cast<double>(n - 1)), n};
  }
  return profile;
}

/// |E - mu| / sigma; with sigma = 0 the distance is 0 on an exact match and
/// infinite otherwise. Distances within 1e-12 (relative) of a whole number
/// are snapped to it, so decimal inputs that sit exactly on a band edge,
/// such as E = 0.15 with mu = 0.1 and sigma = 0.05, land on the edge rather
/// than one rounding error below it.
inline double z_distance(double residual, double mu, double sigma) {
  const double d = std::abs(residual - mu);
  if (!(sigma > 0.0)) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  const double z = d / sigma;
  const double whole = std::round(z);
  return std::abs(z - whole) <= 1e-12 * std::max(1.0, whole) ? whole : z;
}

/// Five-band health class of a residual. Bands are two-sided in
/// z = |E - mu| / sigma with lower-inclusive boundaries: [0,1) healthy,
/// [1,2) almost healthy, [2,3) normal, [3,4) almost defective, [4,inf)
/// defective.
inline HealthIndex classify(double residual, double mu, double sigma) {
  if (residual < 0.0) throw Error(Errc::negative_residual, "residual must be non-negative");
  if (!(sigma >= 0.0)) throw Error(Errc::invalid_argument, "sigma must be non-negative");
  const double z = z_distance(residual, mu, sigma);
  if (z < 1.0) return HealthIndex::healthy;
  if (z < 2.0) return HealthIndex::almost_healthy;
  if (z < 3.0) return HealthIndex::normal;
  if (z < 4.0) return HealthIndex::almost_defective;
  return HealthIndex::defective;
}

inline HealthIndex classify(double residual, const ResidualStats& stats) {
  return classify(residual, stats.mu, stats.sigma);
}

}  // namespace ecuhealth
