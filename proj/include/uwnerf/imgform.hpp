#pragma once

#include <Eigen/Core>

namespace uwnerf::imgform {

// Divisor floor for the restoration inverse; bounds amplification when the
// transmission collapses at extreme range.
inline constexpr double kDefaultTransmissionFloor = 1e-3;

// Per-channel water column parameters: attenuation beta [1/m] and veiling
// light A in [0,1].
struct WaterParams {
  Eigen::Vector3d beta = Eigen::Vector3d::Zero();
  Eigen::Vector3d veiling = Eigen::Vector3d::Zero();

  // Throws std::invalid_argument on non-finite beta, beta < 0 or A outside [0,1].
  void validate() const;
};

// t_c = exp(-beta_c * range). Range is Euclidean distance along the ray.
// Throws std::domain_error for negative or non-finite range.
Eigen::Vector3d transmission(const WaterParams& params, double range);

// Forward model: observed = t * in_air + (1 - t) * A.
Eigen::Vector3d degrade(const Eigen::Vector3d& in_air, const WaterParams& params,
                        double range);

// Inverse model: (observed - (1 - t) * A) / max(t, t_floor). Exact inverse of
// degrade whenever t >= t_floor. No clamping; callers clamp at image export.
Eigen::Vector3d restore(const Eigen::Vector3d& observed, const WaterParams& params,
                        double range, double t_floor = kDefaultTransmissionFloor);

}  // namespace uwnerf::imgform
