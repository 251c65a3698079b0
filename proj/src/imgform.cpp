#include "uwnerf/imgform.hpp"

#include <cmath>
#include <stdexcept>

namespace uwnerf::imgform {

void WaterParams::validate() const {
  for (int c = 0; c < 3; ++c) {
    if (!std::isfinite(beta[c]) || beta[c] < 0) {
      throw std::invalid_argument("WaterParams: beta must be finite and >= 0");
    }
    if (!std::isfinite(veiling[c]) || veiling[c] < 0 || veiling[c] > 1) {
      throw std::invalid_argument("WaterParams: veiling must be in [0,1]");
    }
  }
}

static void check_range(double range) {
  if (!std::isfinite(range) || range < 0) {
    throw std::domain_error("range must be finite and >= 0");
  }
}

Eigen::Vector3d transmission(const WaterParams& params, double range) {
  params.validate();
  check_range(range);
  return (-params.beta * range).array().exp();
}

Eigen::Vector3d degrade(const Eigen::Vector3d& in_air, const WaterParams& params,
                        double range) {
  for (int c = 0; c < 3; ++c) {
    if (!std::isfinite(in_air[c]) || in_air[c] < -1e-9 || in_air[c] > 1 + 1e-9) {
      throw std::domain_error("degrade: in-air color must lie in [0,1]");
    }
  }
  Eigen::Vector3d t = transmission(params, range);
  return t.cwiseProduct(in_air) +
         (Eigen::Vector3d::Ones() - t).cwiseProduct(params.veiling);
}

Eigen::Vector3d restore(const Eigen::Vector3d& observed, const WaterParams& params,
                        double range, double t_floor) {
  if (!(t_floor > 0)) throw std::invalid_argument("restore: t_floor must be > 0");
  if (!observed.allFinite()) throw std::domain_error("restore: non-finite color");
  Eigen::Vector3d t = transmission(params, range);
  Eigen::Vector3d out;
  for (int c = 0; c < 3; ++c) {
    out[c] = (observed[c] - (1.0 - t[c]) * params.veiling[c]) /
             std::max(t[c], t_floor);
  }
  return out;
}

}  // namespace uwnerf::imgform
