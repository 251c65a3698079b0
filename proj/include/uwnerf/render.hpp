#pragma once

#include <Eigen/Core>
#include <functional>
#include <random>
#include <vector>

#include "uwnerf/geometry.hpp"

namespace uwnerf::render {

struct FieldSample {
  double sigma = 0;                                  // density, 1/m, >= 0
  Eigen::Vector3d color = Eigen::Vector3d::Zero();   // emitted radiance
};

// Queryable volumetric scene: (position, view direction) -> (sigma, color).
// Implementations must be safe to query concurrently.
class RadianceField {
 public:
  virtual ~RadianceField() = default;
  virtual FieldSample query(const Eigen::Vector3d& position,
                            const Eigen::Vector3d& direction) const = 0;
};

// Field defined by a callable; handy for analytic scenes.
class LambdaField : public RadianceField {
 public:
  using Fn = std::function<FieldSample(const Eigen::Vector3d&, const Eigen::Vector3d&)>;
  explicit LambdaField(Fn fn) : fn_(std::move(fn)) {}
  FieldSample query(const Eigen::Vector3d& p, const Eigen::Vector3d& d) const override {
    return fn_(p, d);
  }

 private:
  Fn fn_;
};

// Dense voxel grid with trilinear interpolation of density and color;
// zero density outside the bounds.
class VoxelField : public RadianceField {
 public:
  VoxelField(const Eigen::Vector3d& bounds_min, const Eigen::Vector3d& bounds_max,
             int nx, int ny, int nz);

  double& sigma_at(int ix, int iy, int iz);
  Eigen::Vector3d& color_at(int ix, int iy, int iz);
  FieldSample query(const Eigen::Vector3d& p, const Eigen::Vector3d& d) const override;

 private:
  Eigen::Vector3d lo_, hi_;
  int nx_, ny_, nz_;
  std::vector<double> sigma_;
  std::vector<Eigen::Vector3d> color_;
  size_t idx(int ix, int iy, int iz) const {
    return (static_cast<size_t>(iz) * ny_ + iy) * nx_ + ix;
  }
};

// Per-ray quadrature state: K intervals from K+1 strictly increasing
// boundaries, with the field sampled at interval midpoints.
struct SampleSet {
  std::vector<double> boundaries;                  // size K+1
  std::vector<double> midpoints;                   // size K
  std::vector<double> sigma;                       // size K
  std::vector<Eigen::Vector3d> colors;             // size K
  std::vector<double> transmittance;               // T_k at interval start, size K
  std::vector<double> weights;                     // T_k * (1 - exp(-sigma_k dt_k))

  int interval_count() const { return static_cast<int>(midpoints.size()); }
};

struct RayRender {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();  // accumulated C(r)
  double depth = 0;                                 // expected termination range
  double opacity = 0;                               // sum of weights, in [0,1]
  SampleSet samples;
};

// count+1 boundaries covering [t_near, t_far]: endpoints fixed, each interior
// boundary jittered within half a stratum of its uniform position. jitter = 0
// gives the exact uniform partition.
std::vector<double> stratified_samples(const geometry::Ray& ray, int count,
                                       std::mt19937_64& rng, double jitter = 1.0);

// Inverse-CDF draws from the piecewise-constant density proportional to the
// coarse interval weights (uniform fallback when all weights vanish), merged
// with the coarse boundaries. Stratified u; rng = nullptr centers each stratum
// for deterministic evaluation-time sampling.
std::vector<double> importance_samples(const SampleSet& coarse, int count,
                                       std::mt19937_64* rng);

RayRender render_ray(const RadianceField& field, const std::vector<double>& boundaries,
                     const geometry::Ray& ray);

}  // namespace uwnerf::render
