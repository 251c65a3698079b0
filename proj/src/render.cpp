#include "uwnerf/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwnerf::render {

VoxelField::VoxelField(const Eigen::Vector3d& bounds_min, const Eigen::Vector3d& bounds_max,
                       int nx, int ny, int nz)
    : lo_(bounds_min), hi_(bounds_max), nx_(nx), ny_(ny), nz_(nz) {
  if (nx < 2 || ny < 2 || nz < 2) {
    throw std::invalid_argument("VoxelField: need at least 2 nodes per axis");
  }
  if (!((hi_ - lo_).array() > 0).all()) {
    throw std::invalid_argument("VoxelField: bounds_max must exceed bounds_min");
  }
  sigma_.assign(static_cast<size_t>(nx) * ny * nz, 0.0);
  color_.assign(sigma_.size(), Eigen::Vector3d::Zero());
}

double& VoxelField::sigma_at(int ix, int iy, int iz) { return sigma_[idx(ix, iy, iz)]; }
Eigen::Vector3d& VoxelField::color_at(int ix, int iy, int iz) { return color_[idx(ix, iy, iz)]; }

FieldSample VoxelField::query(const Eigen::Vector3d& p, const Eigen::Vector3d&) const {
  FieldSample out;
  if ((p.array() < lo_.array()).any() || (p.array() > hi_.array()).any()) return out;
  const Eigen::Vector3d f = (p - lo_).array() / (hi_ - lo_).array();
  const double gx = f.x() * (nx_ - 1), gy = f.y() * (ny_ - 1), gz = f.z() * (nz_ - 1);
  const int ix = std::min(static_cast<int>(gx), nx_ - 2);
  const int iy = std::min(static_cast<int>(gy), ny_ - 2);
  const int iz = std::min(static_cast<int>(gz), nz_ - 2);
  const double tx = gx - ix, ty = gy - iy, tz = gz - iz;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
        const size_t i = idx(ix + dx, iy + dy, iz + dz);
        out.sigma += w * sigma_[i];
        out.color += w * color_[i];
      }
    }
  }
  return out;
}

std::vector<double> stratified_samples(const geometry::Ray& ray, int count,
                                       std::mt19937_64& rng, double jitter) {
  if (count < 1) throw std::invalid_argument("stratified_samples: count must be >= 1");
  if (!(ray.t_far > ray.t_near)) {
    throw std::invalid_argument("stratified_samples: t_far must exceed t_near");
  }
  if (!(jitter >= 0.0 && jitter <= 1.0)) {
    throw std::invalid_argument("stratified_samples: jitter must lie in [0, 1]");
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double dt = (ray.t_far - ray.t_near) / count;
  std::vector<double> b(static_cast<size_t>(count) + 1);
  b.front() = ray.t_near;
  b.back() = ray.t_far;
  for (int i = 1; i < count; ++i) {
    const double u = uni(rng);
    b[i] = ray.t_near + (i + jitter * (u - 0.5)) * dt;
  }
  return b;
}

std::vector<double> importance_samples(const SampleSet& coarse, int count,
                                       std::mt19937_64* rng) {
  const int k = static_cast<int>(coarse.weights.size());
  if (k < 1 || coarse.boundaries.size() != static_cast<size_t>(k) + 1) {
    throw std::invalid_argument("importance_samples: coarse sample set is empty");
  }
  if (count < 0) throw std::invalid_argument("importance_samples: count must be >= 0");
  std::vector<double> merged = coarse.boundaries;
  if (count > 0) {
    double total = 0;
    for (double w : coarse.weights) total += w;
    std::vector<double> cdf(static_cast<size_t>(k) + 1, 0.0);
    if (total > 1e-300) {
      for (int i = 0; i < k; ++i) cdf[i + 1] = cdf[i] + coarse.weights[i] / total;
    } else {
      // Nothing absorbed along the ray; fall back to the uniform density.
      const double span = coarse.boundaries.back() - coarse.boundaries.front();
      for (int i = 0; i < k; ++i) {
        cdf[i + 1] = cdf[i] + (coarse.boundaries[i + 1] - coarse.boundaries[i]) / span;
      }
    }
    cdf.back() = 1.0;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    merged.reserve(merged.size() + count);
    for (int i = 0; i < count; ++i) {
      const double frac = rng ? uni(*rng) : 0.5;
      const double u = std::min((i + frac) / count, std::nextafter(1.0, 0.0));
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const int cell = std::clamp(static_cast<int>(it - cdf.begin()) - 1, 0, k - 1);
      const double mass = cdf[cell + 1] - cdf[cell];
      const double local = mass > 0 ? (u - cdf[cell]) / mass : 0.5;
      merged.push_back(coarse.boundaries[cell] +
                       local * (coarse.boundaries[cell + 1] - coarse.boundaries[cell]));
    }
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  }
  return merged;
}

RayRender render_ray(const RadianceField& field, const std::vector<double>& boundaries,
                     const geometry::Ray& ray) {
  if (boundaries.size() < 2) {
    throw std::invalid_argument("render_ray: need at least 2 boundaries");
  }
  for (size_t i = 1; i < boundaries.size(); ++i) {
    if (!(boundaries[i] > boundaries[i - 1])) {
      throw std::invalid_argument("render_ray: boundaries must be strictly increasing");
    }
  }
  const int k = static_cast<int>(boundaries.size()) - 1;
  RayRender out;
  SampleSet& s = out.samples;
  s.boundaries = boundaries;
  s.midpoints.resize(k);
  s.sigma.resize(k);
  s.colors.resize(k);
  s.transmittance.resize(k);
  s.weights.resize(k);

  double log_t = 0;  // log of transmittance reaching the current interval
  for (int i = 0; i < k; ++i) {
    const double tm = 0.5 * (boundaries[i] + boundaries[i + 1]);
    const double dt = boundaries[i + 1] - boundaries[i];
    const FieldSample fs = field.query(ray.at(tm), ray.direction);
    if (!(fs.sigma >= 0) || !std::isfinite(fs.sigma)) {
      throw std::domain_error("render_ray: field returned invalid density");
    }
    const double trans = std::exp(log_t);
    const double alpha = -std::expm1(-fs.sigma * dt);
    const double w = trans * alpha;
    s.midpoints[i] = tm;
    s.sigma[i] = fs.sigma;
    s.colors[i] = fs.color;
    s.transmittance[i] = trans;
    s.weights[i] = w;
    out.color += w * fs.color;
    out.depth += w * tm;
    out.opacity += w;
    log_t -= fs.sigma * dt;
  }
  return out;
}

}  // namespace uwnerf::render
