#include "uwnerf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace uwnerf::geometry {

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("intrinsics: focal lengths must be > 0");
  if (width <= 0 || height <= 0) throw std::invalid_argument("intrinsics: image size must be positive");
  if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height)) {
    throw std::invalid_argument("intrinsics: principal point outside image");
  }
}

void Pose::validate() const {
  if (!camera_to_world.allFinite()) throw std::invalid_argument("pose: non-finite transform");
  Eigen::Matrix3d r = rotation();
  if (((r.transpose() * r) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("pose: rotation is not orthonormal");
  }
  if (std::abs(r.determinant() - 1.0) > 1e-9) {
    throw std::invalid_argument("pose: rotation determinant is not +1");
  }
  if ((camera_to_world.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("pose: bottom row must be [0 0 0 1]");
  }
}

Pose Pose::inverse() const {
  Pose out;
  Eigen::Matrix3d rt = rotation().transpose();
  out.camera_to_world.topLeftCorner<3, 3>() = rt;
  out.camera_to_world.topRightCorner<3, 1>() = -rt * translation();
  return out;
}

Pose Pose::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up_hint) {
  Eigen::Vector3d forward = (target - eye).normalized();
  // Image y points down, so the camera y axis is the negated up direction.
  Eigen::Vector3d down = -(up_hint - up_hint.dot(forward) * forward);
  if (down.norm() < 1e-12) throw std::invalid_argument("look_at: up_hint parallel to view axis");
  down.normalize();
  Eigen::Vector3d right = down.cross(forward);
  Pose pose;
  pose.camera_to_world.topLeftCorner<3, 3>() << right, down, forward;
  pose.camera_to_world.topRightCorner<3, 1>() = eye;
  pose.validate();
  return pose;
}

Ray pixel_ray(const CameraIntrinsics& intrinsics, const Pose& pose, double px,
              double py, double t_near, double t_far) {
  intrinsics.validate();
  if (!(px >= 0 && px <= intrinsics.width && py >= 0 && py <= intrinsics.height)) {
    throw std::invalid_argument("pixel_ray: pixel outside image bounds");
  }
  if (!(t_near >= 0 && t_near < t_far)) {
    throw std::invalid_argument("pixel_ray: need 0 <= t_near < t_far");
  }
  Eigen::Vector3d dir_cam((px - intrinsics.cx) / intrinsics.fx,
                          (py - intrinsics.cy) / intrinsics.fy, 1.0);
  Ray ray;
  ray.origin = pose.translation();
  ray.direction = (pose.rotation() * dir_cam).normalized();
  ray.t_near = t_near;
  ray.t_far = t_far;
  return ray;
}

Eigen::Vector2d project(const CameraIntrinsics& intrinsics, const Pose& pose,
                        const Eigen::Vector3d& world_point, double* cam_z) {
  Eigen::Vector3d p_cam =
      pose.rotation().transpose() * (world_point - pose.translation());
  if (cam_z) *cam_z = p_cam.z();
  return {intrinsics.fx * p_cam.x() / p_cam.z() + intrinsics.cx,
          intrinsics.fy * p_cam.y() / p_cam.z() + intrinsics.cy};
}

PointCloud backproject(const CameraIntrinsics& intrinsics, const Pose& pose,
                       const Image& range_map, const Image* colors) {
  intrinsics.validate();
  pose.validate();
  if (range_map.channels != 1 || range_map.width != intrinsics.width ||
      range_map.height != intrinsics.height) {
    throw std::invalid_argument("backproject: range map does not match intrinsics");
  }
  if (colors && !(colors->width == range_map.width && colors->height == range_map.height &&
                  colors->channels == 3)) {
    throw std::invalid_argument("backproject: color image does not match range map");
  }
  PointCloud cloud;
  cloud.points.reserve(range_map.pixel_count());
  for (int y = 0; y < range_map.height; ++y) {
    for (int x = 0; x < range_map.width; ++x) {
      double range = range_map.at(x, y, 0);
      if (!std::isfinite(range) || range <= 0) {
        ++cloud.skipped;
        continue;
      }
      Ray ray = pixel_ray(intrinsics, pose, x + 0.5, y + 0.5, 0.0,
                          std::max(range * 2, 1.0));
      cloud.points.push_back(ray.at(range));
      if (colors) cloud.colors.push_back(colors->rgb(x, y));
    }
  }
  return cloud;
}

namespace {

double rmse_nearest(const std::vector<Eigen::Vector3d>& from,
                    const std::vector<Eigen::Vector3d>& to) {
  double sum_sq = 0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) {
      best = std::min(best, (p - q).squaredNorm());
    }
    sum_sq += best;
  }
  return std::sqrt(sum_sq / static_cast<double>(from.size()));
}

}  // namespace

CloudDistance cloud_distance(const PointCloud& pred, const PointCloud& truth) {
  if (pred.points.empty() || truth.points.empty()) {
    throw std::invalid_argument("cloud_distance: empty point cloud");
  }
  return {rmse_nearest(pred.points, truth.points),
          rmse_nearest(truth.points, pred.points)};
}

void save_ply(const PointCloud& cloud, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_ply: cannot open " + path);
  f << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
    << "\nproperty float x\nproperty float y\nproperty float z\n"
       "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    Eigen::Vector3d c = i < cloud.colors.size() ? cloud.colors[i] : Eigen::Vector3d::Ones();
    f << static_cast<float>(cloud.points[i].x()) << " "
      << static_cast<float>(cloud.points[i].y()) << " "
      << static_cast<float>(cloud.points[i].z());
    for (int k = 0; k < 3; ++k) {
      f << " " << std::lround(std::clamp(c[k], 0.0, 1.0) * 255.0);
    }
    f << "\n";
  }
  if (!f) throw std::runtime_error("save_ply: write failed for " + path);
}

}  // namespace uwnerf::geometry
