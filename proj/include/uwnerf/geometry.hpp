#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "uwnerf/image.hpp"

namespace uwnerf::geometry {

// Pinhole camera. Convention: right-handed camera frame, +z forward (view
// axis), image x right, image y down. Pixel (i, j) has its center at
// continuous coordinates (i + 0.5, j + 0.5).
struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const;
};

// Camera-to-world rigid transform.
struct Pose {
  Eigen::Matrix4d camera_to_world = Eigen::Matrix4d::Identity();

  Eigen::Matrix3d rotation() const { return camera_to_world.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return camera_to_world.topRightCorner<3, 1>(); }
  Pose inverse() const;

  // Camera at `eye` with +z toward `target`; image up approximates `up_hint`.
  static Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                      const Eigen::Vector3d& up_hint);

  // Throws std::invalid_argument unless the rotation is orthonormal with
  // det = +1 (both within 1e-9) and the matrix is a rigid transform.
  void validate() const;
};

struct Ray {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();  // unit length
  double t_near = 0, t_far = 1;

  Eigen::Vector3d at(double t) const { return origin + t * direction; }
};

// World-frame ray through continuous pixel coordinates (px, py). Throws
// std::invalid_argument for coordinates outside [0, width] x [0, height].
Ray pixel_ray(const CameraIntrinsics& intrinsics, const Pose& pose, double px,
              double py, double t_near, double t_far);

// Projects a world point; returns continuous pixel coordinates and writes the
// camera-frame forward depth (z) to cam_z if given. Points behind the camera
// yield negative cam_z.
Eigen::Vector2d project(const CameraIntrinsics& intrinsics, const Pose& pose,
                        const Eigen::Vector3d& world_point, double* cam_z = nullptr);

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> colors;  // optional; empty or same size as points
  size_t skipped = 0;                   // pixels dropped for non-finite/zero range
};

// Lifts a ray-range map to world points: origin + range * direction per pixel.
// Non-positive or non-finite ranges are skipped and counted.
PointCloud backproject(const CameraIntrinsics& intrinsics, const Pose& pose,
                       const Image& range_map, const Image* colors = nullptr);

struct CloudDistance {
  double rmse_pred_to_truth = 0;
  double rmse_truth_to_pred = 0;
};

// Exact nearest-neighbor RMSE in both directions (point-to-point).
// Throws std::invalid_argument if either cloud is empty.
CloudDistance cloud_distance(const PointCloud& pred, const PointCloud& truth);

// ASCII PLY with per-vertex RGB (colors default to white when absent).
void save_ply(const PointCloud& cloud, const std::string& path);

}  // namespace uwnerf::geometry
