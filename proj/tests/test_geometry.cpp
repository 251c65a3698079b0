#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "uwnerf/geometry.hpp"
#include "uwnerf/image.hpp"

using namespace uwnerf;
using namespace uwnerf::geometry;
using Eigen::Vector3d;

namespace {

CameraIntrinsics test_intrinsics() {
  CameraIntrinsics k;
  k.fx = 50.0;
  k.fy = 55.0;
  k.cx = 32.0;
  k.cy = 24.0;
  k.width = 64;
  k.height = 48;
  return k;
}

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vector3d eye(u(rng), u(rng), 3.0 + u(rng));
  const Vector3d target(u(rng), u(rng), u(rng));
  return Pose::look_at(eye, target, {0, 0, 1});
}

}  // namespace

TEST_CASE("intrinsics validation") {
  CHECK_NOTHROW(test_intrinsics().validate());
  CameraIntrinsics bad = test_intrinsics();
  bad.fx = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = test_intrinsics();
  bad.cx = bad.width;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = test_intrinsics();
  bad.height = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("look_at produces a valid right-handed pose facing the target") {
  const Vector3d eye(1.0, -2.0, 3.0);
  const Vector3d target(0.5, 0.5, 0.0);
  const Pose pose = Pose::look_at(eye, target, {0, 0, 1});
  CHECK_NOTHROW(pose.validate());

  const Eigen::Matrix3d r = pose.rotation();
  CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pose.translation() == eye);

  const Vector3d forward = r.col(2);
  const Vector3d to_target = (target - eye).normalized();
  CHECK((forward - to_target).norm() < 1e-12);
}

TEST_CASE("pose validation rejects non-rigid transforms") {
  Pose scaled;
  scaled.camera_to_world.topLeftCorner<3, 3>() *= 1.01;
  CHECK_THROWS_AS(scaled.validate(), std::invalid_argument);

  Pose mirrored;
  mirrored.camera_to_world(0, 0) = -1.0;  // det = -1
  CHECK_THROWS_AS(mirrored.validate(), std::invalid_argument);

  Pose bad_bottom;
  bad_bottom.camera_to_world(3, 0) = 0.5;
  CHECK_THROWS_AS(bad_bottom.validate(), std::invalid_argument);
}

TEST_CASE("pose inverse composes to identity") {
  std::mt19937_64 rng(3);
  const Pose pose = random_pose(rng);
  const Eigen::Matrix4d prod = pose.camera_to_world * pose.inverse().camera_to_world;
  CHECK((prod - Eigen::Matrix4d::Identity()).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("principal-point ray is the camera forward axis") {
  const CameraIntrinsics k = test_intrinsics();
  const Ray ray = pixel_ray(k, Pose{}, k.cx, k.cy, 0.1, 10.0);
  CHECK((ray.direction - Vector3d(0, 0, 1)).norm() < 1e-15);
  CHECK(ray.origin == Vector3d::Zero());
  CHECK(ray.t_near == 0.1);
  CHECK(ray.t_far == 10.0);
}

TEST_CASE("one-focal-length offset gives a 45 degree ray") {
  CameraIntrinsics k = test_intrinsics();
  k.width = 128;  // keep cx + fx inside the image
  const Ray ray = pixel_ray(k, Pose{}, k.cx + k.fx, k.cy, 0.1, 10.0);
  const Vector3d expected = Vector3d(1, 0, 1).normalized();
  CHECK((ray.direction - expected).norm() < 1e-15);
}

TEST_CASE("ray origin equals the pose translation") {
  Pose pose;
  pose.camera_to_world.topRightCorner<3, 1>() = Vector3d(4, -5, 6);
  const CameraIntrinsics k = test_intrinsics();
  const Ray ray = pixel_ray(k, pose, 10.0, 12.0, 0.0, 1.0);
  CHECK(ray.origin == Vector3d(4, -5, 6));
  CHECK(ray.direction.norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("out-of-bounds pixels are rejected") {
  const CameraIntrinsics k = test_intrinsics();
  CHECK_THROWS_AS(pixel_ray(k, Pose{}, -0.5, 10.0, 0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(pixel_ray(k, Pose{}, 10.0, k.height + 0.5, 0.1, 1.0),
                  std::invalid_argument);
  CHECK_NOTHROW(pixel_ray(k, Pose{}, 0.0, 0.0, 0.1, 1.0));
  CHECK_NOTHROW(pixel_ray(k, Pose{}, k.width, k.height, 0.1, 1.0));
}

TEST_CASE("project inverts pixel_ray under random poses") {
  std::mt19937_64 rng(7);
  const CameraIntrinsics k = test_intrinsics();
  std::uniform_real_distribution<double> px_u(0.0, k.width);
  std::uniform_real_distribution<double> py_u(0.0, k.height);
  std::uniform_real_distribution<double> t_u(0.5, 6.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose pose = random_pose(rng);
    const double px = px_u(rng), py = py_u(rng), t = t_u(rng);
    const Ray ray = pixel_ray(k, pose, px, py, 0.01, 10.0);
    double cam_z = 0;
    const Eigen::Vector2d back = project(k, pose, ray.at(t), &cam_z);
    CHECK(back.x() == doctest::Approx(px).epsilon(1e-9));
    CHECK(back.y() == doctest::Approx(py).epsilon(1e-9));
    CHECK(cam_z > 0);
  }
}

TEST_CASE("points behind the camera project with negative depth") {
  const CameraIntrinsics k = test_intrinsics();
  double cam_z = 0;
  project(k, Pose{}, Vector3d(0, 0, -2), &cam_z);
  CHECK(cam_z < 0);
}

TEST_CASE("backproject a single principal-point pixel") {
  CameraIntrinsics k = test_intrinsics();
  k.width = 1;
  k.height = 1;
  k.cx = 0.5;
  k.cy = 0.5;
  Image range(1, 1, 1);
  range.at(0, 0, 0) = 2.0;
  const PointCloud cloud = backproject(k, Pose{}, range);
  REQUIRE(cloud.points.size() == 1);
  CHECK((cloud.points[0] - Vector3d(0, 0, 2)).norm() < 1e-15);
  CHECK(cloud.skipped == 0);
}

TEST_CASE("backproject skips non-positive and non-finite ranges") {
  CameraIntrinsics k = test_intrinsics();
  k.width = 2;
  k.height = 2;
  k.cx = 1.0;
  k.cy = 1.0;
  Image range(2, 2, 1);
  range.at(0, 0, 0) = 1.0;
  range.at(1, 0, 0) = 0.0;
  range.at(0, 1, 0) = -2.0;
  range.at(1, 1, 0) = std::nan("");
  const PointCloud cloud = backproject(k, Pose{}, range);
  CHECK(cloud.points.size() == 1);
  CHECK(cloud.skipped == 3);

  Image all_bad(2, 2, 1, 0.0);
  const PointCloud empty_cloud = backproject(k, Pose{}, all_bad);
  CHECK(empty_cloud.points.empty());
  CHECK(empty_cloud.skipped == 4);
}

TEST_CASE("backproject returns exactly origin plus range times direction") {
  std::mt19937_64 rng(13);
  const CameraIntrinsics k = test_intrinsics();
  const Pose pose = random_pose(rng);
  Image range(k.width, k.height, 1);
  std::uniform_real_distribution<double> t_u(0.5, 5.0);
  for (double& v : range.data) v = t_u(rng);
  const PointCloud cloud = backproject(k, pose, range);
  REQUIRE(static_cast<int>(cloud.points.size()) == k.width * k.height);
  size_t i = 0;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x, ++i) {
      const Ray ray = pixel_ray(k, pose, x + 0.5, y + 0.5, 0.0, 10.0);
      CHECK((cloud.points[i] - ray.at(range.at(x, y, 0))).norm() == 0.0);
    }
  }
}

TEST_CASE("backprojection commutes with pose application") {
  std::mt19937_64 rng(17);
  CameraIntrinsics k = test_intrinsics();
  k.width = 8;
  k.height = 6;
  k.cx = 4.0;
  k.cy = 3.0;
  const Pose pose = random_pose(rng);
  Image range(k.width, k.height, 1);
  std::uniform_real_distribution<double> t_u(0.5, 3.0);
  for (double& v : range.data) v = t_u(rng);

  const PointCloud posed = backproject(k, pose, range);
  const PointCloud canonical = backproject(k, Pose{}, range);
  for (size_t i = 0; i < posed.points.size(); ++i) {
    const Vector3d mapped =
        pose.rotation() * canonical.points[i] + pose.translation();
    CHECK((posed.points[i] - mapped).norm() < 1e-12);
  }
}

TEST_CASE("backproject carries colors when provided") {
  CameraIntrinsics k = test_intrinsics();
  k.width = 2;
  k.height = 1;
  k.cx = 1.0;
  k.cy = 0.5;
  Image range(2, 1, 1, 1.0);
  Image colors(2, 1, 3);
  colors.set_rgb(0, 0, {1, 0, 0});
  colors.set_rgb(1, 0, {0, 1, 0});
  const PointCloud cloud = backproject(k, Pose{}, range, &colors);
  REQUIRE(cloud.colors.size() == 2);
  CHECK(cloud.colors[0] == Vector3d(1, 0, 0));
  CHECK(cloud.colors[1] == Vector3d(0, 1, 0));
}

TEST_CASE("backproject rejects mismatched dimensions") {
  const CameraIntrinsics k = test_intrinsics();
  Image range(k.width + 1, k.height, 1, 1.0);
  CHECK_THROWS_AS(backproject(k, Pose{}, range), std::invalid_argument);
}

TEST_CASE("cloud distance of identical clouds is zero") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 2, 3}, {-1, 0.5, 2}};
  const CloudDistance d = cloud_distance(cloud, cloud);
  CHECK(d.rmse_pred_to_truth == 0.0);
  CHECK(d.rmse_truth_to_pred == 0.0);
}

TEST_CASE("cloud distance matches a hand-computed 3-point instance") {
  PointCloud pred;
  pred.points = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}};
  PointCloud truth;
  truth.points = {{0, 0, 0}, {1.5, 0, 0}};
  // pred -> truth: 0, 0.5, sqrt(4) = 2 ; truth -> pred: 0, 0.5
  const CloudDistance d = cloud_distance(pred, truth);
  CHECK(d.rmse_pred_to_truth ==
        doctest::Approx(std::sqrt((0.0 + 0.25 + 4.0) / 3.0)).epsilon(1e-12));
  CHECK(d.rmse_truth_to_pred == doctest::Approx(std::sqrt(0.25 / 2.0)).epsilon(1e-12));
}

TEST_CASE("shifted dense plane distance is bounded by the shift") {
  PointCloud plane;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) plane.points.push_back({i * 0.05, j * 0.05, 0.0});
  }
  PointCloud shifted = plane;
  for (auto& p : shifted.points) p.x() += 0.1;
  const CloudDistance d = cloud_distance(shifted, plane);
  CHECK(d.rmse_pred_to_truth <= 0.1 + 1e-12);
  CHECK(d.rmse_truth_to_pred <= 0.1 + 1e-12);
  CHECK(d.rmse_pred_to_truth > 0.01);
}

TEST_CASE("cloud distance rejects empty clouds") {
  PointCloud empty, one;
  one.points = {{0, 0, 0}};
  CHECK_THROWS_AS(cloud_distance(empty, one), std::invalid_argument);
  CHECK_THROWS_AS(cloud_distance(one, empty), std::invalid_argument);
}

TEST_CASE("ply export writes a parseable vertex list") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 2, 3}};
  cloud.colors = {{1, 0, 0}, {0, 0.5, 1}};
  const std::string path =
      (std::filesystem::temp_directory_path() / "uwnerf_test_cloud.ply").string();
  save_ply(cloud, path);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "ply");
  int vertex_count = -1;
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "element") {
      ss >> word >> vertex_count;
    }
  }
  CHECK(vertex_count == 2);
  std::getline(in, line);
  std::istringstream first(line);
  double x, y, z;
  int r, g, b;
  first >> x >> y >> z >> r >> g >> b;
  CHECK(x == 0.0);
  CHECK(r == 255);
  CHECK(g == 0);
  std::filesystem::remove(path);
}
