#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "uwnerf/geometry.hpp"
#include "uwnerf/image.hpp"
#include "uwnerf/imgform.hpp"
#include "uwnerf/metrics.hpp"

namespace uwnerf::synth {

struct SceneConfig {
  int width = 64;
  int height = 64;
  int views = 8;
  Eigen::Vector3d beta = Eigen::Vector3d(0.4, 0.2, 0.1);
  Eigen::Vector3d veiling = Eigen::Vector3d(0.1, 0.15, 0.3);
  double t_near = 0.05;
  double t_far = 8.0;
  double camera_height = 3.2;
  double focal_scale = 0.9;  // fx = fy = focal_scale * width
  std::uint64_t seed = 0;

  void validate() const;
};

struct BoardPatch {
  std::string name;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // world rect on the z = 0 plane
};

struct Hit {
  bool hit = false;
  double t = 0;                                      // range along the unit ray
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d albedo = Eigen::Vector3d::Zero();
};

// Analytic flat-shaded scene: textured ground plane carrying a six-patch
// colorboard, two axis-aligned boxes, one sphere. Exact ranges by
// construction; a surface point has the same color from every view.
class Scene {
 public:
  explicit Scene(const SceneConfig& config);
  Hit trace(const geometry::Ray& ray) const;
  const std::vector<BoardPatch>& board() const { return board_; }
  Eigen::Vector3d plane_albedo(double x, double y) const;

 private:
  struct Box {
    Eigen::Vector3d lo, hi;
    Eigen::Vector3d face_albedo[6];  // -x +x -y +y -z +z
  };
  std::vector<BoardPatch> board_;
  std::vector<Box> boxes_;
  Eigen::Vector3d sphere_center_;
  double sphere_radius_ = 0;
};

struct FrameData {
  std::string stem;          // e.g. "frame_003"
  geometry::Pose pose;
  Image air;                 // in-air ground truth
  Image water;               // degraded observation
  Image histeq;              // per-channel equalized water image
  Image range;               // exact ray range per pixel, 1-channel
};

struct PosedDataset {
  geometry::CameraIntrinsics intrinsics;
  std::vector<FrameData> frames;
  double t_near = 0.05;
  double t_far = 8.0;
  bool has_air = false;
  bool has_histeq = false;
  bool has_depth = false;
  bool has_true_water = false;
  imgform::WaterParams true_water;
  std::vector<metrics::PixelTrack> tracks;
  metrics::ColorBoardSpec colorboard;
};

// Lawnmower camera sweep over the scene. Every pixel ray must strike geometry
// inside (t_near, t_far); otherwise the camera setup is rejected with an error.
PosedDataset generate(const SceneConfig& config);

geometry::Pose lawnmower_pose(const SceneConfig& config, int view_index);

// Directory layout written by save_dataset:
//   poses.json  water_params.json  tracks.json  colorboard.json
//   images/{air,water,histeq}/<stem>.png (+ lossless .pfm)  depth/<stem>.pfm
void save_dataset(const PosedDataset& dataset, const std::string& dir);
PosedDataset load_dataset(const std::string& dir);

}  // namespace uwnerf::synth
