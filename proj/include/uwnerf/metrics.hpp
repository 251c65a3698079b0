#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "uwnerf/image.hpp"

namespace uwnerf::metrics {

// PSNR value reported when the images are identical (MSE = 0).
inline constexpr double kPsnrCap = 120.0;

// Angle in degrees between the L2-normalized vectors, in [0, 180].
// Throws std::invalid_argument if either vector is (near) zero.
double angular_error_deg(const Eigen::Vector3d& measured, const Eigen::Vector3d& truth);

struct PatchRegion {
  int frame = 0;              // index into the evaluation image list
  int x0 = 0, y0 = 0;         // inclusive top-left
  int x1 = 0, y1 = 0;         // exclusive bottom-right
};

struct ColorPatch {
  std::string name;
  Eigen::Vector3d truth = Eigen::Vector3d::Zero();  // in-air reference RGB
  std::vector<PatchRegion> regions;
};

struct ColorBoardSpec {
  std::vector<ColorPatch> patches;
  void validate(int width, int height, int frame_count) const;
};

ColorBoardSpec load_colorboard(const std::string& path);
void save_colorboard(const ColorBoardSpec& spec, const std::string& path);

struct PatchAngle {
  std::string name;
  double mean_angle_deg = 0;  // averaged over the patch's regions
};

struct ColorBoardReport {
  std::vector<PatchAngle> patches;
  double mean_angle_deg = 0;  // mean over patches (Table-style psi-bar)
};

// Region colors are averaged first, then compared with the patch truth.
ColorBoardReport colorboard_report(const std::vector<Image>& images,
                                   const ColorBoardSpec& spec);

struct UiqmBreakdown {
  double uiqm = 0;
  double uicm = 0;
  double uism = 0;
  double uiconm = 0;
};

// UIQM = 0.282 UICM + 0.2953 UISM + 3.5753 UIConM. The component measures
// (alpha-trimmed colorfulness, Sobel/EME sharpness, log-AMEE contrast) follow
// the conventions documented next to their implementations.
UiqmBreakdown uiqm(const Image& image);

struct TrackObservation {
  int frame = 0;
  double x = 0, y = 0;  // pixel coordinates, (0,0) = top-left corner
};

struct PixelTrack {
  int id = 0;
  std::vector<TrackObservation> obs;  // length >= 2
};

std::vector<PixelTrack> load_tracks(const std::string& path);
void save_tracks(const std::vector<PixelTrack>& tracks, const std::string& path);

struct SceneConsistency {
  double scm_r = 0, scm_g = 0, scm_b = 0;
  double mean() const { return (scm_r + scm_g + scm_b) / 3.0; }
};

// Per channel: mean over tracks of the population standard deviation of the
// L2-normalized RGB sampled (bilinearly) along the track.
SceneConsistency scene_consistency(const std::vector<Image>& images,
                                   const std::vector<PixelTrack>& tracks);

// 10 log10(1 / MSE) for values in [0, 1]; identical images report kPsnrCap.
double psnr(const Image& pred, const Image& truth);

}  // namespace uwnerf::metrics
