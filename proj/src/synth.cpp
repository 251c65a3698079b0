#include "uwnerf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "uwnerf/restore.hpp"

namespace uwnerf::synth {
namespace fs = std::filesystem;

void SceneConfig::validate() const {
  if (width < 16 || height < 16) {
    throw std::invalid_argument("SceneConfig: image size must be at least 16x16");
  }
  if (views < 1) throw std::invalid_argument("SceneConfig: views must be >= 1");
  if (!(t_near > 0 && t_far > t_near)) {
    throw std::invalid_argument("SceneConfig: need 0 < t_near < t_far");
  }
  if (!(camera_height > 1.0)) {
    throw std::invalid_argument("SceneConfig: camera_height must exceed 1 m");
  }
  if (!(focal_scale > 0.2)) {
    throw std::invalid_argument("SceneConfig: focal_scale too small");
  }
  imgform::WaterParams wp{beta, veiling};
  wp.validate();
}

namespace {

Eigen::Vector3d clamp01(Eigen::Vector3d v) {
  return v.cwiseMax(0.0).cwiseMin(1.0);
}

constexpr double kBoardBorder = 0.08;
constexpr double kPatchSize = 0.5;
constexpr double kPatchGap = 0.1;

}  // namespace

Scene::Scene(const SceneConfig& config) {
  (void)config;
  const char* names[2][3] = {{"blue", "red", "magenta"}, {"green", "cyan", "yellow"}};
  const Eigen::Vector3d colors[2][3] = {
      {{0.10, 0.15, 0.80}, {0.80, 0.10, 0.10}, {0.75, 0.10, 0.70}},
      {{0.10, 0.70, 0.15}, {0.10, 0.70, 0.75}, {0.85, 0.80, 0.10}}};
  const double total_w = 3 * kPatchSize + 2 * kPatchGap;
  const double total_h = 2 * kPatchSize + kPatchGap;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) {
      BoardPatch p;
      p.name = names[r][c];
      p.color = colors[r][c];
      p.x0 = -total_w / 2 + c * (kPatchSize + kPatchGap);
      p.y0 = -total_h / 2 + r * (kPatchSize + kPatchGap);
      p.x1 = p.x0 + kPatchSize;
      p.y1 = p.y0 + kPatchSize;
      board_.push_back(p);
    }
  }

  Box a;
  a.lo = {-2.3, 0.9, 0.0};
  a.hi = {-1.4, 1.8, 0.65};
  a.face_albedo[0] = {0.70, 0.30, 0.30};
  a.face_albedo[1] = {0.80, 0.50, 0.20};
  a.face_albedo[2] = {0.60, 0.60, 0.25};
  a.face_albedo[3] = {0.25, 0.55, 0.80};
  a.face_albedo[4] = {0.20, 0.20, 0.20};
  a.face_albedo[5] = {0.85, 0.60, 0.15};
  boxes_.push_back(a);

  Box b;
  b.lo = {1.1, -2.1, 0.0};
  b.hi = {2.0, -1.2, 0.5};
  b.face_albedo[0] = {0.35, 0.65, 0.45};
  b.face_albedo[1] = {0.55, 0.35, 0.65};
  b.face_albedo[2] = {0.75, 0.70, 0.45};
  b.face_albedo[3] = {0.30, 0.45, 0.70};
  b.face_albedo[4] = {0.20, 0.20, 0.20};
  b.face_albedo[5] = {0.70, 0.25, 0.40};
  boxes_.push_back(b);

  sphere_center_ = {1.7, 1.5, 0.45};
  sphere_radius_ = 0.45;
}

Eigen::Vector3d Scene::plane_albedo(double x, double y) const {
  const double total_w = 3 * kPatchSize + 2 * kPatchGap;
  const double total_h = 2 * kPatchSize + kPatchGap;
  const double bx = total_w / 2 + kBoardBorder;
  const double by = total_h / 2 + kBoardBorder;
  if (x >= -bx && x <= bx && y >= -by && y <= by) {
    for (const auto& p : board_) {
      if (x >= p.x0 && x < p.x1 && y >= p.y0 && y < p.y1) return p.color;
    }
    return {0.12, 0.12, 0.12};
  }
  return clamp01({0.50 + 0.45 * std::sin(1.3 * x) * std::sin(0.9 * y),
                  0.50 + 0.42 * std::sin(0.8 * x + 1.0) * std::cos(1.1 * y),
                  0.50 + 0.40 * std::cos(0.7 * x) * std::sin(1.4 * y + 0.5)});
}

Hit Scene::trace(const geometry::Ray& ray) const {
  Hit best;
  best.t = std::numeric_limits<double>::infinity();
  const Eigen::Vector3d& o = ray.origin;
  const Eigen::Vector3d& d = ray.direction;

  if (d.z() < -1e-12) {
    const double t = -o.z() / d.z();
    if (t > 1e-9 && t < best.t) {
      best.hit = true;
      best.t = t;
      best.point = ray.at(t);
      best.albedo = plane_albedo(best.point.x(), best.point.y());
    }
  }

  for (const auto& box : boxes_) {
    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    int enter_face = -1;
    for (int axis = 0; axis < 3; ++axis) {
      if (std::abs(d[axis]) < 1e-15) {
        if (o[axis] < box.lo[axis] || o[axis] > box.hi[axis]) {
          t_enter = std::numeric_limits<double>::infinity();
          break;
        }
        continue;
      }
      double t0 = (box.lo[axis] - o[axis]) / d[axis];
      double t1 = (box.hi[axis] - o[axis]) / d[axis];
      int near_face = 2 * axis;       // lo side
      if (t0 > t1) {
        std::swap(t0, t1);
        near_face = 2 * axis + 1;     // hi side
      }
      if (t0 > t_enter) {
        t_enter = t0;
        enter_face = near_face;
      }
      t_exit = std::min(t_exit, t1);
    }
    if (t_enter <= t_exit && t_enter > 1e-9 && t_enter < best.t) {
      best.hit = true;
      best.t = t_enter;
      best.point = ray.at(t_enter);
      best.albedo = box.face_albedo[enter_face];
    }
  }

  const Eigen::Vector3d oc = o - sphere_center_;
  const double half_b = oc.dot(d);
  const double disc = half_b * half_b - (oc.squaredNorm() - sphere_radius_ * sphere_radius_);
  if (disc > 0) {
    const double sq = std::sqrt(disc);
    double t = -half_b - sq;
    if (t <= 1e-9) t = -half_b + sq;
    if (t > 1e-9 && t < best.t) {
      best.hit = true;
      best.t = t;
      best.point = ray.at(t);
      const Eigen::Vector3d n = (best.point - sphere_center_).normalized();
      best.albedo = clamp01({0.55 + 0.20 * n.x(), 0.40 + 0.20 * n.y(),
                             0.35 + 0.20 * n.z()});
    }
  }
  return best;
}

geometry::Pose lawnmower_pose(const SceneConfig& config, int view_index) {
  if (view_index < 0 || view_index >= config.views) {
    throw std::invalid_argument("lawnmower_pose: view index out of range");
  }
  const int rows = config.views > 1 ? 2 : 1;
  const int cols = (config.views + rows - 1) / rows;
  const int row = view_index / cols;
  int col = view_index % cols;
  if (row % 2 == 1) col = cols - 1 - col;  // reverse direction on the return leg
  const double x = cols > 1 ? -1.3 + 2.6 * col / (cols - 1) : 0.0;
  const double y = rows > 1 ? (row == 0 ? -0.9 : 0.9) : 0.0;
  const double z = config.camera_height + 0.1 * std::sin(0.8 * view_index);
  const Eigen::Vector3d eye(x, y, z);
  const Eigen::Vector3d target(0.55 * x, 0.55 * y, 0.0);
  return geometry::Pose::look_at(eye, target, Eigen::Vector3d::UnitY());
}

namespace {

std::vector<Eigen::Vector3d> track_candidates(const Scene& scene) {
  std::vector<Eigen::Vector3d> pts;
  const int grid = 6;
  for (int iy = 0; iy < grid; ++iy) {
    for (int ix = 0; ix < grid; ++ix) {
      const double x = -2.2 + 4.4 * ix / (grid - 1);
      const double y = -2.2 + 4.4 * iy / (grid - 1);
      pts.emplace_back(x, y, 0.0);
    }
  }
  pts.emplace_back(-1.85, 1.35, 0.65);  // box A top
  pts.emplace_back(-1.60, 1.10, 0.65);
  pts.emplace_back(-2.10, 1.60, 0.65);
  pts.emplace_back(1.55, -1.65, 0.5);   // box B top
  pts.emplace_back(1.30, -1.40, 0.5);
  pts.emplace_back(1.80, -1.90, 0.5);
  pts.emplace_back(1.7, 1.5, 0.90);     // sphere top
  (void)scene;
  return pts;
}

// True when the re-traced pixel ray lands back on the candidate point.
bool visible_at(const Scene& scene, const geometry::CameraIntrinsics& intr,
                const geometry::Pose& pose, const Eigen::Vector3d& point,
                double t_near, double t_far, Eigen::Vector2d* px_out) {
  double cam_z = 0;
  const Eigen::Vector2d px = geometry::project(intr, pose, point, &cam_z);
  if (cam_z <= 0) return false;
  if (px.x() < 1.0 || px.x() > intr.width - 1.0 || px.y() < 1.0 ||
      px.y() > intr.height - 1.0) {
    return false;
  }
  const geometry::Ray ray = geometry::pixel_ray(intr, pose, px.x(), px.y(), t_near, t_far);
  const Hit hit = scene.trace(ray);
  if (!hit.hit || (hit.point - point).norm() > 1e-7) return false;
  if (hit.t < t_near || hit.t > t_far) return false;
  *px_out = px;
  return true;
}

std::vector<metrics::PixelTrack> build_tracks(const Scene& scene,
                                              const geometry::CameraIntrinsics& intr,
                                              const std::vector<geometry::Pose>& poses,
                                              double t_near, double t_far) {
  std::vector<metrics::PixelTrack> tracks;
  int next_id = 0;
  for (const auto& point : track_candidates(scene)) {
    metrics::PixelTrack track;
    for (size_t f = 0; f < poses.size(); ++f) {
      Eigen::Vector2d px;
      if (visible_at(scene, intr, poses[f], point, t_near, t_far, &px)) {
        track.obs.push_back({static_cast<int>(f), px.x(), px.y()});
      }
    }
    if (track.obs.size() >= 2) {
      track.id = next_id++;
      tracks.push_back(std::move(track));
    }
  }
  return tracks;
}

// Pixel-aligned region inside the projected patch; every pixel center must
// re-trace onto the patch rectangle on the plane.
bool patch_region(const Scene& scene, const geometry::CameraIntrinsics& intr,
                  const geometry::Pose& pose, const BoardPatch& patch, int frame,
                  double t_near, double t_far, metrics::PatchRegion* out) {
  const double inset = 0.22 * kPatchSize;
  const double xs[2] = {patch.x0 + inset, patch.x1 - inset};
  const double ys[2] = {patch.y0 + inset, patch.y1 - inset};
  double min_x = 1e30, max_x = -1e30, min_y = 1e30, max_y = -1e30;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const Eigen::Vector3d corner(xs[i], ys[j], 0.0);
      double cam_z = 0;
      const Eigen::Vector2d px = geometry::project(intr, pose, corner, &cam_z);
      if (cam_z <= 0) return false;
      min_x = std::min(min_x, px.x());
      max_x = std::max(max_x, px.x());
      min_y = std::min(min_y, px.y());
      max_y = std::max(max_y, px.y());
    }
  }
  metrics::PatchRegion region;
  region.frame = frame;
  region.x0 = static_cast<int>(std::ceil(min_x));
  region.y0 = static_cast<int>(std::ceil(min_y));
  region.x1 = static_cast<int>(std::floor(max_x));
  region.y1 = static_cast<int>(std::floor(max_y));
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (region.x0 < 0 || region.y0 < 0 || region.x1 > intr.width ||
        region.y1 > intr.height || region.x1 - region.x0 < 2 ||
        region.y1 - region.y0 < 2) {
      return false;
    }
    bool ok = true;
    for (int y = region.y0; y < region.y1 && ok; ++y) {
      for (int x = region.x0; x < region.x1 && ok; ++x) {
        const geometry::Ray ray =
            geometry::pixel_ray(intr, pose, x + 0.5, y + 0.5, t_near, t_far);
        const Hit hit = scene.trace(ray);
        ok = hit.hit && std::abs(hit.point.z()) < 1e-9 &&
             hit.point.x() >= patch.x0 && hit.point.x() < patch.x1 &&
             hit.point.y() >= patch.y0 && hit.point.y() < patch.y1;
      }
    }
    if (ok) {
      *out = region;
      return true;
    }
    ++region.x0;
    ++region.y0;
    --region.x1;
    --region.y1;
  }
  return false;
}

}  // namespace

PosedDataset generate(const SceneConfig& config) {
  config.validate();
  const Scene scene(config);

  PosedDataset ds;
  ds.intrinsics.fx = config.focal_scale * config.width;
  ds.intrinsics.fy = config.focal_scale * config.width;
  ds.intrinsics.cx = config.width / 2.0;
  ds.intrinsics.cy = config.height / 2.0;
  ds.intrinsics.width = config.width;
  ds.intrinsics.height = config.height;
  ds.t_near = config.t_near;
  ds.t_far = config.t_far;
  ds.true_water = {config.beta, config.veiling};
  ds.has_true_water = true;
  ds.has_air = ds.has_histeq = ds.has_depth = true;

  std::vector<geometry::Pose> poses;
  for (int v = 0; v < config.views; ++v) poses.push_back(lawnmower_pose(config, v));

  for (int v = 0; v < config.views; ++v) {
    FrameData frame;
    char stem[32];
    std::snprintf(stem, sizeof(stem), "frame_%03d", v);
    frame.stem = stem;
    frame.pose = poses[static_cast<size_t>(v)];
    frame.air = Image(config.width, config.height, 3);
    frame.water = Image(config.width, config.height, 3);
    frame.range = Image(config.width, config.height, 1);
    for (int y = 0; y < config.height; ++y) {
      for (int x = 0; x < config.width; ++x) {
        const geometry::Ray ray = geometry::pixel_ray(
            ds.intrinsics, frame.pose, x + 0.5, y + 0.5, config.t_near, config.t_far);
        const Hit hit = scene.trace(ray);
        if (!hit.hit || hit.t < config.t_near || hit.t > config.t_far) {
          throw std::runtime_error("generate: view " + std::to_string(v) + " pixel (" +
                                   std::to_string(x) + "," + std::to_string(y) +
                                   ") does not strike the scene inside [t_near, t_far]");
        }
        frame.air.set_rgb(x, y, hit.albedo);
        frame.range.at(x, y, 0) = hit.t;
        frame.water.set_rgb(x, y, imgform::degrade(hit.albedo, ds.true_water, hit.t));
      }
    }
    frame.histeq = restore::histogram_equalize(frame.water);
    ds.frames.push_back(std::move(frame));
  }

  ds.tracks = build_tracks(scene, ds.intrinsics, poses, config.t_near, config.t_far);

  for (const auto& patch : scene.board()) {
    metrics::ColorPatch cp;
    cp.name = patch.name;
    cp.truth = patch.color;
    for (int v = 0; v < config.views; ++v) {
      metrics::PatchRegion region;
      if (patch_region(scene, ds.intrinsics, poses[static_cast<size_t>(v)], patch, v,
                       config.t_near, config.t_far, &region)) {
        cp.regions.push_back(region);
      }
    }
    if (!cp.regions.empty()) ds.colorboard.patches.push_back(std::move(cp));
  }
  return ds;
}

namespace {

nlohmann::json pose_to_json(const geometry::Pose& pose) {
  nlohmann::json arr = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) arr.push_back(pose.camera_to_world(r, c));
  }
  return arr;
}

geometry::Pose pose_from_json(const nlohmann::json& arr, const std::string& context) {
  if (!arr.is_array() || arr.size() != 16) {
    throw std::runtime_error(context + ": camera_to_world must hold 16 numbers");
  }
  geometry::Pose pose;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      pose.camera_to_world(r, c) = arr.at(static_cast<size_t>(4 * r + c)).get<double>();
    }
  }
  try {
    pose.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(context + ": " + e.what());
  }
  return pose;
}

void save_image_pair(const Image& img, const fs::path& png_path) {
  save_png(img, png_path.string());
  fs::path pfm = png_path;
  pfm.replace_extension(".pfm");
  save_pfm(img, pfm.string());
}

Image load_image_lossless(const fs::path& png_path) {
  fs::path pfm = png_path;
  pfm.replace_extension(".pfm");
  if (fs::exists(pfm)) return load_pfm(pfm.string());
  if (fs::exists(png_path)) return load_png(png_path.string());
  throw std::runtime_error("missing image " + png_path.string());
}

}  // namespace

void save_dataset(const PosedDataset& dataset, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "images" / "water");
  if (dataset.has_air) fs::create_directories(root / "images" / "air");
  if (dataset.has_histeq) fs::create_directories(root / "images" / "histeq");
  if (dataset.has_depth) fs::create_directories(root / "depth");

  nlohmann::json poses;
  poses["intrinsics"] = {{"fx", dataset.intrinsics.fx}, {"fy", dataset.intrinsics.fy},
                         {"cx", dataset.intrinsics.cx}, {"cy", dataset.intrinsics.cy},
                         {"width", dataset.intrinsics.width},
                         {"height", dataset.intrinsics.height}};
  poses["near"] = dataset.t_near;
  poses["far"] = dataset.t_far;
  poses["frames"] = nlohmann::json::array();

  for (const auto& frame : dataset.frames) {
    const std::string png_name = frame.stem + ".png";
    save_image_pair(frame.water, root / "images" / "water" / png_name);
    if (dataset.has_air) save_image_pair(frame.air, root / "images" / "air" / png_name);
    if (dataset.has_histeq) {
      save_image_pair(frame.histeq, root / "images" / "histeq" / png_name);
    }
    if (dataset.has_depth) {
      save_pfm(frame.range, (root / "depth" / (frame.stem + ".pfm")).string());
    }
    poses["frames"].push_back({{"file", "images/water/" + png_name},
                               {"camera_to_world", pose_to_json(frame.pose)}});
  }
  std::ofstream out(root / "poses.json");
  if (!out) throw std::runtime_error("cannot write " + (root / "poses.json").string());
  out << poses.dump(2) << "\n";

  if (dataset.has_true_water) {
    nlohmann::json wp;
    wp["beta"] = {dataset.true_water.beta.x(), dataset.true_water.beta.y(),
                  dataset.true_water.beta.z()};
    wp["veiling"] = {dataset.true_water.veiling.x(), dataset.true_water.veiling.y(),
                     dataset.true_water.veiling.z()};
    std::ofstream wout(root / "water_params.json");
    wout << wp.dump(2) << "\n";
  }
  if (!dataset.tracks.empty()) {
    metrics::save_tracks(dataset.tracks, (root / "tracks.json").string());
  }
  if (!dataset.colorboard.patches.empty()) {
    metrics::save_colorboard(dataset.colorboard, (root / "colorboard.json").string());
  }
}

PosedDataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  const fs::path poses_path = root / "poses.json";
  std::ifstream in(poses_path);
  if (!in) throw std::runtime_error("cannot open " + poses_path.string());
  nlohmann::json poses;
  try {
    poses = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(poses_path.string() + ": " + e.what());
  }

  PosedDataset ds;
  try {
    const auto& ji = poses.at("intrinsics");
    ds.intrinsics.fx = ji.at("fx").get<double>();
    ds.intrinsics.fy = ji.at("fy").get<double>();
    ds.intrinsics.cx = ji.at("cx").get<double>();
    ds.intrinsics.cy = ji.at("cy").get<double>();
    ds.intrinsics.width = ji.at("width").get<int>();
    ds.intrinsics.height = ji.at("height").get<int>();
    ds.t_near = poses.value("near", 0.05);
    ds.t_far = poses.value("far", 8.0);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(poses_path.string() + ": " + e.what());
  }
  ds.intrinsics.validate();

  const auto& jframes = poses.at("frames");
  if (!jframes.is_array() || jframes.empty()) {
    throw std::runtime_error(poses_path.string() + ": frames must be a non-empty array");
  }
  ds.has_air = ds.has_histeq = ds.has_depth = true;
  for (size_t i = 0; i < jframes.size(); ++i) {
    const auto& jf = jframes.at(i);
    FrameData frame;
    std::string file;
    try {
      file = jf.at("file").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(poses_path.string() + ": frame " + std::to_string(i) +
                               ": " + e.what());
    }
    frame.pose = pose_from_json(jf.at("camera_to_world"),
                                poses_path.string() + ": frame " + std::to_string(i));
    const fs::path water_png = root / file;
    frame.stem = water_png.stem().string();
    frame.water = load_image_lossless(water_png);

    const auto check_dims = [&](const Image& img, const fs::path& p) {
      if (img.width != ds.intrinsics.width || img.height != ds.intrinsics.height) {
        throw std::runtime_error(p.string() + ": dimensions " + std::to_string(img.width) +
                                 "x" + std::to_string(img.height) +
                                 " do not match intrinsics " +
                                 std::to_string(ds.intrinsics.width) + "x" +
                                 std::to_string(ds.intrinsics.height));
      }
    };
    check_dims(frame.water, water_png);

    const fs::path air_png = root / "images" / "air" / (frame.stem + ".png");
    const fs::path air_pfm = root / "images" / "air" / (frame.stem + ".pfm");
    if (fs::exists(air_png) || fs::exists(air_pfm)) {
      frame.air = load_image_lossless(air_png);
      check_dims(frame.air, air_png);
    } else {
      ds.has_air = false;
    }
    const fs::path he_png = root / "images" / "histeq" / (frame.stem + ".png");
    const fs::path he_pfm = root / "images" / "histeq" / (frame.stem + ".pfm");
    if (fs::exists(he_png) || fs::exists(he_pfm)) {
      frame.histeq = load_image_lossless(he_png);
      check_dims(frame.histeq, he_png);
    } else {
      ds.has_histeq = false;
    }
    const fs::path depth_pfm = root / "depth" / (frame.stem + ".pfm");
    if (fs::exists(depth_pfm)) {
      frame.range = load_pfm(depth_pfm.string());
      check_dims(frame.range, depth_pfm);
      for (double r : frame.range.data) {
        if (!std::isfinite(r) || r < 0) {
          throw std::runtime_error(depth_pfm.string() + ": negative or non-finite range");
        }
      }
    } else {
      ds.has_depth = false;
    }
    ds.frames.push_back(std::move(frame));
  }

  if (fs::exists(root / "water_params.json")) {
    std::ifstream win(root / "water_params.json");
    try {
      const nlohmann::json wp = nlohmann::json::parse(win);
      const auto& b = wp.at("beta");
      const auto& a = wp.at("veiling");
      ds.true_water.beta = {b.at(0).get<double>(), b.at(1).get<double>(),
                            b.at(2).get<double>()};
      ds.true_water.veiling = {a.at(0).get<double>(), a.at(1).get<double>(),
                               a.at(2).get<double>()};
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error((root / "water_params.json").string() + ": " + e.what());
    }
    ds.true_water.validate();
    ds.has_true_water = true;
  }
  if (fs::exists(root / "tracks.json")) {
    ds.tracks = metrics::load_tracks((root / "tracks.json").string());
    for (const auto& t : ds.tracks) {
      for (const auto& o : t.obs) {
        if (o.frame < 0 || o.frame >= static_cast<int>(ds.frames.size()) || o.x < 0 ||
            o.x > ds.intrinsics.width || o.y < 0 || o.y > ds.intrinsics.height) {
          throw std::runtime_error((root / "tracks.json").string() + ": track " +
                                   std::to_string(t.id) + " has an out-of-range observation");
        }
      }
    }
  }
  if (fs::exists(root / "colorboard.json")) {
    ds.colorboard = metrics::load_colorboard((root / "colorboard.json").string());
    try {
      ds.colorboard.validate(ds.intrinsics.width, ds.intrinsics.height,
                             static_cast<int>(ds.frames.size()));
    } catch (const std::exception& e) {
      throw std::runtime_error((root / "colorboard.json").string() + ": " + e.what());
    }
  }
  return ds;
}

}  // namespace uwnerf::synth
