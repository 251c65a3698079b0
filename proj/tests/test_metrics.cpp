#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "uwnerf/image.hpp"
#include "uwnerf/metrics.hpp"

using namespace uwnerf;
using namespace uwnerf::metrics;
using Eigen::Vector3d;

namespace {

Image constant_image(int w, int h, const Vector3d& c) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.set_rgb(x, y, c);
  }
  return img;
}

Image procedural_image(int w, int h) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w, v = (y + 0.5) / h;
      img.set_rgb(x, y,
                  {0.5 + 0.4 * std::sin(7.0 * u) * std::cos(3.0 * v),
                   0.5 + 0.3 * std::sin(12.0 * u + 1.0),
                   0.4 + 0.35 * std::cos(5.0 * v + 0.5)});
    }
  }
  return img;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("angular error basics") {
  CHECK(angular_error_deg({0.3, 0.3, 0.3}, {0.7, 0.7, 0.7}) == 0.0);
  CHECK(angular_error_deg({1, 0, 0}, {0, 1, 0}) == 90.0);
  CHECK(angular_error_deg({1, 0, 0}, {-1, 0, 0}) == doctest::Approx(180.0).epsilon(1e-12));

  const Vector3d a(0.2, 0.5, 0.1), b(0.6, 0.1, 0.4);
  CHECK(angular_error_deg(a, b) == doctest::Approx(angular_error_deg(b, a)).epsilon(1e-13));
  CHECK(angular_error_deg(2.0 * a, b) == doctest::Approx(angular_error_deg(a, b)).epsilon(1e-13));
  CHECK(angular_error_deg(a, 0.1 * b) == doctest::Approx(angular_error_deg(a, b)).epsilon(1e-13));

  CHECK_THROWS_AS(angular_error_deg({0, 0, 0}, {1, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(angular_error_deg({1, 0, 0}, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("colorboard regions are averaged before the angle is taken") {
  // Two pixels individually off-hue; their mean determines the reported angle.
  Image img(2, 1, 3);
  img.set_rgb(0, 0, {1.0, 0.4, 0.0});
  img.set_rgb(1, 0, {1.0, 0.0, 0.0});

  ColorBoardSpec spec;
  ColorPatch patch;
  patch.name = "red";
  patch.truth = Vector3d(1, 0, 0);
  patch.regions.push_back({0, 0, 0, 2, 1});
  spec.patches.push_back(patch);

  const ColorBoardReport report = colorboard_report({img}, spec);
  REQUIRE(report.patches.size() == 1);
  const double expected = angular_error_deg({1.0, 0.2, 0.0}, {1, 0, 0});
  CHECK(report.patches[0].mean_angle_deg == doctest::Approx(expected).epsilon(1e-12));

  const double angle_of_means = expected;
  const double mean_of_angles = 0.5 * (angular_error_deg({1.0, 0.4, 0.0}, {1, 0, 0}) +
                                       angular_error_deg({1.0, 0.0, 0.0}, {1, 0, 0}));
  CHECK(angle_of_means != doctest::Approx(mean_of_angles).epsilon(1e-6));
}

TEST_CASE("colorboard report averages regions within a patch and patches overall") {
  Image frame0(2, 2, 3), frame1(2, 2, 3);
  frame0.set_rgb(0, 0, {1, 0, 0});
  frame1.set_rgb(0, 0, {1, 1, 0});  // 45 degrees from pure red
  frame0.set_rgb(1, 1, {0, 1, 0});
  frame1.set_rgb(1, 1, {0, 1, 0});

  ColorBoardSpec spec;
  ColorPatch red;
  red.name = "red";
  red.truth = Vector3d(1, 0, 0);
  red.regions.push_back({0, 0, 0, 1, 1});
  red.regions.push_back({1, 0, 0, 1, 1});
  ColorPatch green;
  green.name = "green";
  green.truth = Vector3d(0, 1, 0);
  green.regions.push_back({0, 1, 1, 2, 2});
  green.regions.push_back({1, 1, 1, 2, 2});
  spec.patches = {red, green};

  const ColorBoardReport report = colorboard_report({frame0, frame1}, spec);
  CHECK(report.patches[0].mean_angle_deg == doctest::Approx(22.5).epsilon(1e-12));
  CHECK(report.patches[1].mean_angle_deg == 0.0);
  CHECK(report.mean_angle_deg == doctest::Approx(11.25).epsilon(1e-12));
}

TEST_CASE("colorboard validation rejects malformed specs") {
  ColorBoardSpec spec;
  ColorPatch p;
  p.name = "bad";
  p.truth = Vector3d(1, 0, 0);
  p.regions.push_back({0, 0, 0, 5, 5});
  spec.patches.push_back(p);
  CHECK_NOTHROW(spec.validate(8, 8, 1));
  CHECK_THROWS_AS(spec.validate(4, 8, 1), std::invalid_argument);   // x1 > width
  CHECK_THROWS_AS(spec.validate(8, 8, 0), std::invalid_argument);   // frame out of range
  spec.patches[0].truth = Vector3d::Zero();
  CHECK_THROWS_AS(spec.validate(8, 8, 1), std::invalid_argument);
  spec.patches[0].truth = Vector3d(1, 0, 0);
  spec.patches[0].regions[0] = {0, 3, 3, 3, 5};  // empty in x
  CHECK_THROWS_AS(spec.validate(8, 8, 1), std::invalid_argument);
}

TEST_CASE("colorboard specs survive a JSON round trip") {
  ColorBoardSpec spec;
  ColorPatch p;
  p.name = "teal";
  p.truth = Vector3d(0.1, 0.7, 0.6);
  p.regions.push_back({2, 4, 6, 8, 10});
  p.regions.push_back({3, 0, 0, 1, 1});
  spec.patches.push_back(p);

  const std::string path = temp_path("uwnerf_board.json");
  save_colorboard(spec, path);
  const ColorBoardSpec back = load_colorboard(path);
  REQUIRE(back.patches.size() == 1);
  CHECK(back.patches[0].name == "teal");
  CHECK(back.patches[0].truth == spec.patches[0].truth);
  REQUIRE(back.patches[0].regions.size() == 2);
  CHECK(back.patches[0].regions[1].frame == 3);
  CHECK(back.patches[0].regions[0].y1 == 10);
  std::filesystem::remove(path);
}

TEST_CASE("colorboard loading errors name the offending file") {
  const std::string path = temp_path("uwnerf_board_bad.json");
  {
    std::ofstream out(path);
    out << "{\"wrong_key\": []}";
  }
  CHECK_THROWS_WITH_AS(load_colorboard(path), doctest::Contains(path.c_str()),
                       std::runtime_error);
  std::filesystem::remove(path);
  CHECK_THROWS_WITH_AS(load_colorboard(path), doctest::Contains(path.c_str()),
                       std::runtime_error);
}

TEST_CASE("a constant gray image scores zero on every UIQM component") {
  const UiqmBreakdown b = uiqm(constant_image(20, 20, {0.5, 0.5, 0.5}));
  CHECK(b.uicm == 0.0);
  CHECK(b.uism == 0.0);
  CHECK(b.uiconm == 0.0);
  CHECK(b.uiqm == 0.0);
}

TEST_CASE("the UIQM combination uses the published coefficients verbatim") {
  const UiqmBreakdown b = uiqm(procedural_image(40, 30));
  CHECK(b.uiqm ==
        doctest::Approx(0.282 * b.uicm + 0.2953 * b.uism + 3.5753 * b.uiconm).epsilon(1e-15));
  CHECK(std::isfinite(b.uicm));
  CHECK(std::isfinite(b.uism));
  CHECK(std::isfinite(b.uiconm));
  // A textured, colorful image outranks a flat one.
  CHECK(b.uiqm > uiqm(constant_image(40, 30, {0.3, 0.4, 0.5})).uiqm);
  CHECK_THROWS_AS(uiqm(Image(8, 8, 1, 0.5)), std::invalid_argument);
}

TEST_CASE("UIQM regression fixture") {
  // Frozen from the first computation on the deterministic procedural image;
  // guards the component conventions against silent drift.
  const UiqmBreakdown b = uiqm(procedural_image(40, 30));
  CHECK(b.uicm == doctest::Approx(0.055210441956180745).epsilon(1e-9));
  CHECK(b.uism == doctest::Approx(5.113660733276574).epsilon(1e-9));
  CHECK(b.uiconm == doctest::Approx(0.36002681124839264).epsilon(1e-9));
  CHECK(b.uiqm == doctest::Approx(2.8128372174245935).epsilon(1e-9));
}

TEST_CASE("pixel tracks survive a JSON round trip") {
  std::vector<PixelTrack> tracks(2);
  tracks[0].id = 4;
  tracks[0].obs = {{0, 1.5, 2.5}, {1, 3.25, 4.75}};
  tracks[1].id = 9;
  tracks[1].obs = {{2, 0.5, 0.5}, {3, 10.0, 20.0}, {4, 5.5, 6.5}};

  const std::string path = temp_path("uwnerf_tracks.json");
  save_tracks(tracks, path);
  const std::vector<PixelTrack> back = load_tracks(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == 4);
  CHECK(back[0].obs[1].x == 3.25);
  CHECK(back[1].obs.size() == 3);
  CHECK(back[1].obs[2].y == 6.5);
  std::filesystem::remove(path);

  {
    std::ofstream out(path);
    out << "[1, 2, 3]";
  }
  CHECK_THROWS_WITH_AS(load_tracks(path), doctest::Contains(path.c_str()),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("constant tracks have zero scene-consistency spread") {
  const Image a = constant_image(4, 4, {0.2, 0.5, 0.7});
  const Image b = constant_image(4, 4, {0.2, 0.5, 0.7});
  std::vector<PixelTrack> tracks(1);
  tracks[0].id = 0;
  tracks[0].obs = {{0, 1.5, 1.5}, {1, 2.5, 2.5}};
  const SceneConsistency scm = scene_consistency({a, b}, tracks);
  CHECK(scm.scm_r == 0.0);
  CHECK(scm.scm_g == 0.0);
  CHECK(scm.scm_b == 0.0);
  CHECK(scm.mean() == 0.0);
}

TEST_CASE("two-observation scene consistency hand oracle") {
  // Normalized samples (1,0,0) and (0,1,0): per-channel population std is
  // 0.5, 0.5, 0 for the single track.
  const Image a = constant_image(1, 1, {1, 0, 0});
  const Image b = constant_image(1, 1, {0, 1, 0});
  std::vector<PixelTrack> tracks(1);
  tracks[0].obs = {{0, 0.5, 0.5}, {1, 0.5, 0.5}};
  const SceneConsistency scm = scene_consistency({a, b}, tracks);
  CHECK(scm.scm_r == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(scm.scm_g == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(scm.scm_b == 0.0);
  CHECK(scm.mean() == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("scene consistency ignores per-frame brightness changes") {
  Image a(3, 3, 3), b(3, 3, 3);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      const Vector3d c(u(rng), u(rng), u(rng));
      a.set_rgb(x, y, c);
      b.set_rgb(x, y, c * 0.9);
    }
  }
  std::vector<PixelTrack> tracks(2);
  tracks[0].id = 0;
  tracks[0].obs = {{0, 0.5, 0.5}, {1, 0.5, 0.5}};
  tracks[1].id = 1;
  tracks[1].obs = {{0, 2.5, 1.5}, {1, 2.5, 1.5}};

  const SceneConsistency base = scene_consistency({a, b}, tracks);
  Image dim = b;
  for (double& v : dim.data) v *= 0.4;  // further uniform dimming
  const SceneConsistency dimmed = scene_consistency({a, dim}, tracks);
  CHECK(base.scm_r == doctest::Approx(dimmed.scm_r).epsilon(1e-12));
  CHECK(base.scm_g == doctest::Approx(dimmed.scm_g).epsilon(1e-12));
  CHECK(base.scm_b == doctest::Approx(dimmed.scm_b).epsilon(1e-12));
  // Same pixel under the same illumination: spread is exactly zero.
  CHECK(base.mean() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("scene consistency validates tracks and frames") {
  const Image img = constant_image(2, 2, {0.5, 0.5, 0.5});
  std::vector<PixelTrack> tracks(1);
  tracks[0].obs = {{0, 0.5, 0.5}};
  CHECK_THROWS_AS(scene_consistency({img}, tracks), std::invalid_argument);
  tracks[0].obs = {{0, 0.5, 0.5}, {3, 0.5, 0.5}};
  CHECK_THROWS_AS(scene_consistency({img}, tracks), std::invalid_argument);
  tracks[0].obs = {{0, 0.5, 0.5}, {0, 5.0, 0.5}};
  CHECK_THROWS_AS(scene_consistency({img}, tracks), std::invalid_argument);
  CHECK_THROWS_AS(scene_consistency({img}, {}), std::invalid_argument);
  CHECK_THROWS_AS(scene_consistency({}, tracks), std::invalid_argument);
}

TEST_CASE("bilinear sampling hits pixel centers exactly and blends between them") {
  Image img(2, 1, 3);
  img.set_rgb(0, 0, {1, 0, 0});
  img.set_rgb(1, 0, {0, 1, 0});
  CHECK((bilinear_rgb(img, 0.5, 0.5) - Vector3d(1, 0, 0)).norm() == 0.0);
  CHECK((bilinear_rgb(img, 1.5, 0.5) - Vector3d(0, 1, 0)).norm() == 0.0);
  CHECK((bilinear_rgb(img, 1.0, 0.5) - Vector3d(0.5, 0.5, 0)).norm() < 1e-15);
  // Border clamp: coordinates beyond the edge return the edge pixel.
  CHECK((bilinear_rgb(img, 0.0, 0.5) - Vector3d(1, 0, 0)).norm() == 0.0);
  CHECK((bilinear_rgb(img, 2.0, 0.5) - Vector3d(0, 1, 0)).norm() == 0.0);
}

TEST_CASE("PSNR closed forms") {
  const Image gray = constant_image(8, 8, {0.5, 0.5, 0.5});
  CHECK(psnr(gray, gray) == kPsnrCap);

  const Image zero = constant_image(8, 8, {0, 0, 0});
  const Image one = constant_image(8, 8, {1, 1, 1});
  CHECK(psnr(zero, one) == 0.0);

  // +-0.1 checkerboard against flat 0.5: MSE is exactly 0.01, PSNR exactly 20 dB.
  Image checker = gray;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double v = ((x + y) % 2 == 0) ? 0.6 : 0.4;
      checker.set_rgb(x, y, {v, v, v});
    }
  }
  CHECK(psnr(checker, gray) == doctest::Approx(20.0).epsilon(1e-12));

  CHECK_THROWS_AS(psnr(gray, constant_image(8, 4, {0.5, 0.5, 0.5})), std::invalid_argument);
}

TEST_CASE("uniform noise PSNR matches the analytic expectation") {
  // U(-0.1, 0.1) noise has variance 0.04/12, so PSNR tends to 10 log10(300).
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  const Image base = constant_image(64, 64, {0.5, 0.5, 0.5});
  Image noisy = base;
  for (double& v : noisy.data) v += noise(rng);
  const double expected = 10.0 * std::log10(300.0);
  CHECK(psnr(noisy, base) == doctest::Approx(expected).epsilon(0.02));
}
