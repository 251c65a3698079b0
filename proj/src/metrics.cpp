#include "uwnerf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace uwnerf::metrics {
namespace {

constexpr double kPi = 3.14159265358979323846;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

}  // namespace

double angular_error_deg(const Eigen::Vector3d& measured, const Eigen::Vector3d& truth) {
  const double nm = measured.norm();
  const double nt = truth.norm();
  if (nm < 1e-12 || nt < 1e-12) {
    throw std::invalid_argument("angular_error_deg: zero-length color vector");
  }
  const double c = std::clamp(measured.dot(truth) / (nm * nt), -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

void ColorBoardSpec::validate(int width, int height, int frame_count) const {
  for (const auto& p : patches) {
    if (p.truth.norm() < 1e-12) {
      throw std::invalid_argument("colorboard patch '" + p.name + "' has zero truth color");
    }
    for (const auto& r : p.regions) {
      if (r.frame < 0 || r.frame >= frame_count) {
        throw std::invalid_argument("colorboard patch '" + p.name + "' references frame " +
                                    std::to_string(r.frame) + " outside the dataset");
      }
      if (r.x0 < 0 || r.y0 < 0 || r.x1 > width || r.y1 > height || r.x0 >= r.x1 ||
          r.y0 >= r.y1) {
        throw std::invalid_argument("colorboard patch '" + p.name + "' has an invalid region");
      }
    }
  }
}

ColorBoardSpec load_colorboard(const std::string& path) {
  const nlohmann::json j = read_json(path);
  ColorBoardSpec spec;
  try {
    for (const auto& jp : j.at("patches")) {
      ColorPatch p;
      p.name = jp.at("name").get<std::string>();
      const auto& t = jp.at("truth");
      p.truth = Eigen::Vector3d(t.at(0).get<double>(), t.at(1).get<double>(),
                                t.at(2).get<double>());
      for (const auto& jr : jp.at("regions")) {
        PatchRegion r;
        r.frame = jr.at("frame").get<int>();
        r.x0 = jr.at("x0").get<int>();
        r.y0 = jr.at("y0").get<int>();
        r.x1 = jr.at("x1").get<int>();
        r.y1 = jr.at("y1").get<int>();
        p.regions.push_back(r);
      }
      spec.patches.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return spec;
}

void save_colorboard(const ColorBoardSpec& spec, const std::string& path) {
  nlohmann::json j;
  j["patches"] = nlohmann::json::array();
  for (const auto& p : spec.patches) {
    nlohmann::json jp;
    jp["name"] = p.name;
    jp["truth"] = {p.truth.x(), p.truth.y(), p.truth.z()};
    jp["regions"] = nlohmann::json::array();
    for (const auto& r : p.regions) {
      jp["regions"].push_back(
          {{"frame", r.frame}, {"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}});
    }
    j["patches"].push_back(jp);
  }
  write_json(j, path);
}

ColorBoardReport colorboard_report(const std::vector<Image>& images,
                                   const ColorBoardSpec& spec) {
  if (images.empty()) throw std::invalid_argument("colorboard_report: no images");
  spec.validate(images[0].width, images[0].height, static_cast<int>(images.size()));
  ColorBoardReport report;
  double total = 0;
  for (const auto& p : spec.patches) {
    if (p.regions.empty()) {
      throw std::invalid_argument("colorboard patch '" + p.name + "' has no regions");
    }
    double patch_sum = 0;
    for (const auto& r : p.regions) {
      const Image& img = images[static_cast<size_t>(r.frame)];
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) mean += img.rgb(x, y);
      }
      mean /= static_cast<double>(r.x1 - r.x0) * (r.y1 - r.y0);
      patch_sum += angular_error_deg(mean, p.truth);
    }
    report.patches.push_back({p.name, patch_sum / p.regions.size()});
    total += report.patches.back().mean_angle_deg;
  }
  report.mean_angle_deg = total / spec.patches.size();
  return report;
}

namespace {

// Asymmetric alpha-trimmed mean with 10% trimmed from each tail; the variance
// is taken over all samples about that mean.
void trimmed_stats(std::vector<double> values, double* mean, double* var) {
  const size_t n = values.size();
  std::sort(values.begin(), values.end());
  const size_t trim = static_cast<size_t>(0.1 * n);
  double m = 0;
  size_t kept = 0;
  for (size_t i = trim; i + trim < n; ++i) {
    m += values[i];
    ++kept;
  }
  m = kept ? m / kept : std::accumulate(values.begin(), values.end(), 0.0) / n;
  double v = 0;
  for (double x : values) v += (x - m) * (x - m);
  *mean = m;
  *var = v / n;
}

// Blocks tile the image in 10x10 cells (one full-image cell when a side is
// shorter than 10); the remainder strip is ignored.
template <typename BlockFn>
double over_blocks(int width, int height, BlockFn fn) {
  const int bs = 10;
  const int k1 = std::max(1, width / bs);
  const int k2 = std::max(1, height / bs);
  const int bw = width / k1;
  const int bh = height / k2;
  double sum = 0;
  for (int by = 0; by < k2; ++by) {
    for (int bx = 0; bx < k1; ++bx) {
      sum += fn(bx * bw, by * bh, bw, bh);
    }
  }
  return sum / (static_cast<double>(k1) * k2);
}

double eme(const std::vector<double>& plane, int width, int height) {
  const double eps = 1e-3;
  return 2.0 * over_blocks(width, height, [&](int x0, int y0, int bw, int bh) {
    double lo = plane[static_cast<size_t>(y0) * width + x0];
    double hi = lo;
    for (int y = y0; y < y0 + bh; ++y) {
      for (int x = x0; x < x0 + bw; ++x) {
        const double v = plane[static_cast<size_t>(y) * width + x];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    return std::log((hi + eps) / (lo + eps));
  });
}

std::vector<double> sobel_times_channel(const Image& img, int c) {
  const int w = img.width, h = img.height;
  auto at = [&](int x, int y) {
    return img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1), c);
  };
  std::vector<double> out(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
      out[static_cast<size_t>(y) * w + x] = std::hypot(gx, gy) * at(x, y);
    }
  }
  return out;
}

}  // namespace

UiqmBreakdown uiqm(const Image& image) {
  if (image.channels != 3) throw std::invalid_argument("uiqm: image must have 3 channels");
  const int w = image.width, h = image.height;
  const size_t n = static_cast<size_t>(w) * h;

  std::vector<double> rg(n), yb(n);
  for (size_t i = 0; i < n; ++i) {
    const double r = image.data[3 * i + 0];
    const double g = image.data[3 * i + 1];
    const double b = image.data[3 * i + 2];
    rg[i] = r - g;
    yb[i] = 0.5 * (r + g) - b;
  }
  double mu_rg, var_rg, mu_yb, var_yb;
  trimmed_stats(std::move(rg), &mu_rg, &var_rg);
  trimmed_stats(std::move(yb), &mu_yb, &var_yb);

  UiqmBreakdown out;
  out.uicm = -0.0268 * std::hypot(mu_rg, mu_yb) + 0.1586 * std::sqrt(var_rg + var_yb);

  const double lambda[3] = {0.299, 0.587, 0.114};
  for (int c = 0; c < 3; ++c) {
    out.uism += lambda[c] * eme(sobel_times_channel(image, c), w, h);
  }

  std::vector<double> intensity(n);
  for (size_t i = 0; i < n; ++i) {
    intensity[i] =
        (image.data[3 * i + 0] + image.data[3 * i + 1] + image.data[3 * i + 2]) / 3.0;
  }
  // log-AMEE with Michelson block contrast r: mean of -r log r (0 at r = 0).
  out.uiconm = over_blocks(w, h, [&](int x0, int y0, int bw, int bh) {
    double lo = intensity[static_cast<size_t>(y0) * w + x0];
    double hi = lo;
    for (int y = y0; y < y0 + bh; ++y) {
      for (int x = x0; x < x0 + bw; ++x) {
        const double v = intensity[static_cast<size_t>(y) * w + x];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (hi + lo < 1e-12) return 0.0;
    const double r = (hi - lo) / (hi + lo);
    return r > 0 ? -r * std::log(r) : 0.0;
  });

  out.uiqm = 0.282 * out.uicm + 0.2953 * out.uism + 3.5753 * out.uiconm;
  return out;
}

std::vector<PixelTrack> load_tracks(const std::string& path) {
  const nlohmann::json j = read_json(path);
  std::vector<PixelTrack> tracks;
  try {
    for (const auto& jt : j.at("tracks")) {
      PixelTrack t;
      t.id = jt.at("id").get<int>();
      for (const auto& jo : jt.at("obs")) {
        t.obs.push_back({jo.at("frame").get<int>(), jo.at("x").get<double>(),
                         jo.at("y").get<double>()});
      }
      tracks.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return tracks;
}

void save_tracks(const std::vector<PixelTrack>& tracks, const std::string& path) {
  nlohmann::json j;
  j["tracks"] = nlohmann::json::array();
  for (const auto& t : tracks) {
    nlohmann::json jt;
    jt["id"] = t.id;
    jt["obs"] = nlohmann::json::array();
    for (const auto& o : t.obs) {
      jt["obs"].push_back({{"frame", o.frame}, {"x", o.x}, {"y", o.y}});
    }
    j["tracks"].push_back(jt);
  }
  write_json(j, path);
}

SceneConsistency scene_consistency(const std::vector<Image>& images,
                                   const std::vector<PixelTrack>& tracks) {
  if (tracks.empty()) throw std::invalid_argument("scene_consistency: no tracks");
  if (images.empty()) throw std::invalid_argument("scene_consistency: no images");
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (const auto& t : tracks) {
    if (t.obs.size() < 2) {
      throw std::invalid_argument("scene_consistency: track " + std::to_string(t.id) +
                                  " needs at least 2 observations");
    }
    std::vector<Eigen::Vector3d> samples;
    samples.reserve(t.obs.size());
    for (const auto& o : t.obs) {
      if (o.frame < 0 || o.frame >= static_cast<int>(images.size())) {
        throw std::invalid_argument("scene_consistency: track " + std::to_string(t.id) +
                                    " references frame " + std::to_string(o.frame));
      }
      const Image& img = images[static_cast<size_t>(o.frame)];
      if (o.x < 0 || o.x > img.width || o.y < 0 || o.y > img.height) {
        throw std::invalid_argument("scene_consistency: track " + std::to_string(t.id) +
                                    " observation outside image bounds");
      }
      Eigen::Vector3d v = bilinear_rgb(img, o.x, o.y);
      const double norm = v.norm();
      samples.push_back(norm > 1e-12 ? Eigen::Vector3d(v / norm) : Eigen::Vector3d::Zero());
    }
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    Eigen::Vector3d var = Eigen::Vector3d::Zero();
    for (const auto& s : samples) var += (s - mean).cwiseAbs2();
    var /= static_cast<double>(samples.size());
    acc += var.cwiseSqrt();
  }
  acc /= static_cast<double>(tracks.size());
  return {acc.x(), acc.y(), acc.z()};
}

double psnr(const Image& pred, const Image& truth) {
  if (!pred.same_shape(truth)) throw std::invalid_argument("psnr: dimension mismatch");
  double mse = 0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - truth.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.data.size());
  if (mse <= 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

}  // namespace uwnerf::metrics
