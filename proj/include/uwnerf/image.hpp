#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace uwnerf {

// Row-major interleaved float image, values nominally in [0,1].
// Pixel (x, y) has its center at continuous coordinates (x + 0.5, y + 0.5),
// matching the pinhole projection convention in geometry.hpp.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  Eigen::Vector3d rgb(int x, int y) const {
    return {at(x, y, 0), at(x, y, 1), at(x, y, 2)};
  }
  void set_rgb(int x, int y, const Eigen::Vector3d& v) {
    at(x, y, 0) = v[0];
    at(x, y, 1) = v[1];
    at(x, y, 2) = v[2];
  }

  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool empty() const { return data.empty(); }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }

  Image clamped01() const;
};

// Bilinear sample at continuous coordinates; (x, y) = (i + 0.5, j + 0.5) hits
// pixel (i, j) exactly. Coordinates are clamped to the image border.
Eigen::Vector3d bilinear_rgb(const Image& img, double x, double y);

// 8-bit PNG. Values are clamped to [0,1] and rounded on save.
void save_png(const Image& img, const std::string& path);
Image load_png(const std::string& path);

// PFM (portable float map), 32-bit little-endian floats, bottom-up rows.
// Doubles are rounded to float32 on save; a save/load/save cycle is bit-exact.
void save_pfm(const Image& img, const std::string& path);
Image load_pfm(const std::string& path);

}  // namespace uwnerf
