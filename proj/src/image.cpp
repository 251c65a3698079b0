#include "uwnerf/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace uwnerf {

Image Image::clamped01() const {
  Image out = *this;
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Eigen::Vector3d bilinear_rgb(const Image& img, double x, double y) {
  if (img.channels != 3) throw std::invalid_argument("bilinear_rgb: need 3-channel image");
  // Shift so that integer coordinates index pixel centers.
  double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(img.width - 1));
  double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(img.height - 1));
  int x0 = std::min(static_cast<int>(fx), img.width - 2 >= 0 ? img.width - 2 : 0);
  int y0 = std::min(static_cast<int>(fy), img.height - 2 >= 0 ? img.height - 2 : 0);
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  int x1 = std::min(x0 + 1, img.width - 1);
  int y1 = std::min(y0 + 1, img.height - 1);
  double ax = fx - x0;
  double ay = fy - y0;
  Eigen::Vector3d v00 = img.rgb(x0, y0), v10 = img.rgb(x1, y0);
  Eigen::Vector3d v01 = img.rgb(x0, y1), v11 = img.rgb(x1, y1);
  return (1 - ax) * (1 - ay) * v00 + ax * (1 - ay) * v10 + (1 - ax) * ay * v01 +
         ax * ay * v11;
}

void save_png(const Image& img, const std::string& path) {
  if (img.empty()) throw std::invalid_argument("save_png: empty image");
  cv::Mat mat(img.height, img.width, img.channels == 3 ? CV_8UC3 : CV_8UC1);
  for (int y = 0; y < img.height; ++y) {
    uint8_t* row = mat.ptr<uint8_t>(y);
    for (int x = 0; x < img.width; ++x) {
      if (img.channels == 3) {
        // OpenCV stores BGR.
        for (int c = 0; c < 3; ++c) {
          double v = std::clamp(img.at(x, y, 2 - c), 0.0, 1.0);
          row[x * 3 + c] = static_cast<uint8_t>(std::lround(v * 255.0));
        }
      } else {
        double v = std::clamp(img.at(x, y, 0), 0.0, 1.0);
        row[x] = static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  if (!cv::imwrite(path, mat)) {
    throw std::runtime_error("save_png: failed to write " + path);
  }
}

Image load_png(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw std::runtime_error("load_png: failed to read " + path);
  if (mat.type() != CV_8UC3 && mat.type() != CV_8UC1) {
    throw std::runtime_error("load_png: unsupported pixel format in " + path);
  }
  int channels = mat.type() == CV_8UC3 ? 3 : 1;
  Image img(mat.cols, mat.rows, channels);
  for (int y = 0; y < mat.rows; ++y) {
    const uint8_t* row = mat.ptr<uint8_t>(y);
    for (int x = 0; x < mat.cols; ++x) {
      if (channels == 3) {
        for (int c = 0; c < 3; ++c) {
          img.at(x, y, c) = row[x * 3 + (2 - c)] / 255.0;
        }
      } else {
        img.at(x, y, 0) = row[x] / 255.0;
      }
    }
  }
  return img;
}

void save_pfm(const Image& img, const std::string& path) {
  if (img.empty()) throw std::invalid_argument("save_pfm: empty image");
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("save_pfm: need 1 or 3 channels");
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_pfm: cannot open " + path);
  f << (img.channels == 3 ? "PF" : "Pf") << "\n"
    << img.width << " " << img.height << "\n"
    << "-1.0\n";  // negative scale: little-endian
  std::vector<float> row(static_cast<size_t>(img.width) * img.channels);
  for (int y = img.height - 1; y >= 0; --y) {  // bottom-up
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        row[static_cast<size_t>(x) * img.channels + c] =
            static_cast<float>(img.at(x, y, c));
      }
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!f) throw std::runtime_error("save_pfm: write failed for " + path);
}

Image load_pfm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_pfm: cannot open " + path);
  std::string magic;
  f >> magic;
  int channels;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw std::runtime_error("load_pfm: bad magic in " + path);
  }
  int w = 0, h = 0;
  double scale = 0;
  f >> w >> h >> scale;
  if (!f || w <= 0 || h <= 0 || scale == 0) {
    throw std::runtime_error("load_pfm: bad header in " + path);
  }
  if (scale > 0) {
    throw std::runtime_error("load_pfm: big-endian PFM unsupported in " + path);
  }
  f.get();  // single whitespace after the scale line
  Image img(w, h, channels);
  std::vector<float> row(static_cast<size_t>(w) * channels);
  for (int y = h - 1; y >= 0; --y) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!f) throw std::runtime_error("load_pfm: truncated data in " + path);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(x, y, c) = row[static_cast<size_t>(x) * channels + c];
      }
    }
  }
  return img;
}

}  // namespace uwnerf
