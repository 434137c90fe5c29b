#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace hybridmap {

/// Row-major H*W*3 float image, values in [0,1].
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  ImageRGB() = default;
  ImageRGB(int w, int h) : width(w), height(h), data(size_t(w) * h * 3, 0.f) {}

  float* at(int row, int col) { return data.data() + (size_t(row) * width + col) * 3; }
  const float* at(int row, int col) const {
    return data.data() + (size_t(row) * width + col) * 3;
  }
  Eigen::Vector3d pixel(int row, int col) const {
    const float* p = at(row, col);
    return {p[0], p[1], p[2]};
  }
  void set_pixel(int row, int col, const Eigen::Vector3d& c) {
    float* p = at(row, col);
    p[0] = float(c.x());
    p[1] = float(c.y());
    p[2] = float(c.z());
  }
  size_t pixel_count() const { return size_t(width) * height; }
};

/// Row-major H*W float depth image, meters, 0 = invalid.
struct ImageDepth {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  ImageDepth() = default;
  ImageDepth(int w, int h) : width(w), height(h), data(size_t(w) * h, 0.f) {}

  float& at(int row, int col) { return data[size_t(row) * width + col]; }
  float at(int row, int col) const { return data[size_t(row) * width + col]; }
  size_t pixel_count() const { return size_t(width) * height; }
};

}  // namespace hybridmap
