#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace rslam {

// Row-major float image. Pixel (ix, iy) lives at data[iy * width + ix].
// +x runs along columns, +y along rows; no display flip is applied anywhere.
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Grid() = default;
  Grid(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<size_t>(w) * static_cast<size_t>(h), fill) {}

  float& at(int ix, int iy) { return data[static_cast<size_t>(iy) * width + ix]; }
  float at(int ix, int iy) const { return data[static_cast<size_t>(iy) * width + ix]; }
  bool in_bounds(int ix, int iy) const {
    return ix >= 0 && iy >= 0 && ix < width && iy < height;
  }
  size_t size() const { return data.size(); }

  double sum() const;
  float max_value() const;
};

// Bilinear interpolation at continuous pixel coordinates.
// Pixels outside the grid read as zero, which also keeps the surface
// continuous across the border.
double sample_bilinear_px(const Grid& g, double px, double py);

// Sub-gradient of the bilinear surface w.r.t. (px, py). Piecewise constant
// inside each cell; at cell boundaries the lower cell is used.
Eigen::Vector2d bilinear_gradient_px(const Grid& g, double px, double py);

// 16-bit PGM, max-normalized. Throws std::runtime_error on I/O failure.
void write_pgm16(const Grid& g, const std::string& path);

// Separable Gaussian blur with clamped borders.
Grid gaussian_blur(const Grid& g, double sigma);

}  // namespace rslam
