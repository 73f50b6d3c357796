#include "rslam/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace rslam {

double Grid::sum() const {
  double s = 0.0;
  for (float v : data) s += v;
  return s;
}

float Grid::max_value() const {
  float m = 0.0f;
  for (float v : data) m = std::max(m, v);
  return m;
}

double sample_bilinear_px(const Grid& g, double px, double py) {
  const int x0 = static_cast<int>(std::floor(px));
  const int y0 = static_cast<int>(std::floor(py));
  if (x0 < -1 || y0 < -1 || x0 >= g.width || y0 >= g.height) return 0.0;
  const double wx = px - x0;
  const double wy = py - y0;
  auto v = [&](int ix, int iy) -> double {
    return g.in_bounds(ix, iy) ? g.at(ix, iy) : 0.0;
  };
  const double v00 = v(x0, y0), v10 = v(x0 + 1, y0);
  const double v01 = v(x0, y0 + 1), v11 = v(x0 + 1, y0 + 1);
  return (1.0 - wy) * ((1.0 - wx) * v00 + wx * v10) + wy * ((1.0 - wx) * v01 + wx * v11);
}

Eigen::Vector2d bilinear_gradient_px(const Grid& g, double px, double py) {
  const int x0 = static_cast<int>(std::floor(px));
  const int y0 = static_cast<int>(std::floor(py));
  if (x0 < -1 || y0 < -1 || x0 >= g.width || y0 >= g.height) return Eigen::Vector2d::Zero();
  const double wx = px - x0;
  const double wy = py - y0;
  auto v = [&](int ix, int iy) -> double {
    return g.in_bounds(ix, iy) ? g.at(ix, iy) : 0.0;
  };
  const double v00 = v(x0, y0), v10 = v(x0 + 1, y0);
  const double v01 = v(x0, y0 + 1), v11 = v(x0 + 1, y0 + 1);
  const double dx = (1.0 - wy) * (v10 - v00) + wy * (v11 - v01);
  const double dy = (1.0 - wx) * (v01 - v00) + wx * (v11 - v10);
  return {dx, dy};
}

Grid gaussian_blur(const Grid& g, double sigma) {
  if (sigma <= 0.0) return g;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    norm += kernel[i + radius];
  }
  for (double& k : kernel) k /= norm;

  Grid tmp(g.width, g.height);
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i)
        s += kernel[i + radius] * g.at(std::clamp(ix + i, 0, g.width - 1), iy);
      tmp.at(ix, iy) = static_cast<float>(s);
    }
  }
  Grid out(g.width, g.height);
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i)
        s += kernel[i + radius] * tmp.at(ix, std::clamp(iy + i, 0, g.height - 1));
      out.at(ix, iy) = static_cast<float>(s);
    }
  }
  return out;
}

void write_pgm16(const Grid& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const float maxv = g.max_value();
  const double scale = maxv > 0.0f ? 65535.0 / maxv : 0.0;
  out << "P5\n" << g.width << " " << g.height << "\n65535\n";
  std::vector<unsigned char> row(static_cast<size_t>(g.width) * 2);
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      const auto v = static_cast<unsigned>(std::lround(g.at(ix, iy) * scale));
      row[2 * ix] = static_cast<unsigned char>((v >> 8) & 0xff);      // big-endian per PGM
      row[2 * ix + 1] = static_cast<unsigned char>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace rslam
