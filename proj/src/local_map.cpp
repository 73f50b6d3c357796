#include "rslam/local_map.hpp"

#include <cmath>
#include <stdexcept>

namespace rslam {

LocalMap::LocalMap(const LocalMapParams& params, const Pose2& origin)
    : params_(params), origin_(origin), grid_(params.size_px, params.size_px) {
  if (params.size_px <= 0 || params.size_px % 2 == 0)
    throw std::invalid_argument("map size must be positive and odd");
  if (params.resolution <= 0.0) throw std::invalid_argument("map resolution must be positive");
  if (params.blend <= 0.0 || params.blend > 1.0)
    throw std::invalid_argument("blend factor must be in (0, 1]");
}

void LocalMap::integrate(const Grid& scan_cart, double observed_radius) {
  if (scan_cart.width != grid_.width || scan_cart.height != grid_.height)
    throw std::invalid_argument("scan raster does not match map geometry");
  const int c = params_.size_px / 2;
  const double r2 = observed_radius * observed_radius;
  const float a = static_cast<float>(params_.blend);
  for (int row = 0; row < grid_.height; ++row) {
    const double y = (row - c) * params_.resolution;
    for (int col = 0; col < grid_.width; ++col) {
      const double x = (col - c) * params_.resolution;
      if (x * x + y * y > r2) continue;
      float& v = grid_.at(col, row);
      v = (1.0f - a) * v + a * scan_cart.at(col, row);
    }
  }
}

void LocalMap::recenter(const Pose2& new_origin) {
  const Pose2 new_to_old = between(origin_, new_origin);
  const Eigen::Matrix2d rot = new_to_old.rotation();
  const int c = params_.size_px / 2;
  Grid next(grid_.width, grid_.height);
  for (int row = 0; row < grid_.height; ++row) {
    for (int col = 0; col < grid_.width; ++col) {
      const Eigen::Vector2d p_new((col - c) * params_.resolution, (row - c) * params_.resolution);
      const Eigen::Vector2d p_old = rot * p_new + new_to_old.translation();
      next.at(col, row) = static_cast<float>(
          sample_bilinear_px(grid_, p_old.x() / params_.resolution + c, p_old.y() / params_.resolution + c));
    }
  }
  grid_ = std::move(next);
  origin_ = new_origin;
}

double LocalMap::sample(double x, double y) const {
  const int c = params_.size_px / 2;
  return sample_bilinear_px(grid_, x / params_.resolution + c, y / params_.resolution + c);
}

}  // namespace rslam
