#include "rslam/sift.hpp"

#include "rslam/se2.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace rslam {

namespace {

constexpr int kDescWidth = 4;  // spatial cells per side
constexpr int kDescBins = 8;   // orientation bins per cell
constexpr int kBorder = 5;     // px kept clear around candidate extrema

Grid downsample2(const Grid& g) {
  Grid out(std::max(1, g.width / 2), std::max(1, g.height / 2));
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(x, y) = g.at(2 * x, 2 * y);
  return out;
}

Grid upsample2(const Grid& g) {
  Grid out(2 * g.width, 2 * g.height);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = static_cast<float>(sample_bilinear_px(g, 0.5 * x, 0.5 * y));
  return out;
}

struct Pyramid {
  std::vector<std::vector<Grid>> gauss;  // [octave][intervals + 3]
  std::vector<std::vector<Grid>> dog;    // [octave][intervals + 2]
};

Pyramid build_pyramid(const Grid& base, const SiftParams& p, int n_octaves) {
  const int S = p.intervals;
  const double k = std::pow(2.0, 1.0 / S);
  std::vector<double> inc(S + 3, 0.0);  // incremental blur level to level
  for (int s = 1; s < S + 3; ++s) {
    const double prev = p.sigma0 * std::pow(k, s - 1);
    inc[s] = prev * std::sqrt(k * k - 1.0);
  }

  Pyramid pyr;
  const double base_blur =
      std::sqrt(std::max(0.01, p.sigma0 * p.sigma0 - p.assumed_blur * p.assumed_blur));
  for (int o = 0; o < n_octaves; ++o) {
    std::vector<Grid> g;
    g.push_back(o == 0 ? gaussian_blur(base, base_blur) : downsample2(pyr.gauss[o - 1][S]));
    for (int s = 1; s < S + 3; ++s) g.push_back(gaussian_blur(g[s - 1], inc[s]));

    std::vector<Grid> d;
    for (int s = 0; s < S + 2; ++s) {
      Grid diff(g[s].width, g[s].height);
      for (size_t i = 0; i < diff.data.size(); ++i) diff.data[i] = g[s + 1].data[i] - g[s].data[i];
      d.push_back(std::move(diff));
    }
    pyr.gauss.push_back(std::move(g));
    pyr.dog.push_back(std::move(d));
  }
  return pyr;
}

bool is_extremum(const std::vector<Grid>& dog, int s, int x, int y) {
  const float v = dog[s].at(x, y);
  for (int ds = -1; ds <= 1; ++ds)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (ds == 0 && dy == 0 && dx == 0) continue;
        const float n = dog[s + ds].at(x + dx, y + dy);
        if (v > 0.0f && n >= v) return false;
        if (v < 0.0f && n <= v) return false;
      }
  return v != 0.0f;
}

struct RefinedPoint {
  double x, y, s;  // octave pixel coords and continuous layer
  double response;
};

// Quadratic fit of the difference response around a lattice extremum.
bool refine_extremum(const std::vector<Grid>& dog, const SiftParams& p, int s, int x, int y,
                     RefinedPoint& out) {
  const int S = static_cast<int>(dog.size()) - 2;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  double value = 0.0;
  for (int attempt = 0; attempt < 5; ++attempt) {
    const Grid& d0 = dog[s - 1];
    const Grid& d1 = dog[s];
    const Grid& d2 = dog[s + 1];
    value = d1.at(x, y);
    grad = {0.5 * (d1.at(x + 1, y) - d1.at(x - 1, y)),
            0.5 * (d1.at(x, y + 1) - d1.at(x, y - 1)),
            0.5 * (d2.at(x, y) - d0.at(x, y))};
    Eigen::Matrix3d hess;
    hess(0, 0) = d1.at(x + 1, y) - 2.0 * value + d1.at(x - 1, y);
    hess(1, 1) = d1.at(x, y + 1) - 2.0 * value + d1.at(x, y - 1);
    hess(2, 2) = d2.at(x, y) - 2.0 * value + d0.at(x, y);
    hess(0, 1) = hess(1, 0) =
        0.25 * (d1.at(x + 1, y + 1) - d1.at(x - 1, y + 1) - d1.at(x + 1, y - 1) + d1.at(x - 1, y - 1));
    hess(0, 2) = hess(2, 0) =
        0.25 * (d2.at(x + 1, y) - d2.at(x - 1, y) - d0.at(x + 1, y) + d0.at(x - 1, y));
    hess(1, 2) = hess(2, 1) =
        0.25 * (d2.at(x, y + 1) - d2.at(x, y - 1) - d0.at(x, y + 1) + d0.at(x, y - 1));

    const Eigen::FullPivLU<Eigen::Matrix3d> lu(hess);
    if (!lu.isInvertible()) return false;
    offset = lu.solve(-grad);
    if (std::abs(offset.x()) < 0.5 && std::abs(offset.y()) < 0.5 && std::abs(offset.z()) < 0.5)
      break;
    x += static_cast<int>(std::lround(offset.x()));
    y += static_cast<int>(std::lround(offset.y()));
    s += static_cast<int>(std::lround(offset.z()));
    if (s < 1 || s > S || x < kBorder || y < kBorder || x >= d1.width - kBorder ||
        y >= d1.height - kBorder)
      return false;
    if (attempt == 4) return false;
  }

  const double refined = value + 0.5 * grad.dot(offset);
  if (std::abs(refined) < p.contrast_threshold) return false;

  // principal curvature ratio on the spatial Hessian
  const Grid& d1 = dog[s];
  const double dxx = d1.at(x + 1, y) - 2.0 * d1.at(x, y) + d1.at(x - 1, y);
  const double dyy = d1.at(x, y + 1) - 2.0 * d1.at(x, y) + d1.at(x, y - 1);
  const double dxy =
      0.25 * (d1.at(x + 1, y + 1) - d1.at(x - 1, y + 1) - d1.at(x + 1, y - 1) + d1.at(x - 1, y - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  const double r = p.edge_ratio;
  if (det <= 0.0 || tr * tr * r >= det * (r + 1.0) * (r + 1.0)) return false;

  out = {x + offset.x(), y + offset.y(), s + offset.z(), std::abs(refined)};
  return true;
}

// Gaussian-weighted gradient direction histogram around (x, y).
std::vector<double> orientation_histogram(const Grid& img, double x, double y, double sigma,
                                          int bins) {
  std::vector<double> hist(bins, 0.0);
  const int radius = static_cast<int>(std::lround(3.0 * sigma));
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  for (int j = -radius; j <= radius; ++j) {
    for (int i = -radius; i <= radius; ++i) {
      const int px = cx + i, py = cy + j;
      if (px < 1 || py < 1 || px >= img.width - 1 || py >= img.height - 1) continue;
      const double gx = 0.5 * (img.at(px + 1, py) - img.at(px - 1, py));
      const double gy = 0.5 * (img.at(px, py + 1) - img.at(px, py - 1));
      const double mag = std::hypot(gx, gy);
      const double dir = std::atan2(gy, gx);
      const double w = std::exp(-0.5 * (i * i + j * j) / (sigma * sigma));
      int bin = static_cast<int>(std::floor((dir + kPi) / (2.0 * kPi) * bins));
      bin = ((bin % bins) + bins) % bins;
      hist[bin] += w * mag;
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> sm(bins);
    for (int b = 0; b < bins; ++b)
      sm[b] = 0.25 * hist[(b + bins - 1) % bins] + 0.5 * hist[b] + 0.25 * hist[(b + 1) % bins];
    hist.swap(sm);
  }
  return hist;
}

std::array<float, 128> compute_descriptor(const Grid& img, double x, double y, double scale,
                                          double angle, double clamp_at) {
  const double hist_width = 3.0 * scale;
  const double cos_t = std::cos(-angle);
  const double sin_t = std::sin(-angle);
  const int radius = static_cast<int>(
      std::lround(hist_width * std::sqrt(2.0) * (kDescWidth + 1) * 0.5));
  const double exp_scale = -2.0 / (kDescWidth * kDescWidth);

  // (d + 2)^2 cells so trilinear spill has somewhere to go; borders dropped
  double raw[kDescWidth + 2][kDescWidth + 2][kDescBins] = {};
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  for (int j = -radius; j <= radius; ++j) {
    for (int i = -radius; i <= radius; ++i) {
      const double rx = (cos_t * i - sin_t * j) / hist_width;
      const double ry = (sin_t * i + cos_t * j) / hist_width;
      const double cbin = rx + kDescWidth / 2.0 - 0.5;
      const double rbin = ry + kDescWidth / 2.0 - 0.5;
      if (cbin <= -1.0 || cbin >= kDescWidth || rbin <= -1.0 || rbin >= kDescWidth) continue;
      const int px = cx + i, py = cy + j;
      if (px < 1 || py < 1 || px >= img.width - 1 || py >= img.height - 1) continue;

      const double gx = 0.5 * (img.at(px + 1, py) - img.at(px - 1, py));
      const double gy = 0.5 * (img.at(px, py + 1) - img.at(px, py - 1));
      const double mag = std::hypot(gx, gy);
      double dir = std::atan2(gy, gx) - angle;
      while (dir < 0.0) dir += 2.0 * kPi;
      while (dir >= 2.0 * kPi) dir -= 2.0 * kPi;
      const double obin = dir / (2.0 * kPi) * kDescBins;
      const double w = std::exp(exp_scale * (rx * rx + ry * ry)) * mag;

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      const int o0 = static_cast<int>(std::floor(obin));
      const double dr = rbin - r0, dc = cbin - c0, dob = obin - o0;
      for (int ri = 0; ri <= 1; ++ri) {
        const int rr = r0 + ri + 1;
        if (rr < 0 || rr >= kDescWidth + 2) continue;
        const double wr = w * (ri ? dr : 1.0 - dr);
        for (int ci = 0; ci <= 1; ++ci) {
          const int cc = c0 + ci + 1;
          if (cc < 0 || cc >= kDescWidth + 2) continue;
          const double wc = wr * (ci ? dc : 1.0 - dc);
          for (int oi = 0; oi <= 1; ++oi) {
            const int oo = (o0 + oi) % kDescBins;
            raw[rr][cc][oo] += wc * (oi ? dob : 1.0 - dob);
          }
        }
      }
    }
  }

  std::array<float, 128> desc {};
  int idx = 0;
  for (int r = 1; r <= kDescWidth; ++r)
    for (int c = 1; c <= kDescWidth; ++c)
      for (int o = 0; o < kDescBins; ++o) desc[idx++] = static_cast<float>(raw[r][c][o]);

  auto renorm = [&desc] {
    double n2 = 0.0;
    for (float v : desc) n2 += static_cast<double>(v) * v;
    const double inv = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
    for (float& v : desc) v = static_cast<float>(v * inv);
  };
  renorm();
  for (float& v : desc) v = std::min(v, static_cast<float>(clamp_at));
  renorm();
  return desc;
}

}  // namespace

std::vector<SiftKeypoint> detect_sift(const Grid& image, const SiftParams& params) {
  std::vector<SiftKeypoint> keypoints;
  const float maxv = image.max_value();
  if (maxv <= 0.0f || image.width < 2 * kBorder + 2 || image.height < 2 * kBorder + 2)
    return keypoints;
  Grid base(image.width, image.height);
  for (size_t i = 0; i < base.data.size(); ++i) base.data[i] = image.data[i] / maxv;

  SiftParams eff = params;
  double scale_out = 1.0;
  if (params.upsample) {
    base = upsample2(base);
    eff.assumed_blur *= 2.0;
    scale_out = 0.5;
  }

  const int min_dim = std::min(base.width, base.height);
  int octaves = 1;
  while ((min_dim >> octaves) >= 16) ++octaves;
  if (params.n_octaves > 0) octaves = std::min(octaves, params.n_octaves);

  const Pyramid pyr = build_pyramid(base, eff, octaves);
  const int S = params.intervals;

  for (int o = 0; o < octaves; ++o) {
    const std::vector<Grid>& dog = pyr.dog[o];
    const double pre_thresh = 0.5 * params.contrast_threshold;
    for (int s = 1; s <= S; ++s) {
      const Grid& d = dog[s];
      for (int y = kBorder; y < d.height - kBorder; ++y) {
        for (int x = kBorder; x < d.width - kBorder; ++x) {
          if (std::abs(d.at(x, y)) < pre_thresh) continue;
          if (!is_extremum(dog, s, x, y)) continue;
          RefinedPoint rp;
          if (!refine_extremum(dog, params, s, x, y, rp)) continue;

          const double octave_scale = params.sigma0 * std::pow(2.0, rp.s / S);
          const int layer = std::clamp(static_cast<int>(std::lround(rp.s)), 1, S);
          const Grid& gimg = pyr.gauss[o][layer];
          const std::vector<double> hist = orientation_histogram(
              gimg, rp.x, rp.y, 1.5 * octave_scale, params.orientation_bins);
          const double peak = *std::max_element(hist.begin(), hist.end());
          if (peak <= 0.0) continue;

          const int bins = params.orientation_bins;
          for (int b = 0; b < bins; ++b) {
            const double l = hist[(b + bins - 1) % bins];
            const double c = hist[b];
            const double r = hist[(b + 1) % bins];
            if (c <= l || c <= r || c < params.orientation_peak_ratio * peak) continue;
            const double interp = 0.5 * (l - r) / (l - 2.0 * c + r);
            const double angle = ((b + interp + 0.5) / bins) * 2.0 * kPi - kPi;

            SiftKeypoint kp;
            kp.x = rp.x * (1 << o) * scale_out;
            kp.y = rp.y * (1 << o) * scale_out;
            kp.sigma = octave_scale * (1 << o) * scale_out;
            kp.angle = wrap_angle(angle);
            kp.response = rp.response;
            kp.descriptor = compute_descriptor(gimg, rp.x, rp.y, octave_scale, kp.angle,
                                               params.descriptor_clamp);
            keypoints.push_back(kp);
          }
        }
      }
    }
  }
  return keypoints;
}

std::vector<FeatureMatch> match_features(const std::vector<SiftKeypoint>& query,
                                         const std::vector<SiftKeypoint>& train,
                                         double ratio) {
  std::vector<FeatureMatch> out;
  if (train.size() < 2) return out;

  std::map<int, FeatureMatch> by_train;  // keeps the closest query per train feature
  for (int qi = 0; qi < static_cast<int>(query.size()); ++qi) {
    double best = std::numeric_limits<double>::max();
    double second = std::numeric_limits<double>::max();
    int best_ti = -1;
    for (int ti = 0; ti < static_cast<int>(train.size()); ++ti) {
      double d2 = 0.0;
      const auto& qa = query[qi].descriptor;
      const auto& tb = train[ti].descriptor;
      for (int k = 0; k < 128; ++k) {
        const double diff = qa[k] - tb[k];
        d2 += diff * diff;
      }
      if (d2 < best) {
        second = best;
        best = d2;
        best_ti = ti;
      } else if (d2 < second) {
        second = d2;
      }
    }
    if (best_ti < 0 || std::sqrt(best) >= ratio * std::sqrt(second)) continue;
    const FeatureMatch m{qi, best_ti, std::sqrt(best)};
    auto it = by_train.find(best_ti);
    if (it == by_train.end() || m.distance < it->second.distance) by_train[best_ti] = m;
  }
  for (const auto& [ti, m] : by_train) out.push_back(m);
  std::sort(out.begin(), out.end(),
            [](const FeatureMatch& a, const FeatureMatch& b) { return a.query_idx < b.query_idx; });
  return out;
}

}  // namespace rslam
