#include "reid/warp.hpp"

#include "reid/dve_loss.hpp"
#include "reid/errors.hpp"
#include "reid/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace reid::warp {
namespace {

constexpr double kCentres[3] = {-2.0 / 3.0, 0.0, 2.0 / 3.0};

Point centre(int k) { return {kCentres[k % 3], kCentres[k / 3]}; }

}  // namespace

Point WarpField::apply(Point p) const {
  Point q{linear[0] * p[0] + linear[1] * p[1] + translation[0], linear[2] * p[0] + linear[3] * p[1] + translation[1]};
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int k = 0; k < 9; ++k) {
    const Point c = centre(k);
    const double dx = p[0] - c[0], dy = p[1] - c[1];
    const double phi = std::exp(-(dx * dx + dy * dy) * inv);
    q[0] += weights[static_cast<std::size_t>(k)][0] * phi;
    q[1] += weights[static_cast<std::size_t>(k)][1] * phi;
  }
  return q;
}

std::array<double, 4> WarpField::jacobian(Point p) const {
  std::array<double, 4> j = linear;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int k = 0; k < 9; ++k) {
    const Point c = centre(k);
    const double dx = p[0] - c[0], dy = p[1] - c[1];
    const double phi = std::exp(-(dx * dx + dy * dy) * inv);
    const double gx = -2.0 * inv * dx * phi, gy = -2.0 * inv * dy * phi;
    const Point& w = weights[static_cast<std::size_t>(k)];
    j[0] += w[0] * gx;
    j[1] += w[0] * gy;
    j[2] += w[1] * gx;
    j[3] += w[1] * gy;
  }
  return j;
}

Point WarpField::inverse(Point q) const {
  Point p = q;
  for (int it = 0; it < 30; ++it) {
    const Point g = apply(p);
    const double rx = g[0] - q[0], ry = g[1] - q[1];
    if (rx * rx + ry * ry < 1e-24) break;
    const auto j = jacobian(p);
    const double det = j[0] * j[3] - j[1] * j[2];
    if (std::abs(det) < 1e-12) break;
    p[0] -= (j[3] * rx - j[1] * ry) / det;
    p[1] -= (-j[2] * rx + j[0] * ry) / det;
  }
  return p;
}

double WarpField::min_jacobian_det(int n) const {
  double mn = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const Point p{-1.0 + 2.0 * k / (n - 1), -1.0 + 2.0 * i / (n - 1)};
      mn = std::min(mn, jacobian_det(p));
    }
  return mn;
}

bool WarpField::is_identity() const {
  if (linear != std::array<double, 4>{1.0, 0.0, 0.0, 1.0}) return false;
  if (translation[0] != 0.0 || translation[1] != 0.0) return false;
  return std::all_of(weights.begin(), weights.end(), [](const Point& w) { return w[0] == 0.0 && w[1] == 0.0; });
}

WarpSample sample_warp(std::uint64_t seed, double strength) {
  if (!(strength >= 0.0)) throw InputError("warp strength must be non-negative");
  WarpSample out;
  if (strength == 0.0) return out;
  for (int attempt = 0; attempt < 32; ++attempt) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
    const double s = strength;
    const double angle = uniform(rng, -0.25, 0.25) * s;
    const double scale = 1.0 + uniform(rng, -0.1, 0.1) * s;
    const double shear = uniform(rng, -0.1, 0.1) * s;
    WarpField f;
    const double c = std::cos(angle) * scale, sn = std::sin(angle) * scale;
    f.linear = {c, -sn + shear, sn, c};
    f.translation = {uniform(rng, -0.08, 0.08) * s, uniform(rng, -0.08, 0.08) * s};
    for (auto& w : f.weights) w = {uniform(rng, -0.1, 0.1) * s, uniform(rng, -0.1, 0.1) * s};
    out.attempts = attempt + 1;
    if (f.min_jacobian_det() > 0.0) {
      out.field = f;
      return out;
    }
  }
  throw InputError("warp strength " + std::to_string(strength) + " keeps folding over; lower it");
}

Image warp_image(const Image& image, const WarpField& field, std::uint8_t fill) {
  if (field.is_identity()) return image;
  Image out(image.height, image.width, image.channels, fill);
  const int h = image.height, w = image.width, ch = image.channels;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Point p = field.inverse({loss::grid_coord(x, w), loss::grid_coord(y, h)});
      const double sx = (p[0] + 1.0) * 0.5 * w - 0.5;
      const double sy = (p[1] + 1.0) * 0.5 * h - 0.5;
      if (sx < -0.5 || sy < -0.5 || sx > w - 0.5 || sy > h - 0.5) continue;
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      const int xa = std::clamp(x0, 0, w - 1), xb = std::clamp(x0 + 1, 0, w - 1);
      const int ya = std::clamp(y0, 0, h - 1), yb = std::clamp(y0 + 1, 0, h - 1);
      for (int c = 0; c < ch; ++c) {
        const double v = (1 - fy) * ((1 - fx) * image.at(ya, xa, c) + fx * image.at(ya, xb, c)) +
                         fy * ((1 - fx) * image.at(yb, xa, c) + fx * image.at(yb, xb, c));
        out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  return out;
}

loss::Matrix warp_grid(const WarpField& field, int height, int width) {
  loss::Matrix g(static_cast<Eigen::Index>(height) * width, 2);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Point q = field.apply({loss::grid_coord(x, width), loss::grid_coord(y, height)});
      const auto r = static_cast<Eigen::Index>(y) * width + x;
      g(r, 0) = q[0];
      g(r, 1) = q[1];
    }
  return g;
}

}  // namespace reid::warp
