#pragma once

#include "reid/image.hpp"
#include "reid/losses.hpp"

#include <array>
#include <cstdint>

namespace reid::warp {

using Point = std::array<double, 2>;  ///< (x, y) in normalized [-1, 1] coordinates

/// Smooth map g(p) = A p + t + sum_k w_k exp(-|p - c_k|^2 / (2 sigma^2)) with RBF centres on a
/// 3 x 3 lattice. The warped image satisfies x'(g(p)) = x(p).
struct WarpField {
  std::array<double, 4> linear{1.0, 0.0, 0.0, 1.0};  ///< row-major 2x2
  Point translation{0.0, 0.0};
  std::array<Point, 9> weights{};
  double sigma = 0.5;

  Point apply(Point p) const;
  /// Jacobian of g at p, row-major 2x2.
  std::array<double, 4> jacobian(Point p) const;
  double jacobian_det(Point p) const { auto j = jacobian(p); return j[0] * j[3] - j[1] * j[2]; }
  /// g^{-1}(q) by damped Newton iteration started at q.
  Point inverse(Point q) const;
  /// Smallest Jacobian determinant over an n x n lattice spanning the image square.
  double min_jacobian_det(int n = 33) const;
  bool is_identity() const;
};

struct WarpSample {
  WarpField field;
  int attempts = 1;
};

/// Random small affine plus RBF perturbation scaled by `strength` (0 gives the identity).
/// Fold-overs are rejected and redrawn; throws InputError after 32 rejected draws.
WarpSample sample_warp(std::uint64_t seed, double strength);

/// x' = g x by inverse mapping with bilinear sampling; pixels whose pre-image leaves the image get `fill`.
Image warp_image(const Image& image, const WarpField& field, std::uint8_t fill = 0);

/// g(u) at every pixel centre of an h x w grid, flattened row-major, columns (x, y).
loss::Matrix warp_grid(const WarpField& field, int height, int width);

}  // namespace reid::warp
