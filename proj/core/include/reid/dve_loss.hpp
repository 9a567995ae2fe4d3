#pragma once

#include "reid/losses.hpp"

namespace reid::loss {

/// Pixel-centre coordinate of column (or row) index i on an axis of n cells, in [-1, 1].
inline double grid_coord(int i, int n) { return (2.0 * i + 1.0) / n - 1.0; }

/// Descriptor fields are flattened row-major over an h x w grid: row u = y * w + x, one column per channel.
struct DveInputs {
  int height = 0, width = 0;
  Matrix phi_x;       ///< source descriptors, (h w) x D
  Matrix phi_xprime;  ///< descriptors of the warped image x' = g x
  Matrix phi_aux;     ///< descriptors of the auxiliary image x_alpha
  Matrix warp;        ///< (h w) x 2: g(u) as (x, y) in normalized coordinates
  double temperature = 0.125;
};

struct DveResult {
  double loss = 0.0;
  int clamped = 0;  ///< warp targets pulled back into [-1, 1]
  Matrix match;     ///< p(v | u), (h w) x (h w); filled when requested
};

struct DveGrads {
  Matrix phi_x, phi_xprime, phi_aux;
};

/// Exchange form: A = softmax_w(<phi_x_u, phi_aux_w> / tau), hat_u = sum_w A_uw phi_aux_w,
/// P = softmax_v(<hat_u, phi_x'_v> / tau), loss = mean_u sum_v P_uv |pos(v) - g(u)|.
DveResult dve_loss(const DveInputs& in, DveGrads* grads = nullptr, bool keep_match = false);

}  // namespace reid::loss
