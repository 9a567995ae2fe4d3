#include "reid/dve_loss.hpp"

#include "reid/errors.hpp"

#include <algorithm>
#include <cmath>

namespace reid::loss {
namespace {

void softmax_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
}

// Backward of a row-wise softmax: dz = p * (dp - <p, dp>).
Matrix softmax_backward(const Matrix& p, const Matrix& dp) {
  Matrix dz = p.cwiseProduct(dp);
  for (Eigen::Index i = 0; i < p.rows(); ++i) dz.row(i) -= p.row(i) * dz.row(i).sum();
  return dz;
}

}  // namespace

DveResult dve_loss(const DveInputs& in, DveGrads* grads, bool keep_match) {
  const Eigen::Index u = static_cast<Eigen::Index>(in.height) * in.width;
  if (u <= 0) throw InputError("dve_loss: empty descriptor grid");
  auto check = [&](const Matrix& m, const char* name) {
    if (m.rows() != u) throw InputError(std::string("dve_loss: ") + name + " has wrong pixel count");
    if (m.cols() != in.phi_x.cols()) throw InputError(std::string("dve_loss: ") + name + " has wrong channel count");
    if (!m.allFinite()) throw NonFiniteError(std::string("dve_loss: non-finite value in ") + name);
  };
  check(in.phi_x, "phi_x");
  check(in.phi_xprime, "phi_xprime");
  check(in.phi_aux, "phi_aux");
  if (in.warp.rows() != u || in.warp.cols() != 2) throw InputError("dve_loss: warp grid must be (h w) x 2");
  if (!in.warp.allFinite()) throw NonFiniteError("dve_loss: non-finite warp coordinate");
  if (!(in.temperature > 0.0)) throw InputError("dve_loss: temperature must be positive");
  const double inv_t = 1.0 / in.temperature;

  DveResult res;
  Matrix dist(u, u);
  for (Eigen::Index a = 0; a < u; ++a) {
    double gx = in.warp(a, 0), gy = in.warp(a, 1);
    if (gx < -1.0 || gx > 1.0 || gy < -1.0 || gy > 1.0) {
      ++res.clamped;
      gx = std::clamp(gx, -1.0, 1.0);
      gy = std::clamp(gy, -1.0, 1.0);
    }
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        const double dx = grid_coord(x, in.width) - gx;
        const double dy = grid_coord(y, in.height) - gy;
        dist(a, static_cast<Eigen::Index>(y) * in.width + x) = std::sqrt(dx * dx + dy * dy);
      }
  }

  Matrix a_mat = (in.phi_x * in.phi_aux.transpose()) * inv_t;
  softmax_rows(a_mat);
  const Matrix hat = a_mat * in.phi_aux;
  Matrix p = (hat * in.phi_xprime.transpose()) * inv_t;
  softmax_rows(p);
  res.loss = p.cwiseProduct(dist).sum() / static_cast<double>(u);

  if (grads) {
    const Matrix ds2 = softmax_backward(p, dist / static_cast<double>(u));
    const Matrix dhat = ds2 * in.phi_xprime * inv_t;
    grads->phi_xprime = ds2.transpose() * hat * inv_t;
    const Matrix da = dhat * in.phi_aux.transpose();
    const Matrix ds1 = softmax_backward(a_mat, da);
    grads->phi_aux = a_mat.transpose() * dhat + ds1.transpose() * in.phi_x * inv_t;
    grads->phi_x = ds1 * in.phi_aux * inv_t;
  }
  if (keep_match) res.match = std::move(p);
  return res;
}

}  // namespace reid::loss
