#include "reid/losses.hpp"

#include "reid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace reid::loss {
namespace {

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double id_loss(const Matrix& logits, std::span<const int> targets, double smoothing, Matrix* grad) {
  const auto n = logits.rows();
  const auto c = logits.cols();
  if (c < 2) throw InputError("id_loss needs at least two classes, got " + std::to_string(c));
  if (static_cast<Eigen::Index>(targets.size()) != n)
    throw InputError("id_loss: " + std::to_string(targets.size()) + " targets for " + std::to_string(n) + " rows");
  if (smoothing < 0.0 || smoothing > 1.0) throw InputError("id_loss: smoothing must lie in [0,1]");
  if (n == 0) throw InputError("id_loss: empty batch");
  if (grad) grad->setZero(n, c);

  const double off = smoothing / static_cast<double>(c);
  double total = 0.0;
  std::vector<double> row(static_cast<std::size_t>(c));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= c)
      throw InputError("id_loss: row " + std::to_string(i) + " has target " + std::to_string(t) + " outside [0," +
                       std::to_string(c) + ")");
    for (Eigen::Index k = 0; k < c; ++k) row[static_cast<std::size_t>(k)] = logits(i, k);
    const double lse = log_sum_exp(row);
    double li = 0.0;
    for (Eigen::Index k = 0; k < c; ++k) {
      const double q = off + (k == t ? 1.0 - smoothing : 0.0);
      const double logp = logits(i, k) - lse;
      li -= q * logp;
      if (grad) (*grad)(i, k) = (std::exp(logp) - q) / static_cast<double>(n);
    }
    total += li;
  }
  return total / static_cast<double>(n);
}

double lr_loss(const Vector& logits, std::span<const int> targets, Vector* grad) {
  const auto n = logits.size();
  if (static_cast<Eigen::Index>(targets.size()) != n)
    throw InputError("lr_loss: " + std::to_string(targets.size()) + " targets for " + std::to_string(n) + " logits");
  if (n == 0) throw InputError("lr_loss: empty batch");
  if (grad) grad->setZero(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = targets[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1)
      throw InputError("lr_loss: row " + std::to_string(i) + " has non-binary target " + std::to_string(y));
    const double z = logits(i);
    // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    total += softplus(z) - y * z;
    if (grad) (*grad)(i) = (sigmoid(z) - y) / static_cast<double>(n);
  }
  return total / static_cast<double>(n);
}

void CircleParams::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("gamma", "must be positive");
  if (!(margin >= 0.0 && margin < 1.0)) throw ConfigError("margin", "must lie in [0,1)");
}

double circle_loss(const SimilaritySets& sims, const CircleParams& params, SimilaritySets* grad) {
  if (grad) {
    grad->s_p.assign(sims.s_p.size(), 0.0);
    grad->s_n.assign(sims.s_n.size(), 0.0);
  }
  if (sims.s_p.empty() || sims.s_n.empty()) return 0.0;
  const double g = params.gamma;
  const double m = params.margin;

  std::vector<double> ln(sims.s_n.size()), lp(sims.s_p.size());
  for (std::size_t j = 0; j < ln.size(); ++j) {
    const double s = sims.s_n[j];
    ln[j] = g * std::max(s + m, 0.0) * (s - m);
  }
  for (std::size_t i = 0; i < lp.size(); ++i) {
    const double s = sims.s_p[i];
    lp[i] = -g * std::max(1.0 + m - s, 0.0) * (s - 1.0 + m);
  }
  const double lse_n = log_sum_exp(ln);
  const double lse_p = log_sum_exp(lp);
  const double z = lse_n + lse_p;
  const double loss = softplus(z);

  if (grad) {
    const double outer = sigmoid(z);
    for (std::size_t j = 0; j < ln.size(); ++j) {
      const double s = sims.s_n[j];
      const double d = params.detach_weights ? g * std::max(s + m, 0.0) : (s + m > 0.0 ? 2.0 * g * s : 0.0);
      grad->s_n[j] = outer * std::exp(ln[j] - lse_n) * d;
    }
    for (std::size_t i = 0; i < lp.size(); ++i) {
      const double s = sims.s_p[i];
      const double d = params.detach_weights ? -g * std::max(1.0 + m - s, 0.0)
                                             : (1.0 + m - s > 0.0 ? -g * (2.0 - 2.0 * s) : 0.0);
      grad->s_p[i] = outer * std::exp(lp[i] - lse_p) * d;
    }
  }
  return loss;
}

namespace {

Matrix normalized_rows(const Matrix& e, Vector& norms) {
  norms.resize(e.rows());
  Matrix u(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    norms(i) = std::max(e.row(i).norm(), 1e-12);
    u.row(i) = e.row(i) / norms(i);
  }
  return u;
}

}  // namespace

std::vector<SimilaritySets> pairwise_sets(const Matrix& embeddings, std::span<const int> labels) {
  const auto n = embeddings.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw InputError("pairwise_sets: label count mismatch");
  Vector norms;
  const Matrix u = normalized_rows(embeddings, norms);
  const Matrix s = u * u.transpose();
  std::vector<SimilaritySets> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      auto& set = out[static_cast<std::size_t>(i)];
      (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? set.s_p : set.s_n).push_back(s(i, j));
    }
  return out;
}

BatchCircleResult batch_circle_loss(const Matrix& embeddings, std::span<const int> labels, const CircleParams& params,
                                    Matrix* grad) {
  const auto n = embeddings.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw InputError("batch_circle_loss: label count mismatch");
  Vector norms;
  const Matrix u = normalized_rows(embeddings, norms);
  const Matrix s = u * u.transpose();

  BatchCircleResult res;
  Matrix ds = Matrix::Zero(n, n);
  std::vector<Eigen::Index> pos, neg;
  for (Eigen::Index i = 0; i < n; ++i) {
    SimilaritySets set;
    pos.clear();
    neg.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        set.s_p.push_back(s(i, j));
        pos.push_back(j);
      } else {
        set.s_n.push_back(s(i, j));
        neg.push_back(j);
      }
    }
    if (set.s_p.empty()) {
      ++res.anchors_without_positive;
      continue;
    }
    ++res.anchors;
    SimilaritySets g;
    res.loss += circle_loss(set, params, grad ? &g : nullptr);
    if (grad) {
      for (std::size_t k = 0; k < pos.size(); ++k) ds(i, pos[k]) += g.s_p[k];
      for (std::size_t k = 0; k < neg.size(); ++k) ds(i, neg[k]) += g.s_n[k];
    }
  }
  if (res.anchors == 0) {
    if (grad) grad->setZero(n, embeddings.cols());
    return res;
  }
  const double inv = 1.0 / res.anchors;
  res.loss *= inv;
  if (grad) {
    ds *= inv;
    const Matrix du = (ds + ds.transpose()) * u;
    grad->resize(n, embeddings.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double proj = u.row(i).dot(du.row(i));
      grad->row(i) = (du.row(i) - proj * u.row(i)) / norms(i);
    }
  }
  return res;
}

void LossWeights::validate() const {
  if (!(lambda_reid >= 0.0)) throw ConfigError("lambda_reid", "must be non-negative");
  if (!(lambda_dve >= 0.0)) throw ConfigError("lambda_dve", "must be non-negative");
}

LossBreakdown total_loss(const LossParts& parts, const LossWeights& weights) {
  LossBreakdown b;
  auto take = [](const char* name, const std::optional<double>& v, double w, double& raw, double& coeff) {
    if (!v || w == 0.0) return 0.0;
    if (!std::isfinite(*v)) throw NonFiniteError("loss term " + std::string(name) + " is not finite");
    raw = *v;
    coeff = w;
    return w * *v;
  };
  b.total += take("L_ID", parts.id, 1.0, b.id, b.w_id);
  b.total += take("L_LR", parts.lr, 1.0, b.lr, b.w_lr);
  b.total += take("L_reID", parts.reid, weights.lambda_reid, b.reid, b.w_reid);
  b.total += take("L_DVE", parts.dve, weights.lambda_dve, b.dve, b.w_dve);
  return b;
}

}  // namespace reid::loss
