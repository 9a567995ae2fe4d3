#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reid::loss {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Mean cross-entropy against q = (1 - eps) onehot + eps / C. `grad` (optional) receives dL/dlogits.
double id_loss(const Matrix& logits, std::span<const int> targets, double smoothing = 0.1, Matrix* grad = nullptr);

/// Mean binary cross-entropy on pre-sigmoid logits, targets in {0, 1}.
double lr_loss(const Vector& logits, std::span<const int> targets, Vector* grad = nullptr);

struct CircleParams {
  double gamma = 64.0;
  double margin = 0.25;
  /// Treat the clamped weights as constants in the gradient (the loss value is unchanged).
  bool detach_weights = false;
  void validate() const;
};

/// Within-class (s_p) and between-class (s_n) cosine similarities of one anchor.
struct SimilaritySets {
  std::vector<double> s_p;
  std::vector<double> s_n;
};

/// log(1 + sum_j exp(gamma [s_n + m]_+ (s_n - m)) * sum_i exp(-gamma [1 + m - s_p]_+ (s_p - 1 + m))).
/// The clamps are part of the objective, so the gradient is that of the full expression.
double circle_loss(const SimilaritySets& sims, const CircleParams& params, SimilaritySets* grad = nullptr);

/// Per-anchor similarity sets over all ordered pairs (i, j), i != j.
std::vector<SimilaritySets> pairwise_sets(const Matrix& embeddings, std::span<const int> labels);

struct BatchCircleResult {
  double loss = 0.0;
  int anchors = 0;                 ///< anchors entering the mean
  int anchors_without_positive = 0;
};

/// Mean circle loss over anchors with at least one positive. `grad` receives dL/dembeddings
/// including the normalization Jacobian.
BatchCircleResult batch_circle_loss(const Matrix& embeddings, std::span<const int> labels, const CircleParams& params,
                                    Matrix* grad = nullptr);

struct LossWeights {
  double lambda_reid = 2.0;
  double lambda_dve = 0.2;
  void validate() const;
};

/// Raw loss terms; a missing term is switched off.
struct LossParts {
  std::optional<double> id, lr, reid, dve;
};

struct LossBreakdown {
  double id = 0.0, lr = 0.0, reid = 0.0, dve = 0.0;
  double total = 0.0;
  /// Coefficient each raw term carries in the total (0 when disabled).
  double w_id = 0.0, w_lr = 0.0, w_reid = 0.0, w_dve = 0.0;
};

/// L_ID + L_LR + lambda_reid L_reID + lambda_dve L_DVE. Throws NonFiniteError naming the first
/// enabled term that is NaN or infinite.
LossBreakdown total_loss(const LossParts& parts, const LossWeights& weights);

}  // namespace reid::loss
