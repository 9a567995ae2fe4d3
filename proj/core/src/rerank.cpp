#include "reid/evaluation.hpp"

#include "reid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace reid::eval {

void RerankParams::validate() const {
  if (k1 < 1) throw ConfigError("k1", "must be at least 1");
  if (k2 < 1) throw ConfigError("k2", "must be at least 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda", "must lie in [0,1]");
}

namespace {

// Rows of `dist` ranked ascending; equal distances keep index order.
std::vector<std::vector<int>> initial_ranks(const Matrix& dist) {
  const int n = static_cast<int>(dist.rows());
  std::vector<std::vector<int>> ranks(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& r = ranks[static_cast<std::size_t>(i)];
    r.resize(static_cast<std::size_t>(n));
    std::iota(r.begin(), r.end(), 0);
    std::stable_sort(r.begin(), r.end(), [&](int a, int b) { return dist(i, a) < dist(i, b); });
  }
  return ranks;
}

std::vector<int> k_reciprocal(const std::vector<std::vector<int>>& ranks, int i, int k) {
  std::vector<int> out;
  const auto& fwd = ranks[static_cast<std::size_t>(i)];
  for (int a = 0; a <= k && a < static_cast<int>(fwd.size()); ++a) {
    const int cand = fwd[static_cast<std::size_t>(a)];
    const auto& back = ranks[static_cast<std::size_t>(cand)];
    for (int b = 0; b <= k && b < static_cast<int>(back.size()); ++b)
      if (back[static_cast<std::size_t>(b)] == i) {
        out.push_back(cand);
        break;
      }
  }
  return out;
}

}  // namespace

RerankOutput rerank_distance(const Matrix& similarity, const RerankParams& params) {
  params.validate();
  const int n = static_cast<int>(similarity.rows());
  if (similarity.cols() != n || n == 0) throw InputError("rerank: similarity must be a non-empty square matrix");
  RerankOutput out;
  out.k1_used = params.k1;
  out.k2_used = params.k2;
  if (out.k1_used >= n) {
    out.k1_used = n - 1;
    out.warnings.push_back("k1=" + std::to_string(params.k1) + " >= N=" + std::to_string(n) + "; clamped to " +
                           std::to_string(out.k1_used));
  }
  if (out.k2_used > n) {
    out.k2_used = n;
    out.warnings.push_back("k2=" + std::to_string(params.k2) + " > N=" + std::to_string(n) + "; clamped to " +
                           std::to_string(n));
  }
  const int k1 = out.k1_used, k2 = out.k2_used;

  Matrix orig = (2.0 - 2.0 * similarity.array()).cwiseMax(0.0).matrix();
  const double mx = orig.maxCoeff();
  if (mx > 0.0) orig /= mx;
  const auto ranks = initial_ranks(orig);

  Matrix v = Matrix::Zero(n, n);
  const int half = static_cast<int>(std::lround(k1 / 2.0));
  for (int i = 0; i < n; ++i) {
    const auto recip = k_reciprocal(ranks, i, k1);
    std::vector<int> expansion = recip;
    for (int cand : recip) {
      const auto cand_recip = k_reciprocal(ranks, cand, half);
      int common = 0;
      for (int c : cand_recip)
        if (std::find(recip.begin(), recip.end(), c) != recip.end()) ++common;
      if (static_cast<double>(common) > 2.0 / 3.0 * static_cast<double>(cand_recip.size()))
        expansion.insert(expansion.end(), cand_recip.begin(), cand_recip.end());
    }
    std::sort(expansion.begin(), expansion.end());
    expansion.erase(std::unique(expansion.begin(), expansion.end()), expansion.end());
    double total = 0.0;
    for (int j : expansion) total += std::exp(-orig(i, j));
    for (int j : expansion) v(i, j) = std::exp(-orig(i, j)) / total;
  }

  if (k2 != 1) {
    Matrix qe = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < k2; ++a) qe.row(i) += v.row(ranks[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]);
      qe.row(i) /= k2;
    }
    v = std::move(qe);
  }

  Matrix jaccard(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double inter = 0.0;
      for (int k = 0; k < n; ++k) inter += std::min(v(i, k), v(j, k));
      jaccard(i, j) = 1.0 - inter / (2.0 - inter);
    }
  out.distance = jaccard * (1.0 - params.lambda) + orig * params.lambda;
  return out;
}

RankingResult rerank(const FeatureStore& store, ProtocolKind protocol, const RerankParams& params,
                     std::vector<std::string>* warnings) {
  store.validate();
  const Matrix sim = cosine_similarity(store);
  RerankOutput r = rerank_distance(sim, params);
  if (warnings) warnings->insert(warnings->end(), r.warnings.begin(), r.warnings.end());
  return rank_by_distance(store, protocol, r.distance, sim);
}

}  // namespace reid::eval
