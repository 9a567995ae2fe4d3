#include "oracles.hpp"
#include "suites.hpp"

#include "reid/dve_loss.hpp"
#include "reid/errors.hpp"
#include "reid/losses.hpp"
#include "reid/rng.hpp"
#include "reid/warp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace reid::loss {
namespace {

using testing::LossKind;

TEST(IdLoss, UniformLogitsGiveLogC) {
  const Matrix logits = Matrix::Zero(3, 4);
  const std::vector<int> t{0, 2, 3};
  for (double eps : {0.0, 0.1, 0.7}) EXPECT_NEAR(id_loss(logits, t, eps), std::log(4.0), 1e-12);
}

TEST(IdLoss, HandBuiltLogitVector) {
  Matrix logits = Matrix::Zero(1, 4);
  logits(0, 0) = std::log(9.0);
  const std::vector<int> t{0};
  EXPECT_NEAR(id_loss(logits, t, 0.0), -std::log(0.75), 1e-12);
}

TEST(IdLoss, SmoothedTwoClass) {
  Matrix logits(1, 2);
  logits << std::log(0.9), std::log(0.1);
  const std::vector<int> t{0};
  EXPECT_NEAR(id_loss(logits, t, 0.1), -(0.95 * std::log(0.9) + 0.05 * std::log(0.1)), 1e-12);
}

TEST(IdLoss, TargetOutOfRangeNamesRow) {
  const Matrix logits = Matrix::Zero(2, 3);
  const std::vector<int> t{0, 3};
  try {
    id_loss(logits, t);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(LrLoss, Examples) {
  const Vector zero = Vector::Zero(2);
  const std::vector<int> both{0, 1};
  EXPECT_NEAR(lr_loss(zero, both), 0.693147, 1e-6);
  Vector z(1);
  z << std::log(9.0);  // sigmoid = 0.9
  EXPECT_NEAR(lr_loss(z, std::vector<int>{1}), 0.105361, 1e-6);
  EXPECT_NEAR(lr_loss(z, std::vector<int>{0}), 2.302585, 1e-6);
}

TEST(LrLoss, StableForLargeLogits) {
  Vector z(2);
  z << 800.0, -800.0;
  EXPECT_NEAR(lr_loss(z, std::vector<int>{0, 1}), 800.0, 1e-9);
}

TEST(LrLoss, NonBinaryTargetThrows) {
  EXPECT_THROW(lr_loss(Vector::Zero(1), std::vector<int>{2}), InputError);
}

TEST(CircleLoss, Examples) {
  EXPECT_NEAR(circle_loss({{0.5}, {0.5}}, {1.0, 0.25}), std::log(1.0 + std::exp(0.375)), 1e-12);
  EXPECT_NEAR(circle_loss({{0.5}, {0.5}}, {1.0, 0.25}), 0.898, 5e-4);
  EXPECT_NEAR(circle_loss({{1.0}, {-0.25}}, {64.0, 0.25}), std::log1p(std::exp(-4.0)), 1e-12);
  EXPECT_NEAR(circle_loss({{1.0}, {-0.25}}, {64.0, 0.25}), 0.018150, 5e-7);
}

TEST(CircleLoss, EmptySetIsExactlyZero) {
  EXPECT_EQ(circle_loss({{}, {0.3, 0.9}}, {}), 0.0);
  EXPECT_EQ(circle_loss({{0.1}, {}}, {}), 0.0);
}

TEST(CircleLoss, DetachKeepsValue) {
  const SimilaritySets s{{0.2, 0.7}, {0.4, -0.1, 0.6}};
  EXPECT_EQ(circle_loss(s, {64.0, 0.25, false}), circle_loss(s, {64.0, 0.25, true}));
}

TEST(CircleLoss, MonotoneInEachSimilarity) {
  Rng rng(11);
  const CircleParams p{32.0, 0.25};
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    SimilaritySets s;
    for (int i = 0; i < 3; ++i) s.s_p.push_back(uniform(rng, 0.0, 1.0));
    for (int i = 0; i < 4; ++i) s.s_n.push_back(uniform(rng, 0.0, 1.0));
    const double base = circle_loss(s, p);
    for (std::size_t j = 0; j < s.s_n.size(); ++j) {
      auto up = s;
      up.s_n[j] = std::min(1.0, up.s_n[j] + 0.05);
      EXPECT_GE(circle_loss(up, p), base);
    }
    for (std::size_t i = 0; i < s.s_p.size(); ++i) {
      auto up = s;
      up.s_p[i] = std::min(1.0, up.s_p[i] + 0.05);
      EXPECT_LE(circle_loss(up, p), base);
    }
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(PairwiseSets, IdenticalVectorsSameLabel) {
  const Matrix e = Matrix::Ones(3, 4);
  const std::vector<int> labels{5, 5, 5};
  const auto sets = pairwise_sets(e, labels);
  ASSERT_EQ(sets.size(), 3u);
  for (const auto& s : sets) {
    ASSERT_EQ(s.s_p.size(), 2u);  // self excluded
    EXPECT_TRUE(s.s_n.empty());
    for (double v : s.s_p) EXPECT_NEAR(v, 1.0, 1e-12);
  }
  EXPECT_EQ(batch_circle_loss(e, labels, {}).loss, 0.0);
}

TEST(PairwiseSets, OrthogonalClasses) {
  Matrix e = Matrix::Zero(4, 3);
  e(0, 0) = e(1, 0) = 2.0;
  e(2, 1) = e(3, 1) = 0.5;
  const std::vector<int> labels{0, 0, 1, 1};
  for (const auto& s : pairwise_sets(e, labels)) {
    ASSERT_EQ(s.s_p.size(), 1u);
    ASSERT_EQ(s.s_n.size(), 2u);
    EXPECT_NEAR(s.s_p[0], 1.0, 1e-12);
    for (double v : s.s_n) EXPECT_NEAR(v, 0.0, 1e-12);
  }
}

TEST(BatchCircleLoss, AnchorsWithoutPositiveAreCounted) {
  Matrix e(3, 2);
  e << 1, 0, 0.8, 0.6, 0, 1;
  const auto r = batch_circle_loss(e, std::vector<int>{0, 0, 1}, {});
  EXPECT_EQ(r.anchors, 2);
  EXPECT_EQ(r.anchors_without_positive, 1);
}

DveInputs grid2x2(double tau) {
  DveInputs in;
  in.height = in.width = 2;
  in.temperature = tau;
  in.warp = Matrix(4, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      in.warp(y * 2 + x, 0) = grid_coord(x, 2);
      in.warp(y * 2 + x, 1) = grid_coord(y, 2);
    }
  return in;
}

TEST(DveLoss, OrthonormalIdentityCollapses) {
  auto in = grid2x2(0.01);
  in.phi_x = in.phi_xprime = in.phi_aux = Matrix::Identity(4, 4);
  EXPECT_LT(dve_loss(in).loss, 1e-20);
}

TEST(DveLoss, IdenticalDescriptorsGiveMeanDistance) {
  auto in = grid2x2(1.0);
  in.phi_x = in.phi_xprime = in.phi_aux = Matrix::Constant(4, 3, 1.0 / std::sqrt(3.0));
  // Cell centres at +-0.5: per u, distances {0, 1, 1, sqrt 2} averaged.
  EXPECT_NEAR(dve_loss(in).loss, (2.0 + std::sqrt(2.0)) / 4.0, 1e-12);
}

TEST(DveLoss, MatchRowsSumToOne) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    auto in = grid2x2(uniform(rng, 0.1, 1.0));
    in.phi_x = Matrix::Random(4, 5);
    in.phi_xprime = Matrix::Random(4, 5);
    in.phi_aux = Matrix::Random(4, 5);
    const auto r = dve_loss(in, nullptr, true);
    ASSERT_EQ(r.match.rows(), 4);
    for (Eigen::Index u = 0; u < 4; ++u) EXPECT_NEAR(r.match.row(u).sum(), 1.0, 1e-6);
  }
}

TEST(DveLoss, AuxiliaryPermutationInvariant) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    DveInputs in;
    in.height = 3;
    in.width = 4;
    in.temperature = 0.5;
    in.phi_x = Matrix::Random(12, 6);
    in.phi_xprime = Matrix::Random(12, 6);
    in.phi_aux = Matrix::Random(12, 6);
    in.warp = Matrix::Random(12, 2) * 0.9;
    std::vector<int> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm.begin(), perm.end(), rng);
    DveInputs p = in;
    for (int w = 0; w < 12; ++w) p.phi_aux.row(w) = in.phi_aux.row(perm[static_cast<std::size_t>(w)]);
    EXPECT_NEAR(dve_loss(in).loss, dve_loss(p).loss, 1e-12);
  }
}

TEST(DveLoss, OutOfSquareWarpIsClampedAndCounted) {
  auto in = grid2x2(1.0);
  in.phi_x = in.phi_xprime = in.phi_aux = Matrix::Identity(4, 4);
  in.warp(0, 0) = -1.7;
  in.warp(3, 1) = 1.2;
  EXPECT_EQ(dve_loss(in).clamped, 2);
}

TEST(DveLoss, NonFiniteDescriptorThrows) {
  auto in = grid2x2(1.0);
  in.phi_x = in.phi_xprime = in.phi_aux = Matrix::Identity(4, 4);
  in.phi_aux(1, 1) = std::nan("");
  EXPECT_THROW(dve_loss(in), NonFiniteError);
}

TEST(TotalLoss, Examples) {
  const LossWeights w{2.0, 0.2};
  EXPECT_NEAR(total_loss({1.0, 1.0, 1.0, 1.0}, w).total, 4.2, 1e-12);
  EXPECT_EQ(total_loss({0.0, 0.0, 0.0, 0.0}, w).total, 0.0);
  EXPECT_EQ(total_loss({0.3, 0.4, 5.0, 7.0}, {0.0, 0.0}).total, 0.3 + 0.4);
}

TEST(TotalLoss, ZeroLambdaIgnoresDve) {
  const LossWeights w{2.0, 0.0};
  EXPECT_EQ(total_loss({1.0, 0.5, 0.25, 3.0}, w).total, total_loss({1.0, 0.5, 0.25, 99.0}, w).total);
}

TEST(TotalLoss, DisabledTermIsSkipped) {
  const auto b = total_loss({1.0, std::nullopt, 1.0, std::nullopt}, {2.0, 0.2});
  EXPECT_EQ(b.total, 3.0);
  EXPECT_EQ(b.w_lr, 0.0);
  EXPECT_EQ(b.w_dve, 0.0);
}

TEST(TotalLoss, NonFiniteTermIsNamed) {
  try {
    total_loss({1.0, 1.0, std::numeric_limits<double>::infinity(), 1.0}, {});
    FAIL();
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("L_reID"), std::string::npos);
  }
}

class OracleSuite : public ::testing::TestWithParam<LossKind> {};

TEST_P(OracleSuite, MatchesLiteralTranscription) {
  const auto r = testing::loss_oracle_suite(GetParam(), 150, 1234);
  EXPECT_TRUE(r.ok(100)) << r.failures << " failures, worst " << r.worst;
}

TEST_P(OracleSuite, AnalyticGradientMatchesFiniteDifferences) {
  const auto r = testing::gradient_suite(GetParam(), 30, 99);
  EXPECT_TRUE(r.ok(20)) << r.failures << " failures, worst " << r.worst;
}

INSTANTIATE_TEST_SUITE_P(AllLosses, OracleSuite,
                         ::testing::Values(LossKind::id, LossKind::lr, LossKind::circle, LossKind::dve),
                         [](const auto& info) { return std::string(testing::to_string(info.param)); });

TEST(DetachedCircleGradient, DropsOnlyTheWeightDerivative) {
  const SimilaritySets s{{0.6}, {0.3}};
  SimilaritySets full, det;
  circle_loss(s, {8.0, 0.25, false}, &full);
  circle_loss(s, {8.0, 0.25, true}, &det);
  // Same sign, smaller magnitude: the detached form omits the clamp-weight term.
  EXPECT_LT(det.s_p[0], 0.0);
  EXPECT_GT(det.s_n[0], 0.0);
  EXPECT_LT(std::abs(det.s_p[0]), std::abs(full.s_p[0]));
  EXPECT_LT(std::abs(det.s_n[0]), std::abs(full.s_n[0]));
}

}  // namespace
}  // namespace reid::loss

namespace reid::warp {
namespace {

TEST(SampleWarp, ZeroStrengthIsIdentity) {
  const auto s = sample_warp(42, 0.0);
  EXPECT_TRUE(s.field.is_identity());
  const auto g = warp_grid(s.field, 3, 5);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) {
      EXPECT_NEAR(g(y * 5 + x, 0), loss::grid_coord(x, 5), 1e-15);
      EXPECT_NEAR(g(y * 5 + x, 1), loss::grid_coord(y, 3), 1e-15);
    }
}

TEST(SampleWarp, SameSeedSameGrid) {
  EXPECT_EQ(warp_grid(sample_warp(7, 1.0).field, 8, 8), warp_grid(sample_warp(7, 1.0).field, 8, 8));
  EXPECT_NE(warp_grid(sample_warp(7, 1.0).field, 8, 8), warp_grid(sample_warp(8, 1.0).field, 8, 8));
}

TEST(SampleWarp, JacobianPositiveOnSampledGrids) {
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    for (double strength : {0.5, 1.0, 3.0}) EXPECT_GT(sample_warp(seed, strength).field.min_jacobian_det(), 0.0);
}

TEST(SampleWarp, AnalyticJacobianMatchesNumeric) {
  const auto f = sample_warp(3, 1.0).field;
  const double h = 1e-6;
  for (double y : {-0.7, 0.0, 0.4})
    for (double x : {-0.5, 0.2, 0.9}) {
      const auto j = f.jacobian({x, y});
      const auto px = f.apply({x + h, y}), mx = f.apply({x - h, y});
      const auto py = f.apply({x, y + h}), my = f.apply({x, y - h});
      EXPECT_NEAR(j[0], (px[0] - mx[0]) / (2 * h), 1e-6);
      EXPECT_NEAR(j[1], (py[0] - my[0]) / (2 * h), 1e-6);
      EXPECT_NEAR(j[2], (px[1] - mx[1]) / (2 * h), 1e-6);
      EXPECT_NEAR(j[3], (py[1] - my[1]) / (2 * h), 1e-6);
    }
}

TEST(SampleWarp, InverseRoundTrip) {
  const auto f = sample_warp(21, 1.0).field;
  for (double y : {-0.8, -0.1, 0.6})
    for (double x : {-0.6, 0.3, 0.8}) {
      const auto q = f.apply({x, y});
      const auto p = f.inverse(q);
      EXPECT_NEAR(p[0], x, 1e-9);
      EXPECT_NEAR(p[1], y, 1e-9);
    }
}

TEST(SampleWarp, NegativeStrengthThrows) { EXPECT_THROW(sample_warp(1, -0.5), InputError); }

}  // namespace
}  // namespace reid::warp
