#pragma once

// Randomized verification suites shared by the unit tests and the acceptance binary.

#include <cstdint>
#include <string>

namespace reid::testing {

struct SuiteResult {
  int instances = 0;
  double worst = 0.0;  ///< largest error observed
  int failures = 0;    ///< instances that broke the tolerance or a property
  bool ok(int min_instances) const { return failures == 0 && instances >= min_instances; }
};

enum class LossKind { id, lr, circle, dve };
const char* to_string(LossKind k);

// Library value vs literal oracle, relative error.
SuiteResult loss_oracle_suite(LossKind kind, int instances, std::uint64_t seed, double tol = 1e-6);

// Analytic gradient vs central differences (double precision), max relative error per instance.
// For circle this covers both the per-anchor gradient and the batch gradient w.r.t. raw embeddings.
SuiteResult gradient_suite(LossKind kind, int instances, std::uint64_t seed, double tol = 1e-4);

// Random galleries (N <= 50); library metrics must equal the brute-force oracle exactly. protocol:
// 0 plain, 1 single-camera, 2 cross-camera. When `rerank_check` is given, rerank with lambda = 1 is
// also compared against the plain ranking permutation on every gallery.
SuiteResult metric_oracle_suite(int protocol, int galleries, std::uint64_t seed, SuiteResult* rerank_check = nullptr);

// rerank with lambda = 1 must reproduce the plain cosine ranking permutation for every query.
SuiteResult rerank_identity_suite(int galleries, std::uint64_t seed);

// Library rerank distance vs dense textbook oracle.
SuiteResult rerank_oracle_suite(int instances, std::uint64_t seed, double tol = 1e-9);

// The three fusion examples (IoU 1, 0, 1/3) and the ioc 0.5 boundary; failures count wrong decisions.
SuiteResult mask_examples_suite();

// Theta-monotonicity of fuse_masks on random rectangle sets.
SuiteResult theta_monotonic_suite(int instances, std::uint64_t seed);

}  // namespace reid::testing
