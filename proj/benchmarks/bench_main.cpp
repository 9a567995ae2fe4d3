#include <benchmark/benchmark.h>

#include "reid/dve_loss.hpp"
#include "reid/evaluation.hpp"
#include "reid/losses.hpp"
#include "reid/mask.hpp"
#include "reid/model.hpp"
#include "reid/rng.hpp"

#include <vector>

using namespace reid;

namespace {

loss::Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  loss::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = uniform(rng, -1.0, 1.0);
  return m;
}

eval::FeatureStore random_store(int n, std::uint64_t seed) {
  eval::FeatureStore s;
  s.vectors = random_matrix(n, 128, seed);
  for (int i = 0; i < n; ++i) {
    s.ids.push_back("e" + std::to_string(i % (n / 4 + 1)));
    s.cameras.push_back(i % 3);
  }
  return s;
}

}  // namespace

static void BatchCircleLoss(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto emb = random_matrix(n, 512, 1);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i / 4;
  loss::Matrix grad;
  for (auto _ : state) {
    auto r = loss::batch_circle_loss(emb, labels, {}, &grad);
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BatchCircleLoss)->RangeMultiplier(2)->Range(16, 128)->Complexity();

static void DveLoss(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int cells = side * side;
  loss::DveInputs in;
  in.height = in.width = side;
  in.phi_x = random_matrix(cells, 64, 2).rowwise().normalized();
  in.phi_xprime = random_matrix(cells, 64, 3).rowwise().normalized();
  in.phi_aux = random_matrix(cells, 64, 4).rowwise().normalized();
  in.warp = random_matrix(cells, 2, 5);
  loss::DveGrads grads;
  for (auto _ : state) {
    auto r = loss::dve_loss(in, &grads);
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetComplexityN(cells);
}
BENCHMARK(DveLoss)->DenseRange(8, 24, 8)->Complexity();

static void RankCrossCamera(benchmark::State& state) {
  const auto store = random_store(static_cast<int>(state.range(0)), 6);
  for (auto _ : state) {
    auto r = eval::rank(store, eval::ProtocolKind::cross_camera);
    benchmark::DoNotOptimize(r.queries.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(RankCrossCamera)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

static void RerankDistance(benchmark::State& state) {
  const auto store = random_store(static_cast<int>(state.range(0)), 7);
  const auto sim = eval::cosine_similarity(store);
  for (auto _ : state) {
    auto r = eval::rerank_distance(sim, {});
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(RerankDistance)->RangeMultiplier(2)->Range(64, 512);

static void FuseMasks(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  Rng rng(8);
  mask::BinaryMask reference(size, size);
  for (int y = size / 4; y < 3 * size / 4; ++y)
    for (int x = size / 4; x < 3 * size / 4; ++x) reference.set(y, x, true);
  std::vector<mask::BinaryMask> candidates;
  for (int k = 0; k < 8; ++k) {
    mask::BinaryMask m(size, size);
    const int x0 = static_cast<int>(uniform_index(rng, size / 2)), y0 = static_cast<int>(uniform_index(rng, size / 2));
    for (int y = y0; y < y0 + size / 3; ++y)
      for (int x = x0; x < x0 + size / 3; ++x) m.set(y, x, true);
    candidates.push_back(std::move(m));
  }
  for (auto _ : state) {
    auto r = mask::fuse_masks(candidates, reference, mask::FusionCriterion::atrw());
    benchmark::DoNotOptimize(r.survivors);
  }
}
BENCHMARK(FuseMasks)->Arg(128)->Arg(512);

static void ToyForward(benchmark::State& state) {
  nn::ModelConfig c;
  c.backbone = nn::BackboneKind::toy;
  c.input_size = 64;
  c.embedding_dim = 128;
  c.num_identities = 16;
  nn::ReIdModel model(c);
  const int batch = static_cast<int>(state.range(0));
  nn::Tensor x({batch, 3, 64, 64});
  Rng rng(9);
  for (auto& v : x.values) v = static_cast<float>(uniform(rng, -2.0, 2.0));
  for (auto _ : state) {
    auto out = model.forward(x, nn::Mode::eval);
    benchmark::DoNotOptimize(out.embedding_bn.values.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(ToyForward)->Arg(1)->Arg(30)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
