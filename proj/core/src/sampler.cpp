#include "reid/sampler.hpp"

#include "reid/errors.hpp"
#include "reid/rng.hpp"

#include <algorithm>
#include <numeric>

namespace reid::data {

PKSampler::PKSampler(const DatasetManifest& manifest, BatchPlan plan, std::uint64_t seed)
    : plan_(plan), seed_(seed) {
  if (plan.identities_per_batch < 1 || plan.instances_per_identity < 1)
    throw ConfigError("batch_plan", "P and K must be positive");
  for (auto& g : manifest.by_entity())
    if (!g.empty()) groups_.push_back(std::move(g));
  if (static_cast<int>(groups_.size()) < plan.identities_per_batch)
    throw ConfigError("identities_per_batch", "P=" + std::to_string(plan.identities_per_batch) + " exceeds the " +
                                                  std::to_string(groups_.size()) + " available identities");
}

std::vector<Batch> PKSampler::epoch(int epoch_index) const {
  Rng rng(derive_seed(seed_, {0x5a4d, static_cast<std::uint64_t>(epoch_index)}));
  const auto K = static_cast<std::size_t>(plan_.instances_per_identity);
  const auto P = static_cast<std::size_t>(plan_.identities_per_batch);

  auto make_chunk = [&](const std::vector<std::size_t>& group) {
    std::vector<std::size_t> c = group;
    shuffle(c.begin(), c.end(), rng);
    while (c.size() < K) c.push_back(group[uniform_index(rng, group.size())]);
    c.resize(K);
    return c;
  };

  // chunks[g] = remaining chunks for identity g
  std::vector<std::vector<std::vector<std::size_t>>> chunks(groups_.size());
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    std::vector<std::size_t> idx = groups_[g];
    shuffle(idx.begin(), idx.end(), rng);
    if (idx.size() < K) {
      chunks[g].push_back(make_chunk(groups_[g]));
      continue;
    }
    for (std::size_t s = 0; s + K <= idx.size(); s += K) chunks[g].emplace_back(idx.begin() + s, idx.begin() + s + K);
  }

  std::vector<Batch> batches;
  std::vector<std::size_t> available(groups_.size());
  std::iota(available.begin(), available.end(), 0);
  while (!available.empty()) {
    shuffle(available.begin(), available.end(), rng);
    std::vector<std::size_t> chosen(available.begin(), available.begin() + std::min(P, available.size()));
    if (chosen.size() < P) {
      // top up with identities outside this batch
      std::vector<std::size_t> others;
      for (std::size_t g = 0; g < groups_.size(); ++g)
        if (std::find(chosen.begin(), chosen.end(), g) == chosen.end()) others.push_back(g);
      shuffle(others.begin(), others.end(), rng);
      for (std::size_t i = 0; chosen.size() < P; ++i) {
        chunks[others[i]].push_back(make_chunk(groups_[others[i]]));
        chosen.push_back(others[i]);
      }
    }
    Batch b;
    b.reserve(P * K);
    for (auto g : chosen) {
      auto& list = chunks[g];
      b.insert(b.end(), list.front().begin(), list.front().end());
      list.erase(list.begin());
    }
    batches.push_back(std::move(b));
    available.erase(std::remove_if(available.begin(), available.end(), [&](std::size_t g) { return chunks[g].empty(); }),
                    available.end());
  }
  return batches;
}

std::vector<Batch> random_batches(std::size_t num_records, int batch_size, std::uint64_t seed, int epoch_index) {
  if (batch_size < 1) throw ConfigError("batch_size", "must be positive");
  Rng rng(derive_seed(seed, {0x52414e44, static_cast<std::uint64_t>(epoch_index)}));
  std::vector<std::size_t> order(num_records);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> out;
  const auto B = static_cast<std::size_t>(batch_size);
  for (std::size_t s = 0; s + B <= order.size(); s += B) out.emplace_back(order.begin() + s, order.begin() + s + B);
  if (out.empty() && !order.empty()) out.emplace_back(order.begin(), order.end());
  return out;
}

}  // namespace reid::data
