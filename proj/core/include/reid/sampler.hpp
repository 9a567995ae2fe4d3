#pragma once

#include "reid/manifest.hpp"

#include <cstdint>
#include <vector>

namespace reid::data {

struct BatchPlan {
  int identities_per_batch = 10;  ///< P
  int instances_per_identity = 3;  ///< K
  int batch_size() const noexcept { return identities_per_batch * instances_per_identity; }
};

using Batch = std::vector<std::size_t>;  ///< record indices

/// Identity-balanced P x K sampler. Each epoch every identity is split into shuffled chunks of K
/// samples (completed by resampling with replacement when short); batches take one chunk from
/// each of P distinct identities. The last round is topped up with extra identities so that every
/// identity appears at least once per epoch. Deterministic in (seed, epoch).
class PKSampler {
 public:
  PKSampler(const DatasetManifest& manifest, BatchPlan plan, std::uint64_t seed);

  std::vector<Batch> epoch(int epoch_index) const;
  const BatchPlan& plan() const noexcept { return plan_; }

 private:
  std::vector<std::vector<std::size_t>> groups_;
  BatchPlan plan_;
  std::uint64_t seed_;
};

/// Plain shuffled batches of a fixed size (no identity balancing); the final partial batch is dropped
/// unless it is the only batch.
std::vector<Batch> random_batches(std::size_t num_records, int batch_size, std::uint64_t seed, int epoch_index);

}  // namespace reid::data
