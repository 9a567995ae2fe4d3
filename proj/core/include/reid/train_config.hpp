#pragma once

#include "reid/augment.hpp"
#include "reid/kvconfig.hpp"
#include "reid/losses.hpp"
#include "reid/model.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace reid::train {

struct LossToggles {
  bool id = true, lr = true, reid = true, dve = true;
  bool any() const noexcept { return id || lr || reid || dve; }
};

struct TrainConfig {
  int epochs = 80;
  int freeze_epochs = 3;
  double lr_backbone = 0.001;
  double lr_heads = 0.01;
  double lr_drop_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 30;
  int instances_per_identity = 3;  ///< K of the P x K sampler; P = batch_size / K
  bool identity_sampler = true;
  std::uint64_t seed = 0;
  LossToggles losses;
  loss::LossWeights weights;
  loss::CircleParams circle{.detach_weights = true};
  double label_smoothing = 0.1;
  double dve_temperature = 0.0;  ///< 0 means 1 / sqrt(dve_dim)
  double warp_strength = 1.0;
  double val_fraction = 0.1;     ///< identities held out for best-checkpoint selection
  bool apply_mask = true;
  data::AugmentationConfig augment;
  nn::ModelConfig model;

  /// Reduced desk-scale preset: toy backbone, 64 px inputs, 30 epochs.
  static TrainConfig toy();

  int drop_epoch() const noexcept { return 2 * epochs / 3; }
  double temperature() const;
  void validate() const;

  KeyValueConfig to_kv() const;
  /// Fills fields from `kv` on top of `base`; unknown keys raise ConfigError naming the key.
  static TrainConfig from_kv(const KeyValueConfig& kv, const TrainConfig& base);
  static std::vector<std::string> known_keys();
};

/// (lr_backbone, lr_heads) at `epoch`: base rates, times lr_drop_factor from epoch floor(2E/3) on.
std::pair<double, double> lr_at(int epoch, const TrainConfig& config);

}  // namespace reid::train
