#pragma once

#include "reid/checkpoint.hpp"
#include "reid/manifest.hpp"
#include "reid/train_config.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace reid::train {

struct EpochSummary {
  int epoch = 0;
  double lr_backbone = 0.0, lr_heads = 0.0;
  bool backbone_frozen = false;
  double mean_id = 0.0, mean_lr = 0.0, mean_reid = 0.0, mean_dve = 0.0, mean_total = 0.0;
  std::optional<double> val_map;
  int anchors_without_positive = 0;
  double seconds = 0.0;
};

struct TrainResult {
  std::unique_ptr<nn::ReIdModel> model;  ///< final weights
  std::vector<EpochSummary> epochs;
  std::filesystem::path last_checkpoint, best_checkpoint;
  std::optional<double> best_val_map;
  data::DatasetManifest train_manifest, val_manifest;
};

struct TrainOptions {
  /// Continue from out_dir/checkpoints/last.ckpt when it exists.
  bool resume = false;
  /// Stop after this many completed epochs (the schedule is still that of config.epochs).
  std::optional<int> stop_after;
  /// Called after each epoch; for progress output.
  std::function<void(const EpochSummary&)> on_epoch;
};

/// Splits off round(val_fraction x identities) identities (at least 2 when the fraction is
/// positive) by a seeded draw. Returns (train, validation).
std::pair<data::DatasetManifest, data::DatasetManifest> split_validation(const data::DatasetManifest& manifest,
                                                                         double fraction, std::uint64_t seed);

/// Runs the schedule, writing config.txt, train_log.jsonl (one record per step), epochs.jsonl and
/// checkpoints/{last,best}.ckpt under out_dir.
TrainResult train(const TrainConfig& config, const data::DatasetManifest& manifest,
                  const std::filesystem::path& out_dir, const TrainOptions& options = {});

/// Plain-protocol validation mAP of `model` on `manifest` (leave-one-out).
double validation_map(nn::ReIdModel& model, const data::DatasetManifest& manifest, bool apply_mask);

}  // namespace reid::train
