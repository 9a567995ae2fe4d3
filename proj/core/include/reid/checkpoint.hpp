#pragma once

#include "reid/kvconfig.hpp"
#include "reid/model.hpp"
#include "reid/optim.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace reid::nn {

inline constexpr int kCheckpointVersion = 1;

/// Self-describing model snapshot: parameters, BN statistics, optimizer state, configuration,
/// entity-label mapping and per-epoch metrics. Binary layout:
///   "REIDCKPT" | u32 version | u64 header bytes | JSON header | float32 payload (little endian)
struct Checkpoint {
  int version = kCheckpointVersion;
  ModelConfig model;
  KeyValueConfig train_config;
  int epoch = 0;  ///< epochs completed
  std::vector<std::string> entity_labels;
  std::vector<std::map<std::string, double>> metric_history;
  std::map<std::string, Tensor> parameters;  ///< learnable parameters and buffers by name
  std::map<std::string, Tensor> optimizer;   ///< momentum buffers by parameter name
};

KeyValueConfig model_config_to_kv(const ModelConfig& c);
ModelConfig model_config_from_kv(const KeyValueConfig& kv);

Checkpoint capture(ReIdModel& model, const Sgd* optimizer = nullptr);
/// Copies stored tensors into the model (and optimizer). Throws InputError on missing names or shape mismatches.
void restore(const Checkpoint& ckpt, ReIdModel& model, Sgd* optimizer = nullptr);
std::unique_ptr<ReIdModel> model_from_checkpoint(const Checkpoint& ckpt);

/// Writes to a sibling temp file and renames it over `path`; removes the temp file on failure.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace reid::nn
