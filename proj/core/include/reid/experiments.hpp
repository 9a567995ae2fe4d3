#pragma once

#include "reid/evaluation.hpp"
#include "reid/manifest.hpp"
#include "reid/model.hpp"
#include "reid/train_config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace reid::experiments {

/// One train/test dataset pair seen with original and with masked backgrounds.
struct VariantManifests {
  data::DatasetManifest train_original, train_masked;
  data::DatasetManifest test_original, test_masked;
};

/// Loads the four manifests; throws InputError naming the missing file or image before any work.
VariantManifests load_variants(const std::filesystem::path& original_dir, const std::filesystem::path& masked_dir);

struct BiasRow {
  bool train_masked = false, test_masked = false;
  eval::EvalReport atrw;    ///< mmAP, R@1(s), R@1(c) (requires cameras)
  eval::EvalReport plain;   ///< mAP, R@1
};

/// Trains on each train variant and evaluates both test variants: rows in the order
/// (orig, orig), (orig, masked), (masked, masked), (masked, orig).
std::vector<BiasRow> bias_grid(const train::TrainConfig& config, const VariantManifests& variants,
                               const std::filesystem::path& out_dir);
std::string bias_table(const std::vector<BiasRow>& rows);

/// Ranks the foreign dataset with embeddings only; the identity head is never consulted.
eval::EvalReport transfer_eval(nn::ReIdModel& model, const data::DatasetManifest& foreign, eval::EvalProtocol protocol,
                               bool apply_mask = true);

struct TransferDomain {
  std::string name;
  data::DatasetManifest train, test;
  eval::EvalProtocol protocol = eval::EvalProtocol::plain;
};

struct TransferTable {
  std::vector<std::string> names;
  /// cells[i][j]: trained on domain i, evaluated on domain j.
  std::vector<std::vector<eval::EvalReport>> cells;
  std::string to_string() const;
};

TransferTable transfer_table(const train::TrainConfig& config, const std::vector<TransferDomain>& domains,
                             const std::filesystem::path& out_dir);

}  // namespace reid::experiments
