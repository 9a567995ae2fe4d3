#pragma once

#include "reid/evaluation.hpp"
#include "reid/trainer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace reid::train {

struct AblationRow {
  std::string name;
  LossToggles losses;
  bool sampler = true;
  std::optional<double> lambda_reid, lambda_dve;  ///< overrides; unset keeps the base value

  /// Base config with this row's toggles applied. Rejects rows that enable no loss.
  TrainConfig apply(const TrainConfig& base) const;
};

/// The nine component combinations (L_DVE, L_ID, L_ReID, L_LR, batch sampling) in table order.
std::vector<AblationRow> component_grid();
/// lambda_dve in {0, 0.2, ..., 2} with everything else enabled.
std::vector<AblationRow> lambda_dve_sweep();
/// lambda_reid in {1, 2, 5} with everything else enabled.
std::vector<AblationRow> lambda_reid_sweep();

struct AblationResult {
  AblationRow row;
  eval::EvalReport report;  ///< evaluated without re-ranking
};

/// Trains one model per row (out_dir/<index>_<name>/) and evaluates it on `test`.
std::vector<AblationResult> ablation_run(const TrainConfig& base, const std::vector<AblationRow>& rows,
                                         const data::DatasetManifest& train, const data::DatasetManifest& test,
                                         const std::filesystem::path& out_dir, eval::EvalProtocol protocol);

/// Check-mark table: L_DVE, L_ID, L_ReID, L_LR, B.S. | metric columns.
std::string ablation_table(const std::vector<AblationResult>& results);

}  // namespace reid::train
