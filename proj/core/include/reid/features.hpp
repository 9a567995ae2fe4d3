#pragma once

#include "reid/evaluation.hpp"
#include "reid/manifest.hpp"
#include "reid/model.hpp"

#include <filesystem>

namespace reid::eval {

struct ExtractOptions {
  bool apply_mask = true;  ///< mask records that carry a mask path
  int batch_size = 32;
};

/// One eval embedding (flip-concatenated, 2d wide) per decodable record, resized to the model's
/// input size. Records that fail to decode are listed in FeatureStore::skipped.
FeatureStore extract_features(nn::ReIdModel& model, const data::DatasetManifest& manifest,
                              const ExtractOptions& options = {});

/// Loads the checkpoint and extracts.
FeatureStore extract_features(const std::filesystem::path& checkpoint, const data::DatasetManifest& manifest,
                              const ExtractOptions& options = {});

}  // namespace reid::eval
