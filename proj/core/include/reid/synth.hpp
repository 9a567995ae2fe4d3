#pragma once

#include "reid/image.hpp"
#include "reid/manifest.hpp"
#include "reid/mask.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace reid::synth {

enum class Species { striped, spotted, patched };
const char* to_string(Species s);
Species parse_species(const std::string& s);

struct ToyDataConfig {
  int train_entities = 16;
  int test_entities = 8;
  int images_per_side = 5;
  int image_size = 64;
  int cameras = 2;
  Species species = Species::striped;
  /// Background hue follows the entity instead of being drawn per image.
  bool identity_background = false;
  std::uint64_t seed = 7;

  void validate() const;
};

/// One rendered view with its ground-truth foreground and the simulated segmenter outputs.
struct ToySample {
  Image image;
  mask::BinaryMask foreground;
  std::vector<mask::BinaryMask> candidates;  ///< part masks plus background distractors
  Image reference;                           ///< soft single-channel saliency map
  std::string entity;
  data::Orientation orientation = data::Orientation::left;
  int camera = 0;
  bool test = false;
  std::string stem;
};

ToySample render_sample(const ToyDataConfig& config, int entity, data::Orientation side, int index);

struct ToyDataset {
  std::filesystem::path root;
  std::filesystem::path train_manifest, test_manifest, all_manifest;
  std::filesystem::path candidates, reference, foreground;
  int images = 0;
};

/// Writes images/, candidates/<stem>/k.png, reference/<stem>.png, foreground/<stem>.png and the
/// manifests train.csv, test.csv and all.csv (with split column) under `out_dir`.
ToyDataset write_toy_dataset(const ToyDataConfig& config, const std::filesystem::path& out_dir);

}  // namespace reid::synth
