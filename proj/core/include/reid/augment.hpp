#pragma once

#include "reid/image.hpp"
#include "reid/manifest.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace reid::data {

struct AugmentationConfig {
  int target_size = 224;
  /// Resize to this square size before the random crop. Equal to target_size disables cropping.
  int resize_size = 256;
  bool random_crop = true;
  double flip_probability = 0.5;
  double erase_probability = 0.5;
  double erase_area_min = 0.02;
  double erase_area_max = 0.2;
  double erase_aspect_min = 0.3;  ///< aspect drawn log-uniformly in [min, 1/min]
  std::array<std::uint8_t, 3> erase_fill{124, 116, 104};

  /// Everything off: output is the resized input.
  static AugmentationConfig identity(int size);
  void validate() const;
};

struct EraseRect {
  int y = 0, x = 0, height = 0, width = 0;
};

/// What was done to produce an augmented sample; enough to replay it exactly.
struct AugmentGeometry {
  int crop_y = 0, crop_x = 0;
  bool flipped = false;
  std::optional<EraseRect> erase;
};

struct AugmentedSample {
  Image image;  ///< target_size x target_size x 3
  Orientation orientation;
  AugmentGeometry geometry;
};

/// Pure function of (image, orientation, config, seed). Horizontal flips invert the orientation label.
AugmentedSample augment_image(const Image& image, Orientation orientation, const AugmentationConfig& config,
                              std::uint64_t seed);

/// Loads record's image (masking it first when apply_mask and the record carries a mask path),
/// then augments. Decode failures propagate as std::runtime_error naming the file.
AugmentedSample augment(const DatasetManifest& manifest, const SampleRecord& record,
                        const AugmentationConfig& config, std::uint64_t seed, bool apply_mask = true);

/// Loads a record's image, masked with its mask_path when apply_mask is set and a mask exists.
Image load_record_image(const DatasetManifest& manifest, const SampleRecord& record, bool apply_mask = true);

}  // namespace reid::data
