#pragma once

#include "reid/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reid::mask {

/// Boolean foreground raster. Elements are stored as 0/1 bytes.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, bool value = false);

  /// Nonzero pixel => foreground. Single-channel images only.
  static BinaryMask from_image(const Image& gray);
  /// Soft mask cut at half of its maximum value; an all-zero input yields an empty mask.
  static BinaryMask from_soft(const Image& gray);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool same_shape(const BinaryMask& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool at(int y, int x) const noexcept { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int y, int x, bool v) noexcept { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t count() const noexcept;
  /// True when every foreground pixel of this mask is also foreground in `other`.
  bool subset_of(const BinaryMask& other) const;

  BinaryMask& operator|=(const BinaryMask& other);
  friend BinaryMask operator|(BinaryMask a, const BinaryMask& b) { return a |= b; }
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

  /// 0/255 single-channel raster.
  Image to_image() const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b);
std::size_t union_count(const BinaryMask& a, const BinaryMask& b);

enum class CriterionKind { iou, intersection_over_candidate, passthrough };

std::string_view to_string(CriterionKind kind);
/// Accepts "iou", "ioc" / "intersection-over-candidate", "passthrough".
CriterionKind parse_criterion(std::string_view token);

struct FusionCriterion {
  CriterionKind kind = CriterionKind::iou;
  double threshold = 0.3;
  /// Candidates smaller than this many pixels are dropped before scoring. Off when unset.
  std::optional<std::size_t> min_area;

  /// Throws InputError when threshold is outside [0, 1].
  void validate() const;

  static FusionCriterion atrw() { return {CriterionKind::iou, 0.3, std::nullopt}; }
  static FusionCriterion elpephants() { return {CriterionKind::intersection_over_candidate, 0.5, std::nullopt}; }
  static FusionCriterion yakreid() { return {CriterionKind::passthrough, 0.0, std::nullopt}; }
};

/// iou: |m & r| / |m | r|. ioc: |m & r| / |m|. Empty denominators score 0. passthrough scores 1.
double criterion_score(const BinaryMask& candidate, const BinaryMask& reference, CriterionKind kind);

struct FusionResult {
  BinaryMask mask;
  std::vector<double> scores;  ///< one per candidate, in input order
  std::vector<bool> accepted;  ///< one per candidate, in input order
  std::size_t survivors = 0;
  bool warning = false;        ///< no candidate survived (or none given)
};

/// Union of the candidates whose score against the reference is >= threshold.
FusionResult fuse_masks(std::span<const BinaryMask> candidates, const BinaryMask& reference,
                        const FusionCriterion& criterion);

using Fill = std::array<std::uint8_t, 3>;

struct MaskedImage {
  Image pixels;
  BinaryMask mask;
  Fill fill{0, 0, 0};
};

/// Copies foreground pixels, sets background pixels to `fill`. Image must be HxWx3 with the mask's shape.
MaskedImage apply_mask(const Image& image, const BinaryMask& mask, Fill fill = {0, 0, 0});

/// Run-length text codec: "rle1 H W" then whitespace-separated alternating run lengths
/// in row-major order, starting with a (possibly zero) background run.
std::string encode_rle(const BinaryMask& mask);
BinaryMask decode_rle(std::string_view text);

/// Reads .rle files with the text codec, any other extension as an 8-bit raster (nonzero = foreground).
BinaryMask read_mask(const std::filesystem::path& path);
/// Reads a possibly-soft single-channel raster and binarizes it at half its maximum.
BinaryMask read_soft_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace reid::mask
