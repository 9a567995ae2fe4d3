#pragma once

#include "reid/image.hpp"
#include "reid/model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace reid::viz {

struct GridCell {
  int y = 0, x = 0;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Cosine map of one source descriptor against a target field and its first arg-max.
struct MatchResult {
  GridCell source_cell;
  GridCell best;                  ///< v* on the target grid
  int grid_height = 0, grid_width = 0;
  std::vector<double> similarity; ///< grid_height x grid_width, row-major, in [-1, 1]
  double best_similarity = 0.0;
  std::vector<std::string> warnings;
};

/// Pixel (x, y) of an image `width` x `height` mapped to the nearest cell of a grid_h x grid_w field.
GridCell to_grid(double x, double y, int width, int height, int grid_w, int grid_h);
/// Centre of a grid cell in pixel coordinates of a width x height image.
std::pair<double, double> to_pixel(GridCell cell, int width, int height, int grid_w, int grid_h);

/// Matches `cell` of `source` (1 x D x h x w) against every cell of `target`; ties resolve to the
/// first cell in row-major order.
MatchResult match_descriptors(const nn::Tensor& source, const nn::Tensor& target, GridCell cell);

struct MatchQuery {
  Image source, target;          ///< any size; resized to the model input
  double x = 0.0, y = 0.0;       ///< query pixel in source coordinates
  nn::DescriptorLayer layer = nn::DescriptorLayer::dve;
  const std::vector<std::uint8_t>* foreground = nullptr;  ///< optional source mask, for the masked-region warning
};

struct PointMatch {
  MatchResult match;
  double x = 0.0, y = 0.0;        ///< v* in target pixel coordinates
  std::uint64_t source_hash = 0;  ///< fingerprints of the preprocessed inputs
  std::uint64_t target_hash = 0;
};

PointMatch match_point(nn::ReIdModel& model, const MatchQuery& query);

/// Similarity grid bilinearly resampled to width x height (pixel-centre alignment).
std::vector<double> upsample(const std::vector<double>& grid, int grid_h, int grid_w, int height, int width);

/// Fixed blue-white-red map anchored at cosine -1 and +1.
std::array<std::uint8_t, 3> colormap(double cosine);

inline constexpr int kPanelMargin = 4;

/// Three panels side by side (source with query dot, target with match dot, target with heatmap),
/// each target-sized, separated by kPanelMargin. Size: (3 W + 4 m) x (H + 2 m).
Image render_panel(const MatchQuery& query, const PointMatch& match);
void write_panel(const std::filesystem::path& path, const MatchQuery& query, const PointMatch& match);

}  // namespace reid::viz
