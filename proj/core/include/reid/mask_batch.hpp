#pragma once

#include "reid/manifest.hpp"
#include "reid/mask.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace reid::mask {

enum class EntryStatus { ok, skipped, failed };

struct FuseReportRow {
  std::string stem;
  EntryStatus status = EntryStatus::ok;
  std::size_t candidates = 0;
  std::size_t survivors = 0;
  bool warning = false;
  std::string message;
};

struct FuseReport {
  std::vector<FuseReportRow> rows;  ///< manifest order
  std::size_t written() const;
  std::size_t skipped() const;
  /// Tab-separated table with a header line.
  std::string to_tsv() const;
};

struct BatchFuseOptions {
  FusionCriterion criterion;
  Fill fill{0, 0, 0};
};

/// For every manifest entry with image stem S: reads <reference_dir>/S.{png,rle}, the candidates in
/// <candidate_dir>/S/ (sorted by filename), fuses them and writes <out_dir>/masks/S.png plus the
/// masked image at <out_dir>/images/<manifest-relative path>. A missing reference skips the entry;
/// unreadable files mark it failed. Processing always continues. The report is also written to
/// <out_dir>/fuse_report.tsv, and a manifest of the written entries (masked image paths, fused
/// mask column) to <out_dir>/manifest.csv.
FuseReport batch_fuse(const data::DatasetManifest& manifest, const std::filesystem::path& candidate_dir,
                      const std::filesystem::path& reference_dir, const std::filesystem::path& out_dir,
                      const BatchFuseOptions& options);

}  // namespace reid::mask
