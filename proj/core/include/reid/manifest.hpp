#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace reid::data {

enum class Orientation : int { left = 0, right = 1 };

inline Orientation flipped(Orientation o) noexcept {
  return o == Orientation::left ? Orientation::right : Orientation::left;
}

enum class Split { train, test_query, test_gallery, unspecified };

struct SampleRecord {
  std::string image_path;              ///< as written in the manifest (relative to the manifest root)
  int entity_id = 0;                   ///< dense id in [0, num_entities)
  Orientation orientation = Orientation::left;
  std::optional<int> camera_id;
  std::optional<std::string> mask_path;
  Split split = Split::unspecified;
  std::size_t line = 0;                ///< source line, for diagnostics
};

struct DatasetManifest {
  std::string name;
  std::filesystem::path root;          ///< directory relative image paths resolve against
  std::vector<SampleRecord> records;
  int num_entities = 0;
  /// raw_labels[dense id] = label as written in the file.
  std::vector<std::string> raw_labels;
  std::vector<std::string> warnings;

  std::filesystem::path resolve(const std::string& relative) const;
  std::filesystem::path image_file(const SampleRecord& r) const { return resolve(r.image_path); }
  bool has_cameras() const;
  /// Records grouped by dense id.
  std::vector<std::vector<std::size_t>> by_entity() const;
};

/// Reads a delimiter-separated manifest: optional "# reid-manifest v1" line, then a header naming
/// path, entity, orientation and optionally camera, mask, split. Column aliases accepted:
///   path: image, file, filename; entity: id, identity, label; orientation: side, lr, direction;
///   camera: cam, camera_id; mask: mask_path.
/// Delimiter is auto-detected among ',', '\t', ';'. Raw entity labels are densified in order of
/// first appearance. Throws ParseError naming the missing column or the offending line.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Writes the manifest in the canonical v1 layout (comma separated).
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

Orientation parse_orientation(const std::string& token);

/// Re-labels with one entity per (entity, orientation) pair, densified in order of first appearance.
DatasetManifest make_side_entities(const DatasetManifest& manifest);

/// Keeps records whose split matches; re-densifies entity ids.
DatasetManifest select_split(const DatasetManifest& manifest, Split split);
/// Keeps records with the given dense ids; re-densifies in input order.
DatasetManifest subset_entities(const DatasetManifest& manifest, const std::vector<int>& keep);
/// Re-densifies entity ids after records were filtered.
DatasetManifest densify(DatasetManifest manifest);

/// Raw labels present in both manifests (sorted). Empty means disjoint.
std::vector<std::string> overlapping_entities(const DatasetManifest& train, const DatasetManifest& test);
/// Throws InputError listing the overlapping labels when train and test share an entity.
void validate_disjoint(const DatasetManifest& train, const DatasetManifest& test);

}  // namespace reid::data
