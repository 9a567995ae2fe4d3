#include "reid/mask_batch.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace reid::mask {
namespace fs = std::filesystem;
namespace {

const char* status_name(EntryStatus s) {
  switch (s) {
    case EntryStatus::ok: return "ok";
    case EntryStatus::skipped: return "skipped";
    case EntryStatus::failed: return "failed";
  }
  return "?";
}

std::optional<fs::path> find_reference(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".rle", ".pgm", ".jpg"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

std::vector<fs::path> list_candidates(const fs::path& dir, const std::string& stem) {
  std::vector<fs::path> out;
  const fs::path sub = dir / stem;
  if (!fs::is_directory(sub)) return out;
  for (const auto& e : fs::directory_iterator(sub))
    if (e.is_regular_file()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::size_t FuseReport::written() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const FuseReportRow& r) { return r.status == EntryStatus::ok; }));
}

std::size_t FuseReport::skipped() const {
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [](const FuseReportRow& r) { return r.status == EntryStatus::skipped; }));
}

std::string FuseReport::to_tsv() const {
  std::ostringstream os;
  os << "stem\tstatus\tcandidates\tsurvivors\twarning\tmessage\n";
  for (const auto& r : rows)
    os << r.stem << '\t' << status_name(r.status) << '\t' << r.candidates << '\t' << r.survivors << '\t'
       << (r.warning ? "yes" : "no") << '\t' << r.message << '\n';
  return os.str();
}

FuseReport batch_fuse(const data::DatasetManifest& manifest, const fs::path& candidate_dir,
                      const fs::path& reference_dir, const fs::path& out_dir, const BatchFuseOptions& options) {
  options.criterion.validate();
  FuseReport report;
  data::DatasetManifest masked_manifest = manifest;
  masked_manifest.root = out_dir;
  masked_manifest.records.clear();
  fs::create_directories(out_dir / "masks");
  fs::create_directories(out_dir / "images");

  for (const auto& rec : manifest.records) {
    FuseReportRow row;
    row.stem = fs::path(rec.image_path).stem().string();
    const auto ref_path = find_reference(reference_dir, row.stem);
    if (!ref_path) {
      row.status = EntryStatus::skipped;
      row.message = "missing reference mask";
      report.rows.push_back(std::move(row));
      continue;
    }
    try {
      const Image image = read_image(manifest.image_file(rec), 3);
      const BinaryMask reference = read_soft_mask(*ref_path);
      std::vector<BinaryMask> candidates;
      for (const auto& p : list_candidates(candidate_dir, row.stem)) candidates.push_back(read_mask(p));
      row.candidates = candidates.size();

      const auto fused = fuse_masks(candidates, reference, options.criterion);
      row.survivors = fused.survivors;
      row.warning = fused.warning;
      if (fused.warning) row.message = candidates.empty() ? "no candidates" : "no surviving candidates";

      const auto masked = apply_mask(image, fused.mask, options.fill);
      write_mask(out_dir / "masks" / (row.stem + ".png"), fused.mask);
      fs::path image_out = out_dir / "images" / rec.image_path;
      image_out.replace_extension(".png");
      write_image(image_out, masked.pixels);
      data::SampleRecord out_rec = rec;
      out_rec.image_path = fs::relative(image_out, out_dir).generic_string();
      out_rec.mask_path = "masks/" + row.stem + ".png";
      masked_manifest.records.push_back(std::move(out_rec));
    } catch (const std::exception& e) {
      row.status = EntryStatus::failed;
      row.message = e.what();
    }
    report.rows.push_back(std::move(row));
  }

  std::ofstream(out_dir / "fuse_report.tsv") << report.to_tsv();
  data::write_manifest(out_dir / "manifest.csv", data::densify(std::move(masked_manifest)));
  return report;
}

}  // namespace reid::mask
