#include "reid/manifest.hpp"

#include "reid/errors.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace reid::data {
namespace {

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, delim)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

char detect_delimiter(const std::string& header) {
  for (char d : {'\t', ';', ','})
    if (header.find(d) != std::string::npos) return d;
  return ',';
}

int find_column(const std::vector<std::string>& header, std::initializer_list<const char*> names) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto h = lower(header[i]);
    for (const char* n : names)
      if (h == n) return static_cast<int>(i);
  }
  return -1;
}

Split parse_split(const std::string& token, std::size_t line) {
  const auto t = lower(token);
  if (t == "train") return Split::train;
  if (t == "query" || t == "test-query") return Split::test_query;
  if (t == "gallery" || t == "test-gallery" || t == "test") return Split::test_gallery;
  if (t.empty()) return Split::unspecified;
  throw ParseError("unknown split token '" + token + "'", line);
}

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test_query: return "query";
    case Split::test_gallery: return "gallery";
    case Split::unspecified: return "";
  }
  return "";
}

}  // namespace

std::filesystem::path DatasetManifest::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  return p.is_absolute() ? p : root / p;
}

bool DatasetManifest::has_cameras() const {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(), [](const SampleRecord& r) { return r.camera_id.has_value(); });
}

std::vector<std::vector<std::size_t>> DatasetManifest::by_entity() const {
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(num_entities));
  for (std::size_t i = 0; i < records.size(); ++i) groups[static_cast<std::size_t>(records[i].entity_id)].push_back(i);
  return groups;
}

Orientation parse_orientation(const std::string& token) {
  const auto t = lower(trim(token));
  if (t == "l" || t == "left" || t == "0") return Orientation::left;
  if (t == "r" || t == "right" || t == "1") return Orientation::right;
  throw InputError("unknown orientation token '" + token + "'");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest " + path.string());

  DatasetManifest m;
  m.name = path.stem().string();
  m.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  char delim = ',';
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (t.rfind("# reid-manifest", 0) == 0 && t.find("v1") == std::string::npos)
        throw ParseError("unsupported manifest version: " + t, lineno);
      continue;
    }
    delim = detect_delimiter(t);
    header = split_line(t, delim);
    break;
  }
  if (header.empty()) throw ParseError("manifest " + path.string() + " has no header");

  const int c_path = find_column(header, {"path", "image", "file", "filename", "image_path"});
  const int c_entity = find_column(header, {"entity", "id", "identity", "label", "entity_id"});
  const int c_orient = find_column(header, {"orientation", "side", "lr", "direction"});
  const int c_camera = find_column(header, {"camera", "cam", "camera_id"});
  const int c_mask = find_column(header, {"mask", "mask_path"});
  const int c_split = find_column(header, {"split"});
  if (c_path < 0) throw ParseError("missing required column 'path'", lineno);
  if (c_entity < 0) throw ParseError("missing required column 'entity'", lineno);
  if (c_orient < 0) throw ParseError("missing required column 'orientation'", lineno);

  std::unordered_map<std::string, int> dense;
  std::unordered_map<std::string, std::size_t> seen_paths;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cells = split_line(t, delim);
    const int need = std::max({c_path, c_entity, c_orient, c_camera, c_mask, c_split});
    if (static_cast<int>(cells.size()) <= need)
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()), lineno);

    SampleRecord r;
    r.line = lineno;
    r.image_path = cells[c_path];
    if (r.image_path.empty()) throw ParseError("empty image path", lineno);
    const auto& raw = cells[c_entity];
    if (raw.empty()) throw ParseError("empty entity label", lineno);
    auto [it, inserted] = dense.try_emplace(raw, static_cast<int>(m.raw_labels.size()));
    if (inserted) m.raw_labels.push_back(raw);
    r.entity_id = it->second;
    try {
      r.orientation = parse_orientation(cells[c_orient]);
    } catch (const InputError&) {
      throw ParseError("unknown orientation token '" + cells[c_orient] + "'", lineno);
    }
    if (c_camera >= 0 && !cells[c_camera].empty()) {
      try {
        std::size_t used = 0;
        r.camera_id = std::stoi(cells[c_camera], &used);
        if (used != cells[c_camera].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("camera id '" + cells[c_camera] + "' is not an integer", lineno);
      }
    }
    if (c_mask >= 0 && !cells[c_mask].empty()) r.mask_path = cells[c_mask];
    if (c_split >= 0) r.split = parse_split(cells[c_split], lineno);

    auto [pit, fresh] = seen_paths.try_emplace(r.image_path, lineno);
    if (!fresh)
      m.warnings.push_back("line " + std::to_string(lineno) + ": duplicate image path '" + r.image_path +
                           "' (first seen on line " + std::to_string(pit->second) + ")");
    m.records.push_back(std::move(r));
  }
  m.num_entities = static_cast<int>(m.raw_labels.size());
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  const bool cams = std::any_of(manifest.records.begin(), manifest.records.end(),
                                [](const SampleRecord& r) { return r.camera_id.has_value(); });
  const bool masks = std::any_of(manifest.records.begin(), manifest.records.end(),
                                 [](const SampleRecord& r) { return r.mask_path.has_value(); });
  const bool splits = std::any_of(manifest.records.begin(), manifest.records.end(),
                                  [](const SampleRecord& r) { return r.split != Split::unspecified; });
  out << "# reid-manifest v1\n";
  out << "path,entity,orientation";
  if (cams) out << ",camera";
  if (masks) out << ",mask";
  if (splits) out << ",split";
  out << '\n';
  for (const auto& r : manifest.records) {
    out << r.image_path << ',' << manifest.raw_labels.at(static_cast<std::size_t>(r.entity_id)) << ','
        << (r.orientation == Orientation::left ? 'L' : 'R');
    if (cams) out << ',' << (r.camera_id ? std::to_string(*r.camera_id) : "");
    if (masks) out << ',' << r.mask_path.value_or("");
    if (splits) out << ',' << split_name(r.split);
    out << '\n';
  }
}

DatasetManifest make_side_entities(const DatasetManifest& manifest) {
  DatasetManifest out = manifest;
  out.raw_labels.clear();
  std::map<std::pair<int, int>, int> dense;
  for (auto& r : out.records) {
    const auto key = std::make_pair(r.entity_id, static_cast<int>(r.orientation));
    auto [it, inserted] = dense.try_emplace(key, static_cast<int>(out.raw_labels.size()));
    if (inserted)
      out.raw_labels.push_back(manifest.raw_labels.at(static_cast<std::size_t>(r.entity_id)) +
                               (r.orientation == Orientation::left ? "_L" : "_R"));
    r.entity_id = it->second;
  }
  out.num_entities = static_cast<int>(out.raw_labels.size());
  return out;
}

DatasetManifest densify(DatasetManifest m) {
  std::vector<int> remap(m.raw_labels.size(), -1);
  std::vector<std::string> labels;
  for (auto& r : m.records) {
    auto& slot = remap[static_cast<std::size_t>(r.entity_id)];
    if (slot < 0) {
      slot = static_cast<int>(labels.size());
      labels.push_back(m.raw_labels[static_cast<std::size_t>(r.entity_id)]);
    }
    r.entity_id = slot;
  }
  m.raw_labels = std::move(labels);
  m.num_entities = static_cast<int>(m.raw_labels.size());
  return m;
}

DatasetManifest select_split(const DatasetManifest& manifest, Split split) {
  DatasetManifest out = manifest;
  out.records.clear();
  for (const auto& r : manifest.records)
    if (r.split == split) out.records.push_back(r);
  return densify(std::move(out));
}

DatasetManifest subset_entities(const DatasetManifest& manifest, const std::vector<int>& keep) {
  std::set<int> k(keep.begin(), keep.end());
  DatasetManifest out = manifest;
  out.records.clear();
  for (const auto& r : manifest.records)
    if (k.count(r.entity_id)) out.records.push_back(r);
  return densify(std::move(out));
}

std::vector<std::string> overlapping_entities(const DatasetManifest& train, const DatasetManifest& test) {
  std::set<std::string> a(train.raw_labels.begin(), train.raw_labels.end());
  std::set<std::string> both;
  for (const auto& l : test.raw_labels)
    if (a.count(l)) both.insert(l);
  return {both.begin(), both.end()};
}

void validate_disjoint(const DatasetManifest& train, const DatasetManifest& test) {
  const auto both = overlapping_entities(train, test);
  if (both.empty()) return;
  std::string msg = "train/test entity overlap (" + std::to_string(both.size()) + "):";
  for (const auto& l : both) msg += " " + l;
  throw InputError(msg);
}

}  // namespace reid::data
