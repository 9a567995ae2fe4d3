#include "reid/mask.hpp"

#include "reid/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace reid::mask {
namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* op) {
  if (!a.same_shape(b)) {
    throw InputError(std::string(op) + ": mask shape mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
  }
}

}  // namespace

BinaryMask::BinaryMask(int height, int width, bool value)
    : height_(height), width_(width), bits_(static_cast<std::size_t>(height) * width, value ? 1 : 0) {
  if (height < 0 || width < 0) throw InputError("BinaryMask: negative dimensions");
}

BinaryMask BinaryMask::from_image(const Image& gray) {
  if (gray.channels != 1) throw InputError("BinaryMask::from_image: expected a single-channel raster");
  BinaryMask m(gray.height, gray.width);
  for (std::size_t i = 0; i < m.bits_.size(); ++i) m.bits_[i] = gray.pixels[i] != 0 ? 1 : 0;
  return m;
}

BinaryMask BinaryMask::from_soft(const Image& gray) {
  if (gray.channels != 1) throw InputError("BinaryMask::from_soft: expected a single-channel raster");
  BinaryMask m(gray.height, gray.width);
  const int peak = gray.pixels.empty() ? 0 : *std::max_element(gray.pixels.begin(), gray.pixels.end());
  if (peak == 0) return m;
  for (std::size_t i = 0; i < m.bits_.size(); ++i) m.bits_[i] = 2 * int{gray.pixels[i]} >= peak ? 1 : 0;
  return m;
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
  require_same_shape(*this, other, "subset_of");
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] && !other.bits_[i]) return false;
  return true;
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
  require_same_shape(*this, other, "union");
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

Image BinaryMask::to_image() const {
  Image img(height_, width_, 1);
  for (std::size_t i = 0; i < bits_.size(); ++i) img.pixels[i] = bits_[i] ? 255 : 0;
  return img;
}

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "intersection");
  auto ab = a.bits(), bb = b.bits();
  std::size_t n = 0;
  for (std::size_t i = 0; i < ab.size(); ++i) n += ab[i] & bb[i];
  return n;
}

std::size_t union_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "union");
  auto ab = a.bits(), bb = b.bits();
  std::size_t n = 0;
  for (std::size_t i = 0; i < ab.size(); ++i) n += ab[i] | bb[i];
  return n;
}

std::string_view to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::iou: return "iou";
    case CriterionKind::intersection_over_candidate: return "ioc";
    case CriterionKind::passthrough: return "passthrough";
  }
  return "?";
}

CriterionKind parse_criterion(std::string_view token) {
  if (token == "iou") return CriterionKind::iou;
  if (token == "ioc" || token == "intersection-over-candidate") return CriterionKind::intersection_over_candidate;
  if (token == "passthrough" || token == "none") return CriterionKind::passthrough;
  throw InputError("unknown fusion criterion '" + std::string(token) + "' (expected iou, ioc or passthrough)");
}

void FusionCriterion::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw InputError("fusion threshold must lie in [0, 1], got " + std::to_string(threshold));
}

double criterion_score(const BinaryMask& candidate, const BinaryMask& reference, CriterionKind kind) {
  require_same_shape(candidate, reference, "criterion_score");
  if (kind == CriterionKind::passthrough) return 1.0;
  const auto inter = intersection_count(candidate, reference);
  const auto denom = kind == CriterionKind::iou ? union_count(candidate, reference) : candidate.count();
  if (denom == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(denom);
}

FusionResult fuse_masks(std::span<const BinaryMask> candidates, const BinaryMask& reference,
                        const FusionCriterion& criterion) {
  criterion.validate();
  FusionResult out;
  out.mask = BinaryMask(reference.height(), reference.width());
  for (const auto& cand : candidates) require_same_shape(cand, reference, "fuse_masks");

  for (const auto& cand : candidates) {
    const bool big_enough = !criterion.min_area || cand.count() >= *criterion.min_area;
    const double score = criterion_score(cand, reference, criterion.kind);
    const bool keep = big_enough && (criterion.kind == CriterionKind::passthrough || score >= criterion.threshold);
    out.scores.push_back(score);
    out.accepted.push_back(keep);
    if (keep) {
      out.mask |= cand;
      ++out.survivors;
    }
  }
  out.warning = out.survivors == 0;
  return out;
}

MaskedImage apply_mask(const Image& image, const BinaryMask& mask, Fill fill) {
  if (image.channels != 3) throw InputError("apply_mask: expected a 3-channel image");
  if (image.height != mask.height() || image.width != mask.width())
    throw InputError("apply_mask: image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                     " does not match mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()));
  MaskedImage out{image, mask, fill};
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      if (!mask.at(y, x))
        for (int c = 0; c < 3; ++c) out.pixels.at(y, x, c) = fill[c];
  return out;
}

std::string encode_rle(const BinaryMask& mask) {
  std::ostringstream os;
  os << "rle1 " << mask.height() << ' ' << mask.width() << '\n';
  auto bits = mask.bits();
  std::uint8_t current = 0;
  std::size_t run = 0;
  bool first = true;
  auto emit = [&](std::size_t n) {
    if (!first) os << ' ';
    os << n;
    first = false;
  };
  for (auto b : bits) {
    if (b == current) {
      ++run;
    } else {
      emit(run);
      current = b;
      run = 1;
    }
  }
  emit(run);
  os << '\n';
  return os.str();
}

BinaryMask decode_rle(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string magic;
  int h = -1, w = -1;
  if (!(is >> magic >> h >> w) || magic != "rle1" || h < 0 || w < 0) throw ParseError("bad RLE header", 1);
  BinaryMask m(h, w);
  const std::size_t total = static_cast<std::size_t>(h) * w;
  std::size_t pos = 0;
  bool value = false;
  long long run;
  while (is >> run) {
    if (run < 0 || pos + static_cast<std::size_t>(run) > total) throw ParseError("RLE runs exceed mask size", 2);
    for (long long k = 0; k < run; ++k, ++pos) m.set(static_cast<int>(pos / w), static_cast<int>(pos % w), value);
    value = !value;
  }
  if (!is.eof()) throw ParseError("RLE run list contains a non-integer token", 2);
  if (pos != total) throw ParseError("RLE runs cover " + std::to_string(pos) + " of " + std::to_string(total) + " pixels", 2);
  return m;
}

BinaryMask read_mask(const std::filesystem::path& path) {
  if (path.extension() == ".rle") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mask: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return decode_rle(ss.str());
  }
  return BinaryMask::from_image(read_image(path, 1));
}

BinaryMask read_soft_mask(const std::filesystem::path& path) {
  if (path.extension() == ".rle") return read_mask(path);
  return BinaryMask::from_soft(read_image(path, 1));
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  if (path.extension() == ".rle") {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << encode_rle(mask);
    if (!out) throw std::runtime_error("cannot write mask: " + path.string());
    return;
  }
  write_image(path, mask.to_image());
}

}  // namespace reid::mask
