#include "reid/augment.hpp"

#include "reid/errors.hpp"
#include "reid/mask.hpp"
#include "reid/rng.hpp"

#include <cmath>

namespace reid::data {

AugmentationConfig AugmentationConfig::identity(int size) {
  AugmentationConfig c;
  c.target_size = size;
  c.resize_size = size;
  c.random_crop = false;
  c.flip_probability = 0.0;
  c.erase_probability = 0.0;
  return c;
}

void AugmentationConfig::validate() const {
  if (target_size < 8) throw ConfigError("target_size", "must be >= 8");
  if (random_crop && resize_size < target_size) throw ConfigError("resize_size", "must be >= target_size");
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(name, "must lie in [0, 1]");
  };
  prob(flip_probability, "flip_probability");
  prob(erase_probability, "erase_probability");
  if (!(erase_area_min > 0.0 && erase_area_min <= erase_area_max && erase_area_max < 1.0))
    throw ConfigError("erase_area", "need 0 < min <= max < 1");
  if (!(erase_aspect_min > 0.0 && erase_aspect_min <= 1.0)) throw ConfigError("erase_aspect_min", "must lie in (0, 1]");
}

AugmentedSample augment_image(const Image& image, Orientation orientation, const AugmentationConfig& config,
                              std::uint64_t seed) {
  if (image.channels != 3 || image.empty()) throw InputError("augment: expected a non-empty 3-channel image");
  Rng rng(seed);
  AugmentedSample out{{}, orientation, {}};
  const int T = config.target_size;

  if (config.random_crop && config.resize_size > T) {
    const int R = config.resize_size;
    Image big = resize_bilinear(image, R, R);
    out.geometry.crop_y = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(R - T + 1)));
    out.geometry.crop_x = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(R - T + 1)));
    out.image = crop(big, out.geometry.crop_y, out.geometry.crop_x, T, T);
  } else {
    out.image = resize_bilinear(image, T, T);
  }

  if (config.flip_probability > 0.0 && uniform(rng) < config.flip_probability) {
    out.image = flip_horizontal(out.image);
    out.orientation = flipped(orientation);
    out.geometry.flipped = true;
  }

  if (config.erase_probability > 0.0 && uniform(rng) < config.erase_probability) {
    const double area = static_cast<double>(T) * T;
    const double log_lo = std::log(config.erase_aspect_min), log_hi = -log_lo;
    for (int attempt = 0; attempt < 10; ++attempt) {
      const double target = uniform(rng, config.erase_area_min, config.erase_area_max) * area;
      const double aspect = std::exp(uniform(rng, log_lo, log_hi));
      const int h = static_cast<int>(std::lround(std::sqrt(target * aspect)));
      const int w = static_cast<int>(std::lround(std::sqrt(target / aspect)));
      if (h < 1 || w < 1 || h > T || w > T) continue;
      EraseRect r;
      r.height = h;
      r.width = w;
      r.y = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(T - h + 1)));
      r.x = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(T - w + 1)));
      for (int y = r.y; y < r.y + h; ++y)
        for (int x = r.x; x < r.x + w; ++x)
          for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = config.erase_fill[c];
      out.geometry.erase = r;
      break;
    }
  }
  return out;
}

Image load_record_image(const DatasetManifest& manifest, const SampleRecord& record, bool apply_mask) {
  Image img = read_image(manifest.image_file(record), 3);
  if (apply_mask && record.mask_path) {
    auto m = mask::read_mask(manifest.resolve(*record.mask_path));
    if (m.height() != img.height || m.width() != img.width) {
      m = mask::BinaryMask::from_image(resize_nearest(m.to_image(), img.height, img.width));
    }
    img = mask::apply_mask(img, m).pixels;
  }
  return img;
}

AugmentedSample augment(const DatasetManifest& manifest, const SampleRecord& record,
                        const AugmentationConfig& config, std::uint64_t seed, bool apply_mask) {
  return augment_image(load_record_image(manifest, record, apply_mask), record.orientation, config, seed);
}

}  // namespace reid::data
