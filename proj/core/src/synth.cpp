#include "reid/synth.hpp"

#include "reid/errors.hpp"
#include "reid/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace reid::synth {
namespace fs = std::filesystem;
using data::Orientation;

const char* to_string(Species s) {
  switch (s) {
    case Species::striped: return "striped";
    case Species::spotted: return "spotted";
    case Species::patched: return "patched";
  }
  return "?";
}

Species parse_species(const std::string& s) {
  if (s == "striped" || s == "tiger") return Species::striped;
  if (s == "spotted" || s == "elephant") return Species::spotted;
  if (s == "patched" || s == "yak") return Species::patched;
  throw ConfigError("species", "expected striped, spotted or patched, got '" + s + "'");
}

void ToyDataConfig::validate() const {
  if (train_entities < 2) throw ConfigError("train_entities", "need at least 2");
  if (test_entities < 2) throw ConfigError("test_entities", "need at least 2");
  if (images_per_side < 1) throw ConfigError("images_per_side", "need at least 1");
  if (image_size < 32) throw ConfigError("image_size", "must be at least 32");
  if (cameras < 1) throw ConfigError("cameras", "need at least 1");
}

namespace {

using Rgb = std::array<double, 3>;

Rgb hsv(double h, double s, double v) {
  h = std::fmod(h, 1.0) * 6.0;
  const int i = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

// Fixed per-entity appearance; everything a view varies is drawn separately.
struct Identity {
  Rgb coat, mark, head;
  double frequency, angle, phase, aspect;
  std::array<std::array<double, 3>, 6> spots;  // body-local (u, v, radius)
  double bg_hue, bg_sat, bg_val, bg_dir;
};

Identity make_identity(const ToyDataConfig& cfg, int entity) {
  Rng rng(derive_seed(cfg.seed, {0x1d, static_cast<std::uint64_t>(entity)}));
  Identity id;
  // Golden-ratio hue steps interleave train and test entities over the colour wheel.
  const double hue = std::fmod(entity * 0.6180339887 + uniform(rng, -0.04, 0.04) + 1.0, 1.0);
  id.coat = hsv(hue, uniform(rng, 0.55, 0.95), uniform(rng, 0.65, 0.95));
  id.mark = hsv(hue + uniform(rng, 0.3, 0.7), uniform(rng, 0.3, 0.9), uniform(rng, 0.1, 0.45));
  id.head = hsv(uniform(rng, 0.0, 1.0), uniform(rng, 0.2, 0.8), uniform(rng, 0.4, 1.0));
  id.frequency = uniform(rng, 1.5, 4.5);
  id.angle = uniform(rng, -1.2, 1.2);
  id.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  id.aspect = uniform(rng, 0.5, 0.75);
  for (auto& s : id.spots) s = {uniform(rng, -0.8, 0.8), uniform(rng, -0.6, 0.6), uniform(rng, 0.15, 0.35)};
  id.bg_hue = std::fmod(hue + 0.5 + uniform(rng, -0.1, 0.1) + 1.0, 1.0);
  id.bg_sat = uniform(rng, 0.3, 0.6);
  id.bg_val = uniform(rng, 0.4, 0.75);
  id.bg_dir = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  if (cfg.identity_background) {
    // Every animal wears the species colours; the background becomes the easy cue.
    id.coat = hsv(0.08, 0.8, 0.85);
    id.mark = hsv(0.05, 0.6, 0.15);
    id.head = hsv(0.08, 0.5, 0.7);
    id.bg_hue = std::fmod(entity * 0.6180339887 + 0.3, 1.0);
  }
  return id;
}

double pattern(const Identity& id, Species species, double u, double v) {
  switch (species) {
    case Species::striped: {
      const double t = u * std::cos(id.angle) + v * std::sin(id.angle);
      return std::sin(2.0 * std::numbers::pi * id.frequency * t + id.phase) > 0.2 ? 1.0 : 0.0;
    }
    case Species::spotted: {
      for (const auto& s : id.spots) {
        const double du = u - s[0], dv = v - s[1];
        if (du * du + dv * dv < s[2] * s[2] * 0.5) return 1.0;
      }
      return 0.0;
    }
    case Species::patched: {
      const double a = std::sin(id.frequency * 1.7 * u + id.phase) + std::cos(id.frequency * 1.3 * v - id.angle);
      return a > 0.4 ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

void box_blur(std::vector<double>& f, int h, int w, int r) {
  std::vector<double> tmp(f.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      int n = 0;
      for (int k = -r; k <= r; ++k) {
        const int xx = std::clamp(x + k, 0, w - 1);
        s += f[static_cast<std::size_t>(y * w + xx)];
        ++n;
      }
      tmp[static_cast<std::size_t>(y * w + x)] = s / n;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      int n = 0;
      for (int k = -r; k <= r; ++k) {
        const int yy = std::clamp(y + k, 0, h - 1);
        s += tmp[static_cast<std::size_t>(yy * w + x)];
        ++n;
      }
      f[static_cast<std::size_t>(y * w + x)] = s / n;
    }
}

}  // namespace

ToySample render_sample(const ToyDataConfig& cfg, int entity, Orientation side, int index) {
  const int total = cfg.train_entities + cfg.test_entities;
  if (entity < 0 || entity >= total) throw InputError("render_sample: entity out of range");
  const Identity id = make_identity(cfg, entity);
  Rng rng(derive_seed(cfg.seed, {0x5a, static_cast<std::uint64_t>(entity), static_cast<std::uint64_t>(side),
                                 static_cast<std::uint64_t>(index)}));
  const int n = cfg.image_size;
  const double sc = n / 64.0;

  ToySample out;
  out.entity = "e" + std::to_string(entity);
  out.orientation = side;
  out.camera = (index + static_cast<int>(side)) % cfg.cameras;
  out.test = entity >= cfg.train_entities;
  out.stem = out.entity + "_" + (side == Orientation::left ? "L" : "R") + "_" + std::to_string(index);

  // Background: smooth two-tone field plus a few distractor blobs.
  Rgb bg_a, bg_b;
  double bg_hue, gdir;
  if (cfg.identity_background) {
    bg_hue = id.bg_hue + uniform(rng, -0.02, 0.02);
    bg_a = hsv(bg_hue, id.bg_sat, id.bg_val);
    bg_b = hsv(bg_hue + 0.1, id.bg_sat * 0.7, id.bg_val * 0.8);
    gdir = id.bg_dir + uniform(rng, -0.3, 0.3);
  } else {
    bg_hue = uniform(rng, 0.0, 1.0);
    bg_a = hsv(bg_hue, uniform(rng, 0.25, 0.6), uniform(rng, 0.35, 0.75));
    bg_b = hsv(bg_hue + uniform(rng, -0.08, 0.08), uniform(rng, 0.2, 0.6), uniform(rng, 0.3, 0.8));
    gdir = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  std::vector<double> noise(static_cast<std::size_t>(n * n));
  for (auto& v : noise) v = uniform(rng, -1.0, 1.0);
  box_blur(noise, n, n, std::max(1, static_cast<int>(3 * sc)));

  struct Blob { double x, y, r; Rgb c; };
  std::vector<Blob> blobs;
  const int nblobs = 1 + static_cast<int>(uniform_index(rng, 2));
  for (int b = 0; b < nblobs; ++b) {
    Blob bl;
    const bool top = uniform(rng) < 0.5;
    bl.x = uniform(rng, 0.1, 0.9) * n;
    bl.y = (top ? uniform(rng, 0.03, 0.17) : uniform(rng, 0.83, 0.97)) * n;
    bl.r = uniform(rng, 4.0, 7.0) * sc;
    bl.c = hsv(bg_hue + uniform(rng, -0.15, 0.15), uniform(rng, 0.2, 0.5), uniform(rng, 0.2, 0.9));
    blobs.push_back(bl);
  }

  // Body pose.
  const double facing = side == Orientation::left ? -1.0 : 1.0;  // head direction in x
  const double cx = n * 0.5 + uniform(rng, -4.0, 4.0) * sc;
  const double cy = n * 0.52 + uniform(rng, -3.0, 3.0) * sc;
  const double scale = uniform(rng, 0.9, 1.1) * sc;
  const double a = 18.0 * scale, b = a * id.aspect;
  const double rot = uniform(rng, -0.15, 0.15);
  const double cr = std::cos(rot), sr = std::sin(rot);
  const double head_r = 7.0 * scale;
  const double hx = cx + facing * (a + head_r * 0.55) * cr, hy = cy + facing * (a + head_r * 0.55) * sr - 2.0 * scale;
  const double tail_x = cx - facing * a * cr, tail_y = cy - facing * a * sr;
  const double light = 1.0 + (out.camera == 1 ? 0.12 : 0.0) + uniform(rng, -0.06, 0.06);

  out.image = Image(n, n, 3);
  out.foreground = mask::BinaryMask(n, n);
  mask::BinaryMask body_m(n, n), head_m(n, n), tail_m(n, n);
  std::vector<mask::BinaryMask> blob_m(blobs.size(), mask::BinaryMask(n, n));

  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double t = ((px - n * 0.5) * std::cos(gdir) + (py - n * 0.5) * std::sin(gdir)) / n;
      const double shade = std::clamp(0.5 + t, 0.0, 1.0);
      const double nz = noise[static_cast<std::size_t>(y * n + x)];
      Rgb c;
      for (int k = 0; k < 3; ++k) c[k] = bg_a[k] * (1 - shade) + bg_b[k] * shade + 0.08 * nz;
      for (std::size_t bi = 0; bi < blobs.size(); ++bi) {
        const auto& bl = blobs[bi];
        if ((px - bl.x) * (px - bl.x) + (py - bl.y) * (py - bl.y) < bl.r * bl.r) {
          c = bl.c;
          blob_m[bi].set(y, x, true);
        }
      }
      // Body-local coordinates; mirrored for the right side so the coat pattern is the same animal seen from the other flank.
      const double dx = px - cx, dy = py - cy;
      const double lu = (dx * cr + dy * sr) / a, lv = (-dx * sr + dy * cr) / b;
      const double tx = px - tail_x, ty = py - tail_y;
      const bool in_tail = std::abs(ty) < 1.2 * scale && tx * -facing > 0 && tx * -facing < 9.0 * scale;
      if (in_tail) {
        c = id.mark;
        tail_m.set(y, x, true);
      }
      if (lu * lu + lv * lv <= 1.0) {
        const double u = lu * -facing;  // u grows towards the tail on both sides
        c = pattern(id, cfg.species, u, lv) > 0.5 ? id.mark : id.coat;
        body_m.set(y, x, true);
      }
      const double ddx = px - hx, ddy = py - hy;
      if (ddx * ddx + ddy * ddy <= head_r * head_r) {
        c = id.head;
        const double ex = hx + facing * head_r * 0.45, ey = hy - head_r * 0.3;
        if ((px - ex) * (px - ex) + (py - ey) * (py - ey) < 1.6 * scale * scale) c = {0.05, 0.05, 0.05};
        head_m.set(y, x, true);
      }
      for (int k = 0; k < 3; ++k)
        out.image.at(y, x, k) = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * c[static_cast<std::size_t>(k)] * light), 0L, 255L));
    }
  // Occlusion by a later body part wins: carve overlaps out of the earlier masks.
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      if (head_m.at(y, x)) {
        body_m.set(y, x, false);
        tail_m.set(y, x, false);
      }
      if (body_m.at(y, x)) tail_m.set(y, x, false);
      const bool fg = body_m.at(y, x) || head_m.at(y, x) || tail_m.at(y, x);
      out.foreground.set(y, x, fg);
      if (fg)
        for (auto& bm : blob_m) bm.set(y, x, false);
    }

  out.candidates.push_back(body_m);
  out.candidates.push_back(head_m);
  if (tail_m.count() > 0) out.candidates.push_back(tail_m);
  for (auto& bm : blob_m)
    if (bm.count() > 0) out.candidates.push_back(bm);

  // Saliency reference: blurred foreground with a little bleed, as soft values.
  std::vector<double> soft(static_cast<std::size_t>(n * n));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) soft[static_cast<std::size_t>(y * n + x)] = out.foreground.at(y, x) ? 1.0 : 0.0;
  box_blur(soft, n, n, 1);
  out.reference = Image(n, n, 1);
  for (std::size_t i = 0; i < soft.size(); ++i)
    out.reference.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::min(1.0, soft[i] * 1.15)));
  return out;
}

ToyDataset write_toy_dataset(const ToyDataConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  ToyDataset ds;
  ds.root = out_dir;
  ds.candidates = out_dir / "candidates";
  ds.reference = out_dir / "reference";
  ds.foreground = out_dir / "foreground";
  ds.train_manifest = out_dir / "train.csv";
  ds.test_manifest = out_dir / "test.csv";
  ds.all_manifest = out_dir / "all.csv";

  data::DatasetManifest train, test, all;
  train.root = test.root = all.root = out_dir;
  auto add = [](data::DatasetManifest& m, data::SampleRecord r, const std::string& label) {
    auto it = std::find(m.raw_labels.begin(), m.raw_labels.end(), label);
    if (it == m.raw_labels.end()) {
      m.raw_labels.push_back(label);
      it = m.raw_labels.end() - 1;
    }
    r.entity_id = static_cast<int>(it - m.raw_labels.begin());
    m.records.push_back(std::move(r));
  };
  const int total = cfg.train_entities + cfg.test_entities;
  for (int e = 0; e < total; ++e)
    for (Orientation side : {Orientation::left, Orientation::right})
      for (int i = 0; i < cfg.images_per_side; ++i) {
        const ToySample s = render_sample(cfg, e, side, i);
        write_image(out_dir / "images" / (s.stem + ".png"), s.image);
        write_image(ds.reference / (s.stem + ".png"), s.reference);
        mask::write_mask(ds.foreground / (s.stem + ".png"), s.foreground);
        for (std::size_t k = 0; k < s.candidates.size(); ++k)
          mask::write_mask(ds.candidates / s.stem / (std::to_string(k) + ".png"), s.candidates[k]);
        data::SampleRecord r;
        r.image_path = "images/" + s.stem + ".png";
        r.orientation = side;
        r.camera_id = s.camera;
        r.split = s.test ? data::Split::test_gallery : data::Split::train;
        add(s.test ? test : train, r, s.entity);
        add(all, r, s.entity);
        ++ds.images;
      }
  for (auto* m : {&train, &test, &all}) m->num_entities = static_cast<int>(m->raw_labels.size());
  data::write_manifest(ds.train_manifest, train);
  data::write_manifest(ds.test_manifest, test);
  data::write_manifest(ds.all_manifest, all);
  return ds;
}

}  // namespace reid::synth
