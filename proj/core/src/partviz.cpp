#include "reid/partviz.hpp"

#include "reid/errors.hpp"

#include <algorithm>
#include <cmath>

namespace reid::viz {

GridCell to_grid(double x, double y, int width, int height, int grid_w, int grid_h) {
  const auto cell = [](double p, int n, int g) {
    return std::clamp(static_cast<int>(std::lround((p + 0.5) * g / n - 0.5)), 0, g - 1);
  };
  return {cell(y, height, grid_h), cell(x, width, grid_w)};
}

std::pair<double, double> to_pixel(GridCell cell, int width, int height, int grid_w, int grid_h) {
  return {(cell.x + 0.5) * width / grid_w - 0.5, (cell.y + 0.5) * height / grid_h - 0.5};
}

MatchResult match_descriptors(const nn::Tensor& source, const nn::Tensor& target, GridCell cell) {
  const auto& s = source.shape;
  const auto& t = target.shape;
  if (s.n != 1 || t.n != 1 || s.c != t.c) throw InputError("match_descriptors: expected two 1 x D x h x w fields");
  if (cell.y < 0 || cell.y >= s.h || cell.x < 0 || cell.x >= s.w) throw InputError("match_descriptors: query cell outside the source grid");
  MatchResult r;
  r.source_cell = cell;
  r.grid_height = t.h;
  r.grid_width = t.w;
  std::vector<double> q(static_cast<std::size_t>(s.c));
  double qn = 0.0;
  for (int c = 0; c < s.c; ++c) {
    q[static_cast<std::size_t>(c)] = source.at(0, c, cell.y, cell.x);
    qn += q[static_cast<std::size_t>(c)] * q[static_cast<std::size_t>(c)];
  }
  qn = std::sqrt(qn);
  r.similarity.assign(t.plane(), 0.0);
  r.best_similarity = -2.0;
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x) {
      double dot = 0.0, tn = 0.0;
      for (int c = 0; c < t.c; ++c) {
        const double v = target.at(0, c, y, x);
        dot += q[static_cast<std::size_t>(c)] * v;
        tn += v * v;
      }
      const double denom = qn * std::sqrt(tn);
      const double cosv = denom > 0.0 ? std::clamp(dot / denom, -1.0, 1.0) : 0.0;
      r.similarity[static_cast<std::size_t>(y) * t.w + x] = cosv;
      if (cosv > r.best_similarity) {
        r.best_similarity = cosv;
        r.best = {y, x};
      }
    }
  return r;
}

PointMatch match_point(nn::ReIdModel& model, const MatchQuery& query) {
  const int size = model.config().input_size;
  const Image& src = query.source;
  if (query.x < 0 || query.y < 0 || query.x >= src.width || query.y >= src.height)
    throw InputError("match_point: query pixel outside the source image");
  auto prep = [&](const Image& img) {
    const Image resized = img.height == size && img.width == size ? img : resize_bilinear(img, size, size);
    return model.preprocess(std::span<const Image>(&resized, 1));
  };
  const nn::Tensor a = prep(src), b = prep(query.target);
  PointMatch pm;
  pm.source_hash = nn::fingerprint(a);
  pm.target_hash = nn::fingerprint(b);
  const nn::Tensor fa = model.dense_features(a, query.layer);
  const nn::Tensor fb = model.dense_features(b, query.layer);
  const GridCell cell = to_grid(query.x, query.y, src.width, src.height, fa.shape.w, fa.shape.h);
  pm.match = match_descriptors(fa, fb, cell);
  if (query.foreground) {
    const auto idx = static_cast<std::size_t>(std::lround(query.y)) * static_cast<std::size_t>(src.width) +
                     static_cast<std::size_t>(std::lround(query.x));
    if (idx < query.foreground->size() && (*query.foreground)[idx] == 0)
      pm.match.warnings.push_back("query pixel lies on a masked (background) region");
  }
  const auto [px, py] = to_pixel(pm.match.best, query.target.width, query.target.height, fb.shape.w, fb.shape.h);
  pm.x = px;
  pm.y = py;
  return pm;
}

std::vector<double> upsample(const std::vector<double>& grid, int gh, int gw, int height, int width) {
  std::vector<double> out(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    const double sy = std::clamp((y + 0.5) * gh / height - 0.5, 0.0, gh - 1.0);
    const int y0 = static_cast<int>(sy), y1 = std::min(y0 + 1, gh - 1);
    const double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = std::clamp((x + 0.5) * gw / width - 0.5, 0.0, gw - 1.0);
      const int x0 = static_cast<int>(sx), x1 = std::min(x0 + 1, gw - 1);
      const double fx = sx - x0;
      auto g = [&](int yy, int xx) { return grid[static_cast<std::size_t>(yy) * gw + xx]; };
      out[static_cast<std::size_t>(y) * width + x] =
          (1 - fy) * ((1 - fx) * g(y0, x0) + fx * g(y0, x1)) + fy * ((1 - fx) * g(y1, x0) + fx * g(y1, x1));
    }
  }
  return out;
}

std::array<std::uint8_t, 3> colormap(double cosine) {
  const double t = (std::clamp(cosine, -1.0, 1.0) + 1.0) * 0.5;  // 0 = blue, 0.5 = white, 1 = red
  auto u8 = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  if (t < 0.5) {
    const double k = t / 0.5;
    return {u8(k), u8(k), 255};
  }
  const double k = (1.0 - t) / 0.5;
  return {255, u8(k), u8(k)};
}

namespace {

void dot(Image& img, int ox, int oy, double x, double y, std::array<std::uint8_t, 3> c, int panel_w, int panel_h) {
  const int r = std::max(2, panel_w / 32);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy > r * r) continue;
      const int px = static_cast<int>(std::lround(x)) + dx, py = static_cast<int>(std::lround(y)) + dy;
      if (px < 0 || py < 0 || px >= panel_w || py >= panel_h) continue;
      for (int k = 0; k < 3; ++k) img.at(oy + py, ox + px, k) = c[static_cast<std::size_t>(k)];
    }
}

void blit(Image& canvas, const Image& img, int ox, int oy) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int k = 0; k < 3; ++k) canvas.at(oy + y, ox + x, k) = img.at(y, x, img.channels == 3 ? k : 0);
}

}  // namespace

Image render_panel(const MatchQuery& query, const PointMatch& match) {
  const int w = query.target.width, h = query.target.height, m = kPanelMargin;
  Image canvas(h + 2 * m, 3 * w + 4 * m, 3, 255);
  const Image src = query.source.height == h && query.source.width == w ? query.source
                                                                        : resize_bilinear(query.source, h, w);
  blit(canvas, src, m, m);
  dot(canvas, m, m, query.x * w / query.source.width, query.y * h / query.source.height, {0, 220, 0}, w, h);
  blit(canvas, query.target, 2 * m + w, m);
  dot(canvas, 2 * m + w, m, match.x, match.y, {230, 0, 0}, w, h);

  const auto heat = upsample(match.match.similarity, match.match.grid_height, match.match.grid_width, h, w);
  const int ox = 3 * m + 2 * w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto c = colormap(heat[static_cast<std::size_t>(y) * w + x]);
      for (int k = 0; k < 3; ++k) {
        const int base = query.target.at(y, x, query.target.channels == 3 ? k : 0);
        canvas.at(m + y, ox + x, k) = static_cast<std::uint8_t>((base + 2 * c[static_cast<std::size_t>(k)] + 1) / 3);
      }
    }
  return canvas;
}

void write_panel(const std::filesystem::path& path, const MatchQuery& query, const PointMatch& match) {
  write_image(path, render_panel(query, match));
}

}  // namespace reid::viz
