#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace reid::testing {
namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

mask::BinaryMask rect_mask(int h, int w, int y0, int x0, int rh, int rw) {
  mask::BinaryMask m(h, w);
  for (int y = y0; y < y0 + rh && y < h; ++y)
    for (int x = x0; x < x0 + rw && x < w; ++x)
      if (y >= 0 && x >= 0) m.set(y, x, true);
  return m;
}

mask::BinaryMask random_rect_mask(Rng& rng, int h, int w) {
  const int rh = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(h)));
  const int rw = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(w)));
  const int y0 = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(h - rh + 1)));
  const int x0 = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(w - rw + 1)));
  return rect_mask(h, w, y0, x0, rh, rw);
}

Image random_image(Rng& rng, int h, int w, int channels) {
  Image img(h, w, channels);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(uniform_index(rng, 256));
  return img;
}

}  // namespace reid::testing
