#pragma once

#include "reid/image.hpp"
#include "reid/mask.hpp"
#include "reid/rng.hpp"

#include <filesystem>
#include <string>

namespace reid::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "reid");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

mask::BinaryMask rect_mask(int h, int w, int y0, int x0, int rh, int rw);
mask::BinaryMask random_rect_mask(Rng& rng, int h, int w);
Image random_image(Rng& rng, int h, int w, int channels = 3);

}  // namespace reid::testing
