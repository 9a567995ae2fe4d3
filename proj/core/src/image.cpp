#include "reid/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <stdexcept>

namespace reid {
namespace {

cv::Mat as_mat(const Image& image) {
  return cv::Mat(image.height, image.width, CV_8UC(image.channels),
                 const_cast<std::uint8_t*>(image.pixels.data()));
}

Image from_mat(const cv::Mat& mat) {
  cv::Mat m = mat.isContinuous() ? mat : mat.clone();
  Image out(m.rows, m.cols, m.channels());
  std::copy(m.data, m.data + out.pixels.size(), out.pixels.begin());
  return out;
}

}  // namespace

Image read_image(const std::filesystem::path& path, int channels) {
  if (channels != 1 && channels != 3) throw std::invalid_argument("read_image: channels must be 1 or 3");
  cv::Mat m = cv::imread(path.string(), channels == 3 ? cv::IMREAD_COLOR : cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw std::runtime_error("cannot decode image: " + path.string());
  if (channels == 3) cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
  return from_mat(m);
}

void write_image(const std::filesystem::path& path, const Image& image) {
  if (image.empty()) throw std::invalid_argument("write_image: empty image");
  cv::Mat m = as_mat(image);
  cv::Mat bgr;
  if (image.channels == 3) {
    cv::cvtColor(m, bgr, cv::COLOR_RGB2BGR);
  } else {
    bgr = m;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto ext = path.extension().string();
  std::filesystem::path target = path;
  if (ext != ".png" && ext != ".ppm" && ext != ".pgm") target += ".png";
  std::vector<int> params;
  if (target.extension() == ".png") params = {cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imwrite(target.string(), bgr, params)) throw std::runtime_error("cannot write image: " + target.string());
}

Image resize_bilinear(const Image& image, int height, int width) {
  if (image.height == height && image.width == width) return image;
  cv::Mat out;
  cv::resize(as_mat(image), out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  return from_mat(out);
}

Image resize_nearest(const Image& image, int height, int width) {
  if (image.height == height && image.width == width) return image;
  cv::Mat out;
  cv::resize(as_mat(image), out, cv::Size(width, height), 0, 0, cv::INTER_NEAREST);
  return from_mat(out);
}

Image flip_horizontal(const Image& image) {
  Image out(image.height, image.width, image.channels);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < image.channels; ++c) out.at(y, image.width - 1 - x, c) = image.at(y, x, c);
  return out;
}

Image crop(const Image& image, int y0, int x0, int height, int width) {
  if (y0 < 0 || x0 < 0 || y0 + height > image.height || x0 + width > image.width)
    throw std::invalid_argument("crop: window outside image");
  Image out(height, width, image.channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = image.at(y0 + y, x0 + x, c);
  return out;
}

}  // namespace reid
