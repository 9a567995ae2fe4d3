#include "reid/tensor.hpp"

#include "reid/errors.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>

namespace reid::nn {

std::string Shape::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!(shape == other.shape)) throw InputError("tensor add: shape " + shape.str() + " vs " + other.shape.str());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

bool Tensor::all_finite() const noexcept {
  for (float v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor concat_batch(const Tensor& a, const Tensor& b) {
  if (a.shape.c != b.shape.c || a.shape.h != b.shape.h || a.shape.w != b.shape.w)
    throw InputError("concat_batch: " + a.shape.str() + " vs " + b.shape.str());
  Shape s = a.shape;
  s.n = a.shape.n + b.shape.n;
  Tensor out(s);
  std::copy(a.values.begin(), a.values.end(), out.values.begin());
  std::copy(b.values.begin(), b.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(a.numel()));
  return out;
}

Tensor slice_batch(const Tensor& t, int begin, int end) {
  if (begin < 0 || end > t.shape.n || begin > end) throw InputError("slice_batch: bad range");
  Shape s = t.shape;
  s.n = end - begin;
  Tensor out(s);
  std::copy(t.sample(begin), t.sample(begin) + out.numel(), out.values.begin());
  return out;
}

Tensor flip_width(const Tensor& t) {
  Tensor out(t.shape);
  const int W = t.shape.w;
  const std::size_t rows = t.numel() / static_cast<std::size_t>(W);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* src = t.data() + r * W;
    float* dst = out.data() + r * W;
    for (int x = 0; x < W; ++x) dst[W - 1 - x] = src[x];
  }
  return out;
}

std::uint64_t fingerprint(const Tensor& t) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const int dims[4] = {t.shape.n, t.shape.c, t.shape.h, t.shape.w};
  mix(dims, sizeof(dims));
  mix(t.values.data(), t.values.size() * sizeof(float));
  return h;
}

}  // namespace reid::nn
