#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace reid::nn {

/// Cache-line aligned storage, so vectorized reductions over mapped buffers always start at the same
/// alignment offset and sum in the same order from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

/// NCHW extent. Vectors are stored as N x C x 1 x 1.
struct Shape {
  int n = 0, c = 0, h = 1, w = 1;
  std::size_t numel() const noexcept { return static_cast<std::size_t>(n) * c * h * w; }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  std::size_t sample() const noexcept { return static_cast<std::size_t>(c) * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
  std::string str() const;
};

/// Dense float tensor with value semantics.
struct Tensor {
  Shape shape;
  FloatBuffer values;

  Tensor() = default;
  explicit Tensor(Shape s, float fill = 0.0f) : shape(s), values(s.numel(), fill) {}

  std::size_t numel() const noexcept { return values.size(); }
  float* data() noexcept { return values.data(); }
  const float* data() const noexcept { return values.data(); }
  float* sample(int n) noexcept { return values.data() + static_cast<std::size_t>(n) * shape.sample(); }
  const float* sample(int n) const noexcept { return values.data() + static_cast<std::size_t>(n) * shape.sample(); }
  float& at(int n, int c, int y = 0, int x = 0) noexcept {
    return values[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) * shape.w + x];
  }
  float at(int n, int c, int y = 0, int x = 0) const noexcept {
    return values[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) * shape.w + x];
  }
  void zero() noexcept { std::fill(values.begin(), values.end(), 0.0f); }
  Tensor& operator+=(const Tensor& other);
  bool all_finite() const noexcept;
};

/// Stacks along the batch axis.
Tensor concat_batch(const Tensor& a, const Tensor& b);
/// Samples [begin, end).
Tensor slice_batch(const Tensor& t, int begin, int end);
/// Mirrors along the width axis.
Tensor flip_width(const Tensor& t);

/// 64-bit FNV-1a over the raw float bytes; used to fingerprint preprocessed inputs.
std::uint64_t fingerprint(const Tensor& t);

}  // namespace reid::nn
