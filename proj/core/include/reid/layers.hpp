#pragma once

#include "reid/rng.hpp"
#include "reid/tensor.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace reid::nn {

enum class Mode { train, eval };

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool decay = true;  ///< false for biases and normalization affine terms
};

/// Flat view over the learnable parameters and persistent buffers of a layer tree.
struct ParameterSet {
  std::vector<Parameter*> params;
  std::vector<std::pair<std::string, Tensor*>> buffers;
};

/// A differentiable layer. backward() consumes the state cached by the most recent forward()
/// and accumulates parameter gradients into Parameter::grad.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void collect(ParameterSet& /*set*/, const std::string& /*prefix*/) {}
};

using LayerPtr = std::unique_ptr<Layer>;

class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias, Rng& init);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  void collect(ParameterSet& set, const std::string& prefix) override;

  int out_channels() const noexcept { return out_; }
  Parameter& weight() noexcept { return weight_; }

 private:
  void im2col(const float* x, int H, int W, int Ho, int Wo, float* col) const;
  void col2im(const float* col, int H, int W, int Ho, int Wo, float* dx) const;
  bool pointwise() const noexcept { return k_ == 1 && stride_ == 1 && pad_ == 0; }

  int in_, out_, k_, stride_, pad_;
  bool has_bias_;
  Parameter weight_, bias_;
  Tensor input_;
};

/// Per-channel batch normalization over (N, H, W); also serves 1-D features (H = W = 1).
class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(int channels, double momentum = 0.1, double eps = 1e-5);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  void collect(ParameterSet& set, const std::string& prefix) override;

 private:
  int channels_;
  double momentum_, eps_;
  Parameter gamma_, beta_;
  Tensor running_mean_, running_var_;
  Tensor xhat_;
  std::vector<double> inv_std_;
  Mode last_mode_ = Mode::train;
};

class ReLU final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor output_;
};

class MaxPool2d final : public Layer {
 public:
  MaxPool2d(int kernel, int stride, int padding) : k_(kernel), stride_(stride), pad_(padding) {}
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;

 private:
  int k_, stride_, pad_;
  Shape in_shape_;
  std::vector<int> argmax_;
};

class GlobalAvgPool final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Shape in_shape_;
};

/// y = W x + b on flattened samples; output N x out x 1 x 1.
class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features, bool bias, Rng& init, double init_std = 0.0);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  void collect(ParameterSet& set, const std::string& prefix) override;

 private:
  int in_, out_;
  bool has_bias_;
  Parameter weight_, bias_;
  Tensor input_;
};

/// Inverted dropout; the mask stream is reseeded per step via reseed().
class Dropout final : public Layer {
 public:
  explicit Dropout(double p) : p_(p) {}
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

 private:
  double p_;
  Rng rng_{0};
  FloatBuffer mask_;
};

/// Unit L2 norm across channels at every spatial position.
class ChannelL2Normalize final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor output_;
  FloatBuffer norms_;
};

class Sequential final : public Layer {
 public:
  Sequential() = default;
  Sequential& add(std::string name, LayerPtr layer);
  template <class L, class... Args>
  L& emplace(std::string name, Args&&... args) {
    auto p = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *p;
    add(std::move(name), std::move(p));
    return ref;
  }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  void collect(ParameterSet& set, const std::string& prefix) override;
  bool empty() const noexcept { return layers_.empty(); }

 private:
  std::vector<std::pair<std::string, LayerPtr>> layers_;
};

/// Squeeze-and-excitation channel gating: x * sigmoid(W2 relu(W1 gap(x))).
class SqueezeExcite final : public Layer {
 public:
  SqueezeExcite(int channels, int reduction, Rng& init);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  void collect(ParameterSet& set, const std::string& prefix) override;

 private:
  int channels_;
  GlobalAvgPool pool_;
  Linear fc1_;
  ReLU relu_;
  Linear fc2_;
  Tensor input_, gate_;
};

/// 1x1 -> 3x3(stride) -> 1x1 residual bottleneck with SE gating on the residual branch.
class SEBottleneck final : public Layer {
 public:
  static constexpr int expansion = 4;
  SEBottleneck(int in_channels, int planes, int stride, Rng& init, int se_reduction = 16);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  void collect(ParameterSet& set, const std::string& prefix) override;

 private:
  Sequential branch_;
  std::unique_ptr<Sequential> shortcut_;
  ReLU out_relu_;
};

/// conv(k) -> BN -> ReLU
LayerPtr conv_bn_relu(int in, int out, int kernel, int stride, Rng& init);

/// Standard normal via Box-Muller on raw engine bits.
double normal(Rng& rng);

}  // namespace reid::nn
