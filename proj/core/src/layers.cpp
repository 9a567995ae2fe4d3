#include "reid/layers.hpp"

#include "reid/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <numbers>

namespace reid::nn {
namespace {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

Parameter make_param(Shape s, bool decay) {
  Parameter p;
  p.value = Tensor(s);
  p.grad = Tensor(s);
  p.decay = decay;
  return p;
}

void add_param(ParameterSet& set, const std::string& prefix, const char* leaf, Parameter& p) {
  p.name = prefix + leaf;
  set.params.push_back(&p);
}

}  // namespace

double normal(Rng& rng) {
  double u1 = uniform(rng);
  while (u1 <= 0.0) u1 = uniform(rng);
  const double u2 = uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias, Rng& init)
    : in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(padding), has_bias_(bias) {
  weight_ = make_param({out_channels, in_channels, kernel, kernel}, true);
  // He-normal, fan_out mode
  const double std = std::sqrt(2.0 / (static_cast<double>(out_channels) * kernel * kernel));
  for (auto& v : weight_.value.values) v = static_cast<float>(normal(init) * std);
  if (has_bias_) bias_ = make_param({out_channels, 1, 1, 1}, false);
}

void Conv2d::collect(ParameterSet& set, const std::string& prefix) {
  add_param(set, prefix, "weight", weight_);
  if (has_bias_) add_param(set, prefix, "bias", bias_);
}

void Conv2d::im2col(const float* x, int H, int W, int Ho, int Wo, float* col) const {
  for (int c = 0; c < in_; ++c) {
    const float* plane = x + static_cast<std::size_t>(c) * H * W;
    for (int ki = 0; ki < k_; ++ki) {
      for (int kj = 0; kj < k_; ++kj) {
        float* row = col + (static_cast<std::size_t>((c * k_ + ki) * k_ + kj)) * Ho * Wo;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * stride_ - pad_ + ki;
          float* dst = row + static_cast<std::size_t>(oy) * Wo;
          if (iy < 0 || iy >= H) {
            std::fill(dst, dst + Wo, 0.0f);
            continue;
          }
          const float* src = plane + static_cast<std::size_t>(iy) * W;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * stride_ - pad_ + kj;
            dst[ox] = (ix >= 0 && ix < W) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void Conv2d::col2im(const float* col, int H, int W, int Ho, int Wo, float* dx) const {
  for (int c = 0; c < in_; ++c) {
    float* plane = dx + static_cast<std::size_t>(c) * H * W;
    for (int ki = 0; ki < k_; ++ki) {
      for (int kj = 0; kj < k_; ++kj) {
        const float* row = col + (static_cast<std::size_t>((c * k_ + ki) * k_ + kj)) * Ho * Wo;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * stride_ - pad_ + ki;
          if (iy < 0 || iy >= H) continue;
          const float* src = row + static_cast<std::size_t>(oy) * Wo;
          float* dst = plane + static_cast<std::size_t>(iy) * W;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * stride_ - pad_ + kj;
            if (ix >= 0 && ix < W) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x, Mode) {
  if (x.shape.c != in_) throw InputError("Conv2d: expected " + std::to_string(in_) + " channels, got " + x.shape.str());
  const int H = x.shape.h, W = x.shape.w;
  const int Ho = (H + 2 * pad_ - k_) / stride_ + 1;
  const int Wo = (W + 2 * pad_ - k_) / stride_ + 1;
  Tensor y({x.shape.n, out_, Ho, Wo});
  const int ckk = in_ * k_ * k_;
  const int P = Ho * Wo;
  CMapRM w(weight_.value.data(), out_, ckk);
  FloatBuffer col(pointwise() ? 0 : static_cast<std::size_t>(ckk) * P);
  for (int n = 0; n < x.shape.n; ++n) {
    const float* src = x.sample(n);
    if (!pointwise()) {
      im2col(src, H, W, Ho, Wo, col.data());
      src = col.data();
    }
    MapRM out(y.sample(n), out_, P);
    out.noalias() = w * CMapRM(src, ckk, P);
    if (has_bias_)
      for (int o = 0; o < out_; ++o) out.row(o).array() += bias_.value.values[static_cast<std::size_t>(o)];
  }
  input_ = x;
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  const int H = input_.shape.h, W = input_.shape.w;
  const int Ho = dy.shape.h, Wo = dy.shape.w;
  const int ckk = in_ * k_ * k_;
  const int P = Ho * Wo;
  Tensor dx(input_.shape);
  CMapRM w(weight_.value.data(), out_, ckk);
  MapRM dw(weight_.grad.data(), out_, ckk);
  FloatBuffer col(pointwise() ? 0 : static_cast<std::size_t>(ckk) * P);
  FloatBuffer dcol(pointwise() ? 0 : static_cast<std::size_t>(ckk) * P);
  for (int n = 0; n < dy.shape.n; ++n) {
    CMapRM g(dy.sample(n), out_, P);
    const float* src = input_.sample(n);
    if (!pointwise()) {
      im2col(src, H, W, Ho, Wo, col.data());
      src = col.data();
    }
    dw.noalias() += g * CMapRM(src, ckk, P).transpose();
    if (has_bias_)
      for (int o = 0; o < out_; ++o) bias_.grad.values[static_cast<std::size_t>(o)] += g.row(o).sum();
    if (pointwise()) {
      MapRM(dx.sample(n), ckk, P).noalias() = w.transpose() * g;
    } else {
      MapRM(dcol.data(), ckk, P).noalias() = w.transpose() * g;
      col2im(dcol.data(), H, W, Ho, Wo, dx.sample(n));
    }
  }
  return dx;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(int channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_ = make_param({channels, 1, 1, 1}, false);
  beta_ = make_param({channels, 1, 1, 1}, false);
  std::fill(gamma_.value.values.begin(), gamma_.value.values.end(), 1.0f);
  running_mean_ = Tensor({channels, 1, 1, 1});
  running_var_ = Tensor({channels, 1, 1, 1}, 1.0f);
}

void BatchNorm::collect(ParameterSet& set, const std::string& prefix) {
  add_param(set, prefix, "gamma", gamma_);
  add_param(set, prefix, "beta", beta_);
  set.buffers.emplace_back(prefix + "running_mean", &running_mean_);
  set.buffers.emplace_back(prefix + "running_var", &running_var_);
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
  if (x.shape.c != channels_) throw InputError("BatchNorm: channel mismatch " + x.shape.str());
  const int N = x.shape.n, C = channels_;
  const std::size_t P = x.shape.plane();
  const double M = static_cast<double>(N) * static_cast<double>(P);
  Tensor y(x.shape);
  xhat_ = Tensor(x.shape);
  inv_std_.assign(static_cast<std::size_t>(C), 0.0);
  last_mode_ = mode;
  for (int c = 0; c < C; ++c) {
    double mean, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (int n = 0; n < N; ++n) {
        const float* p = x.sample(n) + static_cast<std::size_t>(c) * P;
        for (std::size_t i = 0; i < P; ++i) s += p[i];
      }
      mean = s / M;
      double ss = 0.0;
      for (int n = 0; n < N; ++n) {
        const float* p = x.sample(n) + static_cast<std::size_t>(c) * P;
        for (std::size_t i = 0; i < P; ++i) ss += (p[i] - mean) * (p[i] - mean);
      }
      var = ss / M;
      const double unbiased = M > 1 ? ss / (M - 1) : var;
      auto& rm = running_mean_.values[static_cast<std::size_t>(c)];
      auto& rv = running_var_.values[static_cast<std::size_t>(c)];
      rm = static_cast<float>((1.0 - momentum_) * rm + momentum_ * mean);
      rv = static_cast<float>((1.0 - momentum_) * rv + momentum_ * unbiased);
    } else {
      mean = running_mean_.values[static_cast<std::size_t>(c)];
      var = running_var_.values[static_cast<std::size_t>(c)];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[static_cast<std::size_t>(c)] = inv;
    const float g = gamma_.value.values[static_cast<std::size_t>(c)];
    const float b = beta_.value.values[static_cast<std::size_t>(c)];
    for (int n = 0; n < N; ++n) {
      const float* p = x.sample(n) + static_cast<std::size_t>(c) * P;
      float* xh = xhat_.sample(n) + static_cast<std::size_t>(c) * P;
      float* q = y.sample(n) + static_cast<std::size_t>(c) * P;
      for (std::size_t i = 0; i < P; ++i) {
        xh[i] = static_cast<float>((p[i] - mean) * inv);
        q[i] = g * xh[i] + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
  const int N = dy.shape.n, C = channels_;
  const std::size_t P = dy.shape.plane();
  const double M = static_cast<double>(N) * static_cast<double>(P);
  Tensor dx(dy.shape);
  for (int c = 0; c < C; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int n = 0; n < N; ++n) {
      const float* g = dy.sample(n) + static_cast<std::size_t>(c) * P;
      const float* xh = xhat_.sample(n) + static_cast<std::size_t>(c) * P;
      for (std::size_t i = 0; i < P; ++i) {
        sum_dy += g[i];
        sum_dy_xh += static_cast<double>(g[i]) * xh[i];
      }
    }
    gamma_.grad.values[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy_xh);
    beta_.grad.values[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy);
    const double gamma = gamma_.value.values[static_cast<std::size_t>(c)];
    const double inv = inv_std_[static_cast<std::size_t>(c)];
    for (int n = 0; n < N; ++n) {
      const float* g = dy.sample(n) + static_cast<std::size_t>(c) * P;
      const float* xh = xhat_.sample(n) + static_cast<std::size_t>(c) * P;
      float* d = dx.sample(n) + static_cast<std::size_t>(c) * P;
      if (last_mode_ == Mode::train) {
        const double k = gamma * inv / M;
        for (std::size_t i = 0; i < P; ++i) d[i] = static_cast<float>(k * (M * g[i] - sum_dy - xh[i] * sum_dy_xh));
      } else {
        for (std::size_t i = 0; i < P; ++i) d[i] = static_cast<float>(gamma * inv * g[i]);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- ReLU / pooling

Tensor ReLU::forward(const Tensor& x, Mode) {
  output_ = x;
  for (auto& v : output_.values) v = v > 0.0f ? v : 0.0f;
  return output_;
}

Tensor ReLU::backward(const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.values.size(); ++i)
    if (output_.values[i] <= 0.0f) dx.values[i] = 0.0f;
  return dx;
}

Tensor MaxPool2d::forward(const Tensor& x, Mode) {
  in_shape_ = x.shape;
  const int H = x.shape.h, W = x.shape.w;
  const int Ho = (H + 2 * pad_ - k_) / stride_ + 1;
  const int Wo = (W + 2 * pad_ - k_) / stride_ + 1;
  Tensor y({x.shape.n, x.shape.c, Ho, Wo});
  argmax_.assign(y.numel(), -1);
  std::size_t o = 0;
  for (int n = 0; n < x.shape.n; ++n)
    for (int c = 0; c < x.shape.c; ++c) {
      const float* plane = x.sample(n) + static_cast<std::size_t>(c) * H * W;
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox, ++o) {
          float best = -std::numeric_limits<float>::infinity();
          int arg = -1;
          for (int ki = 0; ki < k_; ++ki) {
            const int iy = oy * stride_ - pad_ + ki;
            if (iy < 0 || iy >= H) continue;
            for (int kj = 0; kj < k_; ++kj) {
              const int ix = ox * stride_ - pad_ + kj;
              if (ix < 0 || ix >= W) continue;
              const float v = plane[iy * W + ix];
              if (v > best) {
                best = v;
                arg = iy * W + ix;
              }
            }
          }
          y.values[o] = best;
          argmax_[o] = arg;
        }
    }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) {
  Tensor dx(in_shape_);
  const std::size_t plane_out = dy.shape.plane();
  const std::size_t plane_in = in_shape_.plane();
  for (std::size_t o = 0; o < dy.values.size(); ++o) {
    const std::size_t nc = o / plane_out;
    if (argmax_[o] >= 0) dx.values[nc * plane_in + static_cast<std::size_t>(argmax_[o])] += dy.values[o];
  }
  return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, Mode) {
  in_shape_ = x.shape;
  Tensor y({x.shape.n, x.shape.c, 1, 1});
  const std::size_t P = x.shape.plane();
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    const float* p = x.data() + i * P;
    double s = 0.0;
    for (std::size_t j = 0; j < P; ++j) s += p[j];
    y.values[i] = static_cast<float>(s / static_cast<double>(P));
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
  Tensor dx(in_shape_);
  const std::size_t P = in_shape_.plane();
  const float scale = 1.0f / static_cast<float>(P);
  for (std::size_t i = 0; i < dy.values.size(); ++i) std::fill_n(dx.data() + i * P, P, dy.values[i] * scale);
  return dx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features, bool bias, Rng& init, double init_std)
    : in_(in_features), out_(out_features), has_bias_(bias) {
  weight_ = make_param({out_features, in_features, 1, 1}, true);
  const double std = init_std > 0.0 ? init_std : std::sqrt(2.0 / static_cast<double>(out_features));
  for (auto& v : weight_.value.values) v = static_cast<float>(normal(init) * std);
  if (has_bias_) bias_ = make_param({out_features, 1, 1, 1}, false);
}

void Linear::collect(ParameterSet& set, const std::string& prefix) {
  add_param(set, prefix, "weight", weight_);
  if (has_bias_) add_param(set, prefix, "bias", bias_);
}

Tensor Linear::forward(const Tensor& x, Mode) {
  if (static_cast<int>(x.shape.sample()) != in_)
    throw InputError("Linear: expected " + std::to_string(in_) + " features, got " + x.shape.str());
  input_ = x;
  Tensor y({x.shape.n, out_, 1, 1});
  MapRM out(y.data(), x.shape.n, out_);
  out.noalias() = CMapRM(x.data(), x.shape.n, in_) * CMapRM(weight_.value.data(), out_, in_).transpose();
  if (has_bias_)
    for (int n = 0; n < x.shape.n; ++n)
      for (int o = 0; o < out_; ++o) out(n, o) += bias_.value.values[static_cast<std::size_t>(o)];
  return y;
}

Tensor Linear::backward(const Tensor& dy) {
  const int N = dy.shape.n;
  CMapRM g(dy.data(), N, out_);
  MapRM(weight_.grad.data(), out_, in_).noalias() += g.transpose() * CMapRM(input_.data(), N, in_);
  if (has_bias_)
    for (int o = 0; o < out_; ++o) bias_.grad.values[static_cast<std::size_t>(o)] += g.col(o).sum();
  Tensor dx(input_.shape);
  MapRM(dx.data(), N, in_).noalias() = g * CMapRM(weight_.value.data(), out_, in_);
  return dx;
}

// ---------------------------------------------------------------- Dropout / normalize

Tensor Dropout::forward(const Tensor& x, Mode mode) {
  if (mode == Mode::eval || p_ <= 0.0) {
    mask_.assign(x.numel(), 1.0f);
    return x;
  }
  const float scale = static_cast<float>(1.0 / (1.0 - p_));
  mask_.resize(x.numel());
  Tensor y = x;
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    mask_[i] = uniform(rng_) < p_ ? 0.0f : scale;
    y.values[i] *= mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.values.size(); ++i) dx.values[i] *= mask_[i];
  return dx;
}

Tensor ChannelL2Normalize::forward(const Tensor& x, Mode) {
  output_ = Tensor(x.shape);
  const int C = x.shape.c;
  const std::size_t P = x.shape.plane();
  norms_.assign(static_cast<std::size_t>(x.shape.n) * P, 0.0f);
  for (int n = 0; n < x.shape.n; ++n) {
    const float* s = x.sample(n);
    float* d = output_.sample(n);
    for (std::size_t i = 0; i < P; ++i) {
      double ss = 0.0;
      for (int c = 0; c < C; ++c) ss += static_cast<double>(s[c * P + i]) * s[c * P + i];
      const double norm = std::max(std::sqrt(ss), 1e-12);
      norms_[static_cast<std::size_t>(n) * P + i] = static_cast<float>(norm);
      for (int c = 0; c < C; ++c) d[c * P + i] = static_cast<float>(s[c * P + i] / norm);
    }
  }
  return output_;
}

Tensor ChannelL2Normalize::backward(const Tensor& dy) {
  Tensor dx(dy.shape);
  const int C = dy.shape.c;
  const std::size_t P = dy.shape.plane();
  for (int n = 0; n < dy.shape.n; ++n) {
    const float* g = dy.sample(n);
    const float* y = output_.sample(n);
    float* d = dx.sample(n);
    for (std::size_t i = 0; i < P; ++i) {
      double dot = 0.0;
      for (int c = 0; c < C; ++c) dot += static_cast<double>(g[c * P + i]) * y[c * P + i];
      const double inv = 1.0 / norms_[static_cast<std::size_t>(n) * P + i];
      for (int c = 0; c < C; ++c) d[c * P + i] = static_cast<float>((g[c * P + i] - y[c * P + i] * dot) * inv);
    }
  }
  return dx;
}

// ---------------------------------------------------------------- containers

Sequential& Sequential::add(std::string name, LayerPtr layer) {
  layers_.emplace_back(std::move(name), std::move(layer));
  return *this;
}

Tensor Sequential::forward(const Tensor& x, Mode mode) {
  Tensor h = x;
  for (auto& [name, layer] : layers_) h = layer->forward(h, mode);
  return h;
}

Tensor Sequential::backward(const Tensor& dy) {
  Tensor g = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = it->second->backward(g);
  return g;
}

void Sequential::collect(ParameterSet& set, const std::string& prefix) {
  for (auto& [name, layer] : layers_) layer->collect(set, prefix + name + ".");
}

SqueezeExcite::SqueezeExcite(int channels, int reduction, Rng& init)
    : channels_(channels),
      fc1_(channels, std::max(1, channels / reduction), true, init),
      fc2_(std::max(1, channels / reduction), channels, true, init) {}

void SqueezeExcite::collect(ParameterSet& set, const std::string& prefix) {
  fc1_.collect(set, prefix + "fc1.");
  fc2_.collect(set, prefix + "fc2.");
}

Tensor SqueezeExcite::forward(const Tensor& x, Mode mode) {
  input_ = x;
  Tensor s = fc2_.forward(relu_.forward(fc1_.forward(pool_.forward(x, mode), mode), mode), mode);
  for (auto& v : s.values) v = 1.0f / (1.0f + std::exp(-v));
  gate_ = s;
  Tensor y = x;
  const std::size_t P = x.shape.plane();
  for (std::size_t nc = 0; nc < gate_.values.size(); ++nc) {
    float* p = y.data() + nc * P;
    for (std::size_t i = 0; i < P; ++i) p[i] *= gate_.values[nc];
  }
  return y;
}

Tensor SqueezeExcite::backward(const Tensor& dy) {
  const std::size_t P = dy.shape.plane();
  Tensor dx = dy;
  Tensor dgate(gate_.shape);
  for (std::size_t nc = 0; nc < gate_.values.size(); ++nc) {
    const float* g = dy.data() + nc * P;
    const float* xin = input_.data() + nc * P;
    float* d = dx.data() + nc * P;
    double acc = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      acc += static_cast<double>(g[i]) * xin[i];
      d[i] = g[i] * gate_.values[nc];
    }
    const float s = gate_.values[nc];
    dgate.values[nc] = static_cast<float>(acc) * s * (1.0f - s);
  }
  dx += pool_.backward(fc1_.backward(relu_.backward(fc2_.backward(dgate))));
  return dx;
}

SEBottleneck::SEBottleneck(int in_channels, int planes, int stride, Rng& init, int se_reduction) {
  const int out = planes * expansion;
  branch_.emplace<Conv2d>("conv1", in_channels, planes, 1, 1, 0, false, init);
  branch_.emplace<BatchNorm>("bn1", planes);
  branch_.emplace<ReLU>("relu1");
  branch_.emplace<Conv2d>("conv2", planes, planes, 3, stride, 1, false, init);
  branch_.emplace<BatchNorm>("bn2", planes);
  branch_.emplace<ReLU>("relu2");
  branch_.emplace<Conv2d>("conv3", planes, out, 1, 1, 0, false, init);
  branch_.emplace<BatchNorm>("bn3", out);
  branch_.emplace<SqueezeExcite>("se", out, se_reduction, init);
  if (stride != 1 || in_channels != out) {
    shortcut_ = std::make_unique<Sequential>();
    shortcut_->emplace<Conv2d>("conv", in_channels, out, 1, stride, 0, false, init);
    shortcut_->emplace<BatchNorm>("bn", out);
  }
}

void SEBottleneck::collect(ParameterSet& set, const std::string& prefix) {
  branch_.collect(set, prefix);
  if (shortcut_) shortcut_->collect(set, prefix + "downsample.");
}

Tensor SEBottleneck::forward(const Tensor& x, Mode mode) {
  Tensor y = branch_.forward(x, mode);
  y += shortcut_ ? shortcut_->forward(x, mode) : x;
  return out_relu_.forward(y, mode);
}

Tensor SEBottleneck::backward(const Tensor& dy) {
  Tensor g = out_relu_.backward(dy);
  Tensor dx = branch_.backward(g);
  dx += shortcut_ ? shortcut_->backward(g) : g;
  return dx;
}

LayerPtr conv_bn_relu(int in, int out, int kernel, int stride, Rng& init) {
  auto seq = std::make_unique<Sequential>();
  seq->emplace<Conv2d>("conv", in, out, kernel, stride, kernel / 2, false, init);
  seq->emplace<BatchNorm>("bn", out);
  seq->emplace<ReLU>("relu");
  return seq;
}

}  // namespace reid::nn
