#pragma once

#include "reid/backbone.hpp"
#include "reid/image.hpp"
#include "reid/layers.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <span>

namespace reid::nn {

struct ModelConfig {
  BackboneKind backbone = BackboneKind::se_resnet50;
  int input_size = 224;       ///< square input side; must be divisible by 8
  int embedding_dim = 512;    ///< d
  int dve_dim = 64;           ///< descriptor channels
  int dve_kernel = 3;         ///< descriptor projection kernel
  int num_identities = 2;     ///< identity classifier width
  double dropout = 0.5;
  int toy_width = 16;
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> std{0.229f, 0.224f, 0.225f};
  std::uint64_t init_seed = 0;

  void validate() const;
};

enum class DescriptorLayer { dve, stage3 };

struct ForwardOutput {
  Tensor embedding;     ///< f(x), N x d (post-dropout in train mode)
  Tensor embedding_bn;  ///< post-normalization vector, N x d; used for ranking
  Tensor id_logits;     ///< N x C
  Tensor lr_logit;      ///< N x 1, pre-sigmoid
  Tensor descriptors;   ///< unit-norm, (N + N') x dve_dim x H/4 x W/4; empty when not requested
  Shape stage3_shape;
  Shape stage5_shape;
};

/// Gradients w.r.t. forward outputs; empty tensors contribute nothing.
struct ForwardGrads {
  Tensor embedding, id_logits, lr_logit, descriptors;
};

/// Backbone -> GAP -> Linear -> BN -> Dropout -> {identity, orientation} classifiers, plus a dense
/// descriptor head on the stride-4 activation. Mirrors the forward pipeline described in the README.
class ReIdModel {
 public:
  explicit ReIdModel(ModelConfig config);

  /// One pass over `images` (N x 3 x S x S, normalized). When `extra` is given (N' images of the
  /// same size) it only travels through stages 1-3 and the descriptor head, and its descriptors are
  /// appended after the N primary ones.
  ForwardOutput forward(const Tensor& images, Mode mode, const Tensor* extra = nullptr, bool with_descriptors = true);

  /// Accumulates gradients for the most recent forward(). With backbone_grads = false the trunk is
  /// not back-propagated (frozen-backbone epochs).
  void backward(const ForwardGrads& grads, bool backbone_grads = true);

  /// concat(f(x), f(flip x)) on the post-normalization vector, eval mode. N x 2d.
  Tensor embed_eval(const Tensor& images);

  /// Eval-mode dense features at stride 4: the normalized descriptor head or the raw stage-3 activation.
  Tensor dense_features(const Tensor& images, DescriptorLayer layer);

  /// HWC uint8 images -> normalized NCHW tensor. Every image must already be input_size square.
  Tensor preprocess(std::span<const Image> images) const;

  ParameterSet& parameter_set() noexcept { return params_; }
  static bool is_backbone(const Parameter& p);
  void zero_grad();
  void reseed_dropout(std::uint64_t seed) { dropout_->reseed(seed); }

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t num_parameters(bool backbone_only = false) const;

 private:
  void check_input(const Tensor& images) const;

  ModelConfig config_;
  std::unique_ptr<Backbone> backbone_;
  Sequential dve_head_;
  GlobalAvgPool gap_;
  std::unique_ptr<Linear> embed_;
  std::unique_ptr<BatchNorm> embed_bn_;
  Dropout* dropout_ = nullptr;
  Sequential neck_;
  std::unique_ptr<Linear> id_classifier_;
  std::unique_ptr<Linear> lr_classifier_;
  ParameterSet params_;

  int last_primary_ = 0;
  int last_extra_ = 0;
  bool last_descriptors_ = false;
};

}  // namespace reid::nn
