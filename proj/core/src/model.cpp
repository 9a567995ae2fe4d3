#include "reid/model.hpp"

#include "reid/errors.hpp"

namespace reid::nn {

void ModelConfig::validate() const {
  if (input_size < 8 || input_size % 8 != 0) throw ConfigError("input_size", "must be a positive multiple of 8");
  if (embedding_dim < 1) throw ConfigError("embedding_dim", "must be positive");
  if (dve_dim < 1) throw ConfigError("dve_dim", "must be positive");
  if (dve_kernel < 1 || dve_kernel % 2 == 0) throw ConfigError("dve_kernel", "must be odd and positive");
  if (num_identities < 2) throw ConfigError("num_identities", "need at least 2 identities");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout", "must lie in [0, 1)");
  if (toy_width < 1) throw ConfigError("toy_width", "must be positive");
  for (float s : std)
    if (!(s > 0.0f)) throw ConfigError("std", "normalization std must be positive");
}

ReIdModel::ReIdModel(ModelConfig config) : config_(config) {
  config_.validate();
  Rng init(config_.init_seed);
  backbone_ = make_backbone(config_.backbone, init, config_.toy_width);
  dve_head_.emplace<Conv2d>("conv", backbone_->front_channels, config_.dve_dim, config_.dve_kernel, 1,
                            config_.dve_kernel / 2, true, init);
  dve_head_.emplace<ChannelL2Normalize>("l2");
  embed_ = std::make_unique<Linear>(backbone_->back_channels, config_.embedding_dim, true, init);
  embed_bn_ = std::make_unique<BatchNorm>(config_.embedding_dim);
  dropout_ = &neck_.emplace<Dropout>("dropout", config_.dropout);
  id_classifier_ = std::make_unique<Linear>(config_.embedding_dim, config_.num_identities, true, init, 0.001);
  lr_classifier_ = std::make_unique<Linear>(config_.embedding_dim, 1, true, init, 0.001);

  backbone_->front.collect(params_, "backbone.front.");
  backbone_->back.collect(params_, "backbone.back.");
  dve_head_.collect(params_, "dve_head.");
  embed_->collect(params_, "embed.");
  embed_bn_->collect(params_, "embed_bn.");
  id_classifier_->collect(params_, "id_classifier.");
  lr_classifier_->collect(params_, "lr_classifier.");
}

bool ReIdModel::is_backbone(const Parameter& p) { return p.name.rfind("backbone.", 0) == 0; }

void ReIdModel::zero_grad() {
  for (auto* p : params_.params) p->grad.zero();
}

std::size_t ReIdModel::num_parameters(bool backbone_only) const {
  std::size_t n = 0;
  for (const auto* p : params_.params)
    if (!backbone_only || is_backbone(*p)) n += p->value.numel();
  return n;
}

void ReIdModel::check_input(const Tensor& images) const {
  const auto& s = images.shape;
  if (s.c != 3 || s.h != config_.input_size || s.w != config_.input_size)
    throw InputError("model expects N x 3 x " + std::to_string(config_.input_size) + " x " +
                     std::to_string(config_.input_size) + " input, got " + s.str());
  if (s.n < 1) throw InputError("model input batch is empty");
}

ForwardOutput ReIdModel::forward(const Tensor& images, Mode mode, const Tensor* extra, bool with_descriptors) {
  check_input(images);
  if (extra) check_input(*extra);
  last_primary_ = images.shape.n;
  last_extra_ = extra ? extra->shape.n : 0;
  last_descriptors_ = with_descriptors || extra;

  ForwardOutput out;
  Tensor f3 = backbone_->front.forward(extra ? concat_batch(images, *extra) : images, mode);
  out.stage3_shape = f3.shape;
  if (last_descriptors_) out.descriptors = dve_head_.forward(f3, mode);
  Tensor f3_primary = extra ? slice_batch(f3, 0, last_primary_) : std::move(f3);
  Tensor f5 = backbone_->back.forward(f3_primary, mode);
  out.stage5_shape = f5.shape;
  out.embedding_bn = embed_bn_->forward(embed_->forward(gap_.forward(f5, mode), mode), mode);
  out.embedding = neck_.forward(out.embedding_bn, mode);
  out.id_logits = id_classifier_->forward(out.embedding, mode);
  out.lr_logit = lr_classifier_->forward(out.embedding, mode);
  return out;
}

void ReIdModel::backward(const ForwardGrads& grads, bool backbone_grads) {
  const Shape emb{last_primary_, config_.embedding_dim, 1, 1};
  Tensor d_emb(emb);
  if (!grads.embedding.values.empty()) d_emb += grads.embedding;
  if (!grads.id_logits.values.empty()) d_emb += id_classifier_->backward(grads.id_logits);
  if (!grads.lr_logit.values.empty()) d_emb += lr_classifier_->backward(grads.lr_logit);

  Tensor d_f5 = gap_.backward(embed_->backward(embed_bn_->backward(neck_.backward(d_emb))));
  const bool with_desc_grad = last_descriptors_ && !grads.descriptors.values.empty();
  if (!backbone_grads) {
    if (with_desc_grad) dve_head_.backward(grads.descriptors);
    return;
  }
  Tensor d_f3 = backbone_->back.backward(d_f5);
  if (last_extra_ > 0) {
    Shape rest = d_f3.shape;
    rest.n = last_extra_;
    d_f3 = concat_batch(d_f3, Tensor(rest));
  }
  if (with_desc_grad) d_f3 += dve_head_.backward(grads.descriptors);
  backbone_->front.backward(d_f3);
}

Tensor ReIdModel::embed_eval(const Tensor& images) {
  const Tensor a = forward(images, Mode::eval, nullptr, false).embedding_bn;
  const Tensor b = forward(flip_width(images), Mode::eval, nullptr, false).embedding_bn;
  const int N = images.shape.n, d = config_.embedding_dim;
  Tensor out({N, 2 * d, 1, 1});
  for (int n = 0; n < N; ++n) {
    std::copy(a.sample(n), a.sample(n) + d, out.sample(n));
    std::copy(b.sample(n), b.sample(n) + d, out.sample(n) + d);
  }
  return out;
}

Tensor ReIdModel::dense_features(const Tensor& images, DescriptorLayer layer) {
  check_input(images);
  Tensor f3 = backbone_->front.forward(images, Mode::eval);
  if (layer == DescriptorLayer::stage3) return f3;
  return dve_head_.forward(f3, Mode::eval);
}

Tensor ReIdModel::preprocess(std::span<const Image> images) const {
  const int S = config_.input_size;
  Tensor t({static_cast<int>(images.size()), 3, S, S});
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& im = images[n];
    if (im.channels != 3 || im.height != S || im.width != S)
      throw InputError("preprocess: image " + std::to_string(n) + " is " + std::to_string(im.height) + "x" +
                       std::to_string(im.width) + "x" + std::to_string(im.channels) + ", expected " +
                       std::to_string(S) + "x" + std::to_string(S) + "x3");
    float* dst = t.sample(static_cast<int>(n));
    for (int c = 0; c < 3; ++c) {
      const float m = config_.mean[static_cast<std::size_t>(c)], s = config_.std[static_cast<std::size_t>(c)];
      float* plane = dst + static_cast<std::size_t>(c) * S * S;
      for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) plane[y * S + x] = (im.at(y, x, c) / 255.0f - m) / s;
    }
  }
  return t;
}

}  // namespace reid::nn
