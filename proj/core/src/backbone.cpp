#include "reid/backbone.hpp"

#include "reid/errors.hpp"

#include <string>

namespace reid::nn {

std::string_view to_string(BackboneKind kind) {
  return kind == BackboneKind::toy ? "toy" : "se_resnet50";
}

BackboneKind parse_backbone(std::string_view token) {
  if (token == "toy") return BackboneKind::toy;
  if (token == "se_resnet50" || token == "seresnet50" || token == "reference") return BackboneKind::se_resnet50;
  throw ConfigError("backbone", "unknown kind '" + std::string(token) + "' (expected toy or se_resnet50)");
}

namespace {

void add_layer(Sequential& stage, const std::string& name, int blocks, int& in_channels, int planes, int stride,
               Rng& init) {
  auto layer = std::make_unique<Sequential>();
  for (int b = 0; b < blocks; ++b) {
    layer->emplace<SEBottleneck>(std::to_string(b), in_channels, planes, b == 0 ? stride : 1, init);
    in_channels = planes * SEBottleneck::expansion;
  }
  stage.add(name, std::move(layer));
}

}  // namespace

std::unique_ptr<Backbone> make_se_resnet50(Rng& init) {
  auto bb = std::make_unique<Backbone>();
  bb->kind = BackboneKind::se_resnet50;
  auto stem = std::make_unique<Sequential>();
  stem->emplace<Conv2d>("conv", 3, 64, 7, 2, 3, false, init);
  stem->emplace<BatchNorm>("bn", 64);
  stem->emplace<ReLU>("relu");
  stem->emplace<MaxPool2d>("pool", 3, 2, 1);
  bb->front.add("layer0", std::move(stem));
  int channels = 64;
  add_layer(bb->front, "layer1", 3, channels, 64, 1, init);
  add_layer(bb->front, "layer2", 4, channels, 128, 1, init);
  bb->front_channels = channels;
  add_layer(bb->back, "layer3", 6, channels, 256, 2, init);
  add_layer(bb->back, "layer4", 3, channels, 512, 1, init);
  bb->back_channels = channels;
  return bb;
}

std::unique_ptr<Backbone> make_toy_backbone(Rng& init, int width) {
  auto bb = std::make_unique<Backbone>();
  bb->kind = BackboneKind::toy;
  const int w1 = width, w2 = 2 * width, w3 = 4 * width, w4 = 8 * width;

  auto s1 = std::make_unique<Sequential>();
  s1->add("0", conv_bn_relu(3, w1, 3, 1, init));
  bb->front.add("stage1", std::move(s1));

  auto s2 = std::make_unique<Sequential>();
  s2->add("0", conv_bn_relu(w1, w2, 3, 2, init));
  s2->add("1", conv_bn_relu(w2, w2, 3, 1, init));
  bb->front.add("stage2", std::move(s2));

  auto s3 = std::make_unique<Sequential>();
  s3->add("0", conv_bn_relu(w2, w3, 3, 2, init));
  s3->add("1", conv_bn_relu(w3, w3, 3, 1, init));
  s3->add("2", conv_bn_relu(w3, w3, 3, 1, init));
  bb->front.add("stage3", std::move(s3));
  bb->front_channels = w3;

  auto s4 = std::make_unique<Sequential>();
  s4->add("0", conv_bn_relu(w3, w4, 3, 2, init));
  s4->add("1", conv_bn_relu(w4, w4, 3, 1, init));
  bb->back.add("stage4", std::move(s4));
  bb->back_channels = w4;
  return bb;
}

std::unique_ptr<Backbone> make_backbone(BackboneKind kind, Rng& init, int toy_width) {
  return kind == BackboneKind::toy ? make_toy_backbone(init, toy_width) : make_se_resnet50(init);
}

}  // namespace reid::nn
