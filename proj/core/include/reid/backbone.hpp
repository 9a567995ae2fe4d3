#pragma once

#include "reid/layers.hpp"

#include <memory>
#include <string_view>

namespace reid::nn {

enum class BackboneKind { toy, se_resnet50 };

std::string_view to_string(BackboneKind kind);
BackboneKind parse_backbone(std::string_view token);

/// A convolutional trunk split at the descriptor tap:
///   front = stages 1-3, total stride 4 (feeds the dense descriptor head)
///   back  = stages 4-5, total stride 8 (feeds global pooling)
struct Backbone {
  BackboneKind kind = BackboneKind::toy;
  Sequential front;
  Sequential back;
  int front_channels = 0;
  int back_channels = 0;
};

/// SE-ResNet-50 with the stride layout conv1/2, pool/2, layer1/1, layer2/1, layer3/2, layer4/1,
/// giving 1/4 after layer2 and 1/8 after layer4.
std::unique_ptr<Backbone> make_se_resnet50(Rng& init);

/// Four plain conv stages (strides 1, 2, 2, 2) with base width `width` (default 16). Under 1M parameters.
std::unique_ptr<Backbone> make_toy_backbone(Rng& init, int width = 16);

std::unique_ptr<Backbone> make_backbone(BackboneKind kind, Rng& init, int toy_width = 16);

}  // namespace reid::nn
