#pragma once

#include "reid/layers.hpp"

#include <map>
#include <string>
#include <vector>

namespace reid::nn {

struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

/// SGD with heavy-ball momentum (v = mu v + g + wd w; w -= lr v). Two rate groups: backbone
/// parameters and everything else. Weight decay only applies to parameters flagged decay.
class Sgd {
 public:
  Sgd(ParameterSet& params, SgdConfig config);

  void step(double lr_backbone, double lr_heads, bool backbone_frozen);

  std::map<std::string, Tensor> state() const;
  void load_state(const std::map<std::string, Tensor>& state);

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> velocity_;
  std::vector<bool> backbone_;
  SgdConfig config_;
};

}  // namespace reid::nn
