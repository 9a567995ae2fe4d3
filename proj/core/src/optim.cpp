#include "reid/optim.hpp"

#include "reid/errors.hpp"
#include "reid/model.hpp"

namespace reid::nn {

Sgd::Sgd(ParameterSet& params, SgdConfig config) : params_(params.params), config_(config) {
  for (auto* p : params_) {
    velocity_.emplace_back(p->value.shape);
    backbone_.push_back(ReIdModel::is_backbone(*p));
  }
}

void Sgd::step(double lr_backbone, double lr_heads, bool backbone_frozen) {
  const auto mu = static_cast<float>(config_.momentum);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (backbone_[i] && backbone_frozen) continue;
    Parameter& p = *params_[i];
    const auto lr = static_cast<float>(backbone_[i] ? lr_backbone : lr_heads);
    const auto wd = static_cast<float>(p.decay ? config_.weight_decay : 0.0);
    auto& v = velocity_[i].values;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const float g = p.grad.values[k] + wd * p.value.values[k];
      v[k] = mu * v[k] + g;
      p.value.values[k] -= lr * v[k];
    }
  }
}

std::map<std::string, Tensor> Sgd::state() const {
  std::map<std::string, Tensor> out;
  for (std::size_t i = 0; i < params_.size(); ++i) out.emplace(params_[i]->name, velocity_[i]);
  return out;
}

void Sgd::load_state(const std::map<std::string, Tensor>& state) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto it = state.find(params_[i]->name);
    if (it == state.end()) throw InputError("optimizer state lacks '" + params_[i]->name + "'");
    if (!(it->second.shape == velocity_[i].shape)) throw InputError("optimizer state shape mismatch for " + it->first);
    velocity_[i] = it->second;
  }
}

}  // namespace reid::nn
