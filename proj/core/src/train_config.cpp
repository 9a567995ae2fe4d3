#include "reid/train_config.hpp"

#include "reid/checkpoint.hpp"
#include "reid/errors.hpp"

#include <cmath>

namespace reid::train {

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.epochs = 30;
  c.freeze_epochs = 3;
  c.lr_backbone = 0.01;
  c.lr_heads = 0.01;
  c.batch_size = 30;
  c.weights.lambda_reid = 0.2;
  c.model.backbone = nn::BackboneKind::toy;
  c.model.input_size = 64;
  c.model.embedding_dim = 128;
  c.model.dropout = 0.1;
  c.augment.target_size = 64;
  c.augment.resize_size = 72;
  return c;
}

double TrainConfig::temperature() const {
  return dve_temperature > 0.0 ? dve_temperature : 1.0 / std::sqrt(static_cast<double>(model.dve_dim));
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs", "must be at least 1");
  if (freeze_epochs < 0 || freeze_epochs >= epochs) throw ConfigError("freeze_epochs", "must lie in [0, epochs)");
  if (!(lr_backbone > 0.0)) throw ConfigError("lr_backbone", "must be positive");
  if (!(lr_heads > 0.0)) throw ConfigError("lr_heads", "must be positive");
  if (!(lr_drop_factor > 0.0)) throw ConfigError("lr_drop_factor", "must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum", "must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be non-negative");
  if (batch_size < 2) throw ConfigError("batch_size", "must be at least 2");
  if (instances_per_identity < 1) throw ConfigError("instances_per_identity", "must be positive");
  if (identity_sampler && batch_size % instances_per_identity != 0)
    throw ConfigError("batch_size", "must be a multiple of instances_per_identity");
  if (!losses.any()) throw ConfigError("losses", "at least one loss must be enabled");
  if (!(label_smoothing >= 0.0 && label_smoothing <= 1.0)) throw ConfigError("label_smoothing", "must lie in [0, 1]");
  if (dve_temperature < 0.0) throw ConfigError("dve_temperature", "must be non-negative");
  if (!(warp_strength >= 0.0)) throw ConfigError("warp_strength", "must be non-negative");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction", "must lie in [0, 1)");
  if (augment.target_size != model.input_size)
    throw ConfigError("augment.target_size", "must equal model.input_size");
  weights.validate();
  circle.validate();
  augment.validate();
  model.validate();
}

namespace {

std::string rgb(const std::array<std::uint8_t, 3>& c) {
  return std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]);
}

}  // namespace

KeyValueConfig TrainConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set("epochs", epochs);
  kv.set("freeze_epochs", freeze_epochs);
  kv.set("lr_backbone", lr_backbone);
  kv.set("lr_heads", lr_heads);
  kv.set("lr_drop_factor", lr_drop_factor);
  kv.set("momentum", momentum);
  kv.set("weight_decay", weight_decay);
  kv.set("batch_size", batch_size);
  kv.set("instances_per_identity", instances_per_identity);
  kv.set("identity_sampler", identity_sampler);
  kv.set("seed", static_cast<long long>(seed));
  kv.set("loss.id", losses.id);
  kv.set("loss.lr", losses.lr);
  kv.set("loss.reid", losses.reid);
  kv.set("loss.dve", losses.dve);
  kv.set("lambda_reid", weights.lambda_reid);
  kv.set("lambda_dve", weights.lambda_dve);
  kv.set("circle.gamma", circle.gamma);
  kv.set("circle.margin", circle.margin);
  kv.set("circle.detach_weights", circle.detach_weights);
  kv.set("label_smoothing", label_smoothing);
  kv.set("dve_temperature", dve_temperature);
  kv.set("warp_strength", warp_strength);
  kv.set("val_fraction", val_fraction);
  kv.set("apply_mask", apply_mask);
  kv.set("augment.resize_size", augment.resize_size);
  kv.set("augment.random_crop", augment.random_crop);
  kv.set("augment.flip_probability", augment.flip_probability);
  kv.set("augment.erase_probability", augment.erase_probability);
  kv.set("augment.erase_area_min", augment.erase_area_min);
  kv.set("augment.erase_area_max", augment.erase_area_max);
  kv.set("augment.erase_aspect_min", augment.erase_aspect_min);
  kv.set("augment.erase_fill", rgb(augment.erase_fill));
  const KeyValueConfig model_kv = nn::model_config_to_kv(model);
  for (const auto& [k, v] : model_kv.entries())
    if (k != "num_identities") kv.set("model." + k, v);
  return kv;
}

std::vector<std::string> TrainConfig::known_keys() {
  std::vector<std::string> keys;
  const KeyValueConfig kv = TrainConfig{}.to_kv();
  for (const auto& [k, v] : kv.entries()) keys.push_back(k);
  return keys;
}

TrainConfig TrainConfig::from_kv(const KeyValueConfig& kv, const TrainConfig& base) {
  const auto unknown = kv.unknown_keys(known_keys());
  if (!unknown.empty()) throw ConfigError(unknown.front(), "unknown configuration key");
  TrainConfig c = base;
  auto geti = [&](const char* k, int v) { return static_cast<int>(kv.get_int(k, v)); };
  c.epochs = geti("epochs", c.epochs);
  c.freeze_epochs = geti("freeze_epochs", c.freeze_epochs);
  c.lr_backbone = kv.get_double("lr_backbone", c.lr_backbone);
  c.lr_heads = kv.get_double("lr_heads", c.lr_heads);
  c.lr_drop_factor = kv.get_double("lr_drop_factor", c.lr_drop_factor);
  c.momentum = kv.get_double("momentum", c.momentum);
  c.weight_decay = kv.get_double("weight_decay", c.weight_decay);
  c.batch_size = geti("batch_size", c.batch_size);
  c.instances_per_identity = geti("instances_per_identity", c.instances_per_identity);
  c.identity_sampler = kv.get_bool("identity_sampler", c.identity_sampler);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.losses.id = kv.get_bool("loss.id", c.losses.id);
  c.losses.lr = kv.get_bool("loss.lr", c.losses.lr);
  c.losses.reid = kv.get_bool("loss.reid", c.losses.reid);
  c.losses.dve = kv.get_bool("loss.dve", c.losses.dve);
  c.weights.lambda_reid = kv.get_double("lambda_reid", c.weights.lambda_reid);
  c.weights.lambda_dve = kv.get_double("lambda_dve", c.weights.lambda_dve);
  c.circle.gamma = kv.get_double("circle.gamma", c.circle.gamma);
  c.circle.margin = kv.get_double("circle.margin", c.circle.margin);
  c.circle.detach_weights = kv.get_bool("circle.detach_weights", c.circle.detach_weights);
  c.label_smoothing = kv.get_double("label_smoothing", c.label_smoothing);
  c.dve_temperature = kv.get_double("dve_temperature", c.dve_temperature);
  c.warp_strength = kv.get_double("warp_strength", c.warp_strength);
  c.val_fraction = kv.get_double("val_fraction", c.val_fraction);
  c.apply_mask = kv.get_bool("apply_mask", c.apply_mask);
  c.augment.resize_size = geti("augment.resize_size", c.augment.resize_size);
  c.augment.random_crop = kv.get_bool("augment.random_crop", c.augment.random_crop);
  c.augment.flip_probability = kv.get_double("augment.flip_probability", c.augment.flip_probability);
  c.augment.erase_probability = kv.get_double("augment.erase_probability", c.augment.erase_probability);
  c.augment.erase_area_min = kv.get_double("augment.erase_area_min", c.augment.erase_area_min);
  c.augment.erase_area_max = kv.get_double("augment.erase_area_max", c.augment.erase_area_max);
  c.augment.erase_aspect_min = kv.get_double("augment.erase_aspect_min", c.augment.erase_aspect_min);
  if (kv.has("augment.erase_fill")) {
    const auto v = kv.get_doubles("augment.erase_fill", {});
    if (v.size() != 3) throw ConfigError("augment.erase_fill", "expected R,G,B");
    for (std::size_t i = 0; i < 3; ++i) {
      if (v[i] < 0 || v[i] > 255) throw ConfigError("augment.erase_fill", "channels must lie in [0, 255]");
      c.augment.erase_fill[i] = static_cast<std::uint8_t>(v[i]);
    }
  }
  KeyValueConfig model_kv = nn::model_config_to_kv(c.model);
  for (const auto& [k, v] : kv.entries())
    if (k.rfind("model.", 0) == 0) model_kv.set(k.substr(6), v);
  const int ids = c.model.num_identities;
  c.model = nn::model_config_from_kv(model_kv);
  c.model.num_identities = ids;
  c.augment.target_size = c.model.input_size;
  return c;
}

std::pair<double, double> lr_at(int epoch, const TrainConfig& config) {
  if (epoch < 0 || epoch >= config.epochs)
    throw InputError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(config.epochs) + ")");
  const double f = epoch >= config.drop_epoch() ? config.lr_drop_factor : 1.0;
  return {config.lr_backbone * f, config.lr_heads * f};
}

}  // namespace reid::train
