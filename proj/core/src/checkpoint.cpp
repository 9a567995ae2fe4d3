#include "reid/checkpoint.hpp"

#include "reid/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace reid::nn {
namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'R', 'E', 'I', 'D', 'C', 'K', 'P', 'T'};

json shape_json(const Shape& s) { return json::array({s.n, s.c, s.h, s.w}); }

Shape shape_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()}; }

}  // namespace

KeyValueConfig model_config_to_kv(const ModelConfig& c) {
  KeyValueConfig kv;
  kv.set("backbone", std::string(to_string(c.backbone)));
  kv.set("input_size", c.input_size);
  kv.set("embedding_dim", c.embedding_dim);
  kv.set("dve_dim", c.dve_dim);
  kv.set("dve_kernel", c.dve_kernel);
  kv.set("num_identities", c.num_identities);
  kv.set("dropout", c.dropout);
  kv.set("toy_width", c.toy_width);
  kv.set("norm_mean", format_double(c.mean[0]) + "," + format_double(c.mean[1]) + "," + format_double(c.mean[2]));
  kv.set("norm_std", format_double(c.std[0]) + "," + format_double(c.std[1]) + "," + format_double(c.std[2]));
  kv.set("init_seed", static_cast<long long>(c.init_seed));
  return kv;
}

ModelConfig model_config_from_kv(const KeyValueConfig& kv) {
  ModelConfig c;
  c.backbone = parse_backbone(kv.get_string("backbone", std::string(to_string(c.backbone))));
  c.input_size = static_cast<int>(kv.get_int("input_size", c.input_size));
  c.embedding_dim = static_cast<int>(kv.get_int("embedding_dim", c.embedding_dim));
  c.dve_dim = static_cast<int>(kv.get_int("dve_dim", c.dve_dim));
  c.dve_kernel = static_cast<int>(kv.get_int("dve_kernel", c.dve_kernel));
  c.num_identities = static_cast<int>(kv.get_int("num_identities", c.num_identities));
  c.dropout = kv.get_double("dropout", c.dropout);
  c.toy_width = static_cast<int>(kv.get_int("toy_width", c.toy_width));
  auto triple = [&](const char* key, std::array<float, 3>& dst) {
    auto v = kv.get_doubles(key, {dst[0], dst[1], dst[2]});
    if (v.size() != 3) throw ConfigError(key, "expected three comma-separated values");
    for (int i = 0; i < 3; ++i) dst[static_cast<std::size_t>(i)] = static_cast<float>(v[static_cast<std::size_t>(i)]);
  };
  triple("norm_mean", c.mean);
  triple("norm_std", c.std);
  c.init_seed = static_cast<std::uint64_t>(kv.get_int("init_seed", 0));
  c.validate();
  return c;
}

Checkpoint capture(ReIdModel& model, const Sgd* optimizer) {
  Checkpoint ck;
  ck.model = model.config();
  auto& set = model.parameter_set();
  for (auto* p : set.params) ck.parameters.emplace(p->name, p->value);
  for (auto& [name, t] : set.buffers) ck.parameters.emplace(name, *t);
  if (optimizer) ck.optimizer = optimizer->state();
  return ck;
}

void restore(const Checkpoint& ckpt, ReIdModel& model, Sgd* optimizer) {
  auto& set = model.parameter_set();
  auto copy = [&](const std::string& name, Tensor& dst) {
    auto it = ckpt.parameters.find(name);
    if (it == ckpt.parameters.end()) throw InputError("checkpoint lacks tensor '" + name + "'");
    if (!(it->second.shape == dst.shape))
      throw InputError("checkpoint tensor '" + name + "' has shape " + it->second.shape.str() + ", model expects " +
                       dst.shape.str());
    dst = it->second;
  };
  for (auto* p : set.params) copy(p->name, p->value);
  for (auto& [name, t] : set.buffers) copy(name, *t);
  if (optimizer && !ckpt.optimizer.empty()) optimizer->load_state(ckpt.optimizer);
}

std::unique_ptr<ReIdModel> model_from_checkpoint(const Checkpoint& ckpt) {
  auto model = std::make_unique<ReIdModel>(ckpt.model);
  restore(ckpt, *model);
  return model;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  json header;
  header["version"] = ckpt.version;
  header["model"] = model_config_to_kv(ckpt.model).entries();
  header["train_config"] = ckpt.train_config.entries();
  header["epoch"] = ckpt.epoch;
  header["entity_labels"] = ckpt.entity_labels;
  header["metric_history"] = ckpt.metric_history;
  json tensors = json::array();
  std::uint64_t offset = 0;
  auto describe = [&](const std::string& group, const std::map<std::string, Tensor>& m) {
    for (const auto& [name, t] : m) {
      tensors.push_back({{"group", group}, {"name", name}, {"shape", shape_json(t.shape)}, {"offset", offset}});
      offset += t.numel();
    }
  };
  describe("parameters", ckpt.parameters);
  describe("optimizer", ckpt.optimizer);
  header["tensors"] = tensors;
  const std::string text = header.dump();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  try {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t version = static_cast<std::uint32_t>(ckpt.version);
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto* m : {&ckpt.parameters, &ckpt.optimizer})
      for (const auto& [name, t] : *m)
        out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(float)));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
    out.close();
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ParseError(path.string() + " is not a checkpoint");
  if (version > static_cast<std::uint32_t>(kCheckpointVersion))
    throw ParseError("checkpoint version " + std::to_string(version) + " is newer than supported");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("truncated checkpoint header in " + path.string());
  const json header = json::parse(text);

  Checkpoint ck;
  ck.version = static_cast<int>(version);
  KeyValueConfig model_kv;
  for (const auto& [k, v] : header.at("model").items()) model_kv.set(k, v.get<std::string>());
  ck.model = model_config_from_kv(model_kv);
  for (const auto& [k, v] : header.at("train_config").items()) ck.train_config.set(k, v.get<std::string>());
  ck.epoch = header.at("epoch").get<int>();
  ck.entity_labels = header.at("entity_labels").get<std::vector<std::string>>();
  ck.metric_history = header.at("metric_history").get<std::vector<std::map<std::string, double>>>();
  for (const auto& t : header.at("tensors")) {
    Tensor tensor(shape_from(t.at("shape")));
    in.read(reinterpret_cast<char*>(tensor.data()), static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
    if (!in) throw ParseError("truncated tensor payload in " + path.string());
    auto& dst = t.at("group").get<std::string>() == "optimizer" ? ck.optimizer : ck.parameters;
    dst.emplace(t.at("name").get<std::string>(), std::move(tensor));
  }
  return ck;
}

}  // namespace reid::nn
