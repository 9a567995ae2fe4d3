#include "reid/experiments.hpp"

#include "reid/errors.hpp"
#include "reid/features.hpp"
#include "reid/trainer.hpp"

#include <iomanip>
#include <sstream>

namespace reid::experiments {
namespace fs = std::filesystem;

namespace {

data::DatasetManifest load_checked(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("missing variant manifest " + path.string());
  auto m = data::load_manifest(path);
  for (const auto& r : m.records)
    if (!fs::exists(m.image_file(r))) throw InputError("variant image missing: " + m.image_file(r).string());
  return m;
}

}  // namespace

VariantManifests load_variants(const fs::path& original_dir, const fs::path& masked_dir) {
  for (const auto& d : {original_dir, masked_dir})
    if (!fs::is_directory(d)) throw InputError("missing variant directory " + d.string());
  return {load_checked(original_dir / "train.csv"), load_checked(masked_dir / "train.csv"),
          load_checked(original_dir / "test.csv"), load_checked(masked_dir / "test.csv")};
}

std::vector<BiasRow> bias_grid(const train::TrainConfig& config, const VariantManifests& v, const fs::path& out_dir) {
  std::vector<BiasRow> rows;
  auto eval_on = [&](nn::ReIdModel& model, const data::DatasetManifest& test, bool train_masked, bool test_masked) {
    BiasRow row;
    row.train_masked = train_masked;
    row.test_masked = test_masked;
    const auto store = eval::extract_features(model, test, {});
    eval::EvalOptions o;
    o.protocol = eval::EvalProtocol::plain;
    row.plain = eval::evaluate(store, o);
    if (store.has_cameras()) {
      o.protocol = eval::EvalProtocol::atrw;
      row.atrw = eval::evaluate(store, o);
    }
    return row;
  };
  {
    auto res = train::train(config, v.train_original, out_dir / "train_original");
    rows.push_back(eval_on(*res.model, v.test_original, false, false));
    rows.push_back(eval_on(*res.model, v.test_masked, false, true));
  }
  {
    auto res = train::train(config, v.train_masked, out_dir / "train_masked");
    rows.push_back(eval_on(*res.model, v.test_masked, true, true));
    rows.push_back(eval_on(*res.model, v.test_original, true, false));
  }
  return rows;
}

std::string bias_table(const std::vector<BiasRow>& rows) {
  std::ostringstream os;
  os << "Train\tTest\tmmAP\tR@1(s)\tR@1(c)\tmAP\tR@1\n" << std::fixed << std::setprecision(4);
  auto cell = [&](const eval::EvalReport& r, const char* k) {
    for (const auto& [name, v] : r.columns)
      if (name == k) {
        os << '\t' << v;
        return;
      }
    os << "\t-";
  };
  for (const auto& r : rows) {
    os << (r.train_masked ? "masked" : "original") << '\t' << (r.test_masked ? "masked" : "original");
    for (const char* k : {"mmAP", "R@1(s)", "R@1(c)"}) cell(r.atrw, k);
    for (const char* k : {"mAP", "R@1"}) cell(r.plain, k);
    os << '\n';
  }
  return os.str();
}

eval::EvalReport transfer_eval(nn::ReIdModel& model, const data::DatasetManifest& foreign, eval::EvalProtocol protocol,
                               bool apply_mask) {
  eval::ExtractOptions xo;
  xo.apply_mask = apply_mask;
  const auto store = eval::extract_features(model, foreign, xo);
  eval::EvalOptions eo;
  eo.protocol = protocol;
  return eval::evaluate(store, eo);
}

std::string TransferTable::to_string() const {
  std::ostringstream os;
  os << "Training data";
  for (std::size_t j = 0; j < names.size(); ++j)
    for (const auto& [k, v] : cells.front()[j].columns) os << '\t' << names[j] << ':' << k;
  os << '\n' << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < names.size(); ++i) {
    os << names[i];
    for (const auto& rep : cells[i])
      for (const auto& [k, v] : rep.columns) os << '\t' << v;
    os << '\n';
  }
  return os.str();
}

TransferTable transfer_table(const train::TrainConfig& config, const std::vector<TransferDomain>& domains,
                             const fs::path& out_dir) {
  TransferTable t;
  for (const auto& d : domains) t.names.push_back(d.name);
  for (const auto& d : domains) {
    auto res = train::train(config, d.train, out_dir / d.name);
    std::vector<eval::EvalReport> row;
    for (const auto& target : domains)
      row.push_back(transfer_eval(*res.model, target.test, target.protocol, config.apply_mask));
    t.cells.push_back(std::move(row));
  }
  return t;
}

}  // namespace reid::experiments
