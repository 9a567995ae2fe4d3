#include "reid/ablation.hpp"

#include "reid/errors.hpp"
#include "reid/features.hpp"

#include <iomanip>
#include <sstream>

namespace reid::train {

TrainConfig AblationRow::apply(const TrainConfig& base) const {
  if (!losses.any()) throw ConfigError("ablation." + name, "row enables no loss");
  TrainConfig c = base;
  c.losses = losses;
  c.identity_sampler = sampler;
  if (lambda_reid) c.weights.lambda_reid = *lambda_reid;
  if (lambda_dve) c.weights.lambda_dve = *lambda_dve;
  return c;
}

namespace {

AblationRow row(bool dve, bool id, bool reid, bool lr, bool bs) {
  AblationRow r;
  r.losses = {id, lr, reid, dve};
  r.sampler = bs;
  std::string name;
  auto add = [&](bool on, const char* tag) {
    if (!on) return;
    if (!name.empty()) name += "+";
    name += tag;
  };
  add(id, "ID");
  add(reid, "ReID");
  add(lr, "LR");
  add(dve, "DVE");
  add(bs, "BS");
  r.name = name;
  return r;
}

}  // namespace

std::vector<AblationRow> component_grid() {
  return {row(false, true, false, false, false), row(false, false, true, false, false),
          row(false, true, true, false, false),  row(false, true, false, true, false),
          row(false, false, true, true, false),  row(false, true, true, true, false),
          row(true, true, true, true, false),    row(false, true, true, true, true),
          row(true, true, true, true, true)};
}

std::vector<AblationRow> lambda_dve_sweep() {
  std::vector<AblationRow> rows;
  for (int i = 0; i <= 10; ++i) {
    AblationRow r = row(true, true, true, true, true);
    r.lambda_dve = 0.2 * i;
    std::ostringstream os;
    os << "lambda_dve=" << std::setprecision(2) << *r.lambda_dve;
    r.name = os.str();
    rows.push_back(r);
  }
  return rows;
}

std::vector<AblationRow> lambda_reid_sweep() {
  std::vector<AblationRow> rows;
  for (double v : {1.0, 2.0, 5.0}) {
    AblationRow r = row(true, true, true, true, true);
    r.lambda_reid = v;
    r.name = "lambda_reid=" + std::to_string(static_cast<int>(v));
    rows.push_back(r);
  }
  return rows;
}

std::vector<AblationResult> ablation_run(const TrainConfig& base, const std::vector<AblationRow>& rows,
                                         const data::DatasetManifest& train_manifest,
                                         const data::DatasetManifest& test, const std::filesystem::path& out_dir,
                                         eval::EvalProtocol protocol) {
  std::vector<TrainConfig> configs;
  for (const auto& r : rows) configs.push_back(r.apply(base));  // reject bad rows before any training
  std::vector<AblationResult> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto dir = out_dir / (std::to_string(i) + "_" + rows[i].name);
    auto res = train(configs[i], train_manifest, dir);
    eval::ExtractOptions xo;
    xo.apply_mask = configs[i].apply_mask;
    const auto store = eval::extract_features(*res.model, test, xo);
    eval::EvalOptions eo;
    eo.protocol = protocol;
    out.push_back({rows[i], eval::evaluate(store, eo)});
  }
  return out;
}

std::string ablation_table(const std::vector<AblationResult>& results) {
  std::ostringstream os;
  os << "L_DVE\tL_ID\tL_ReID\tL_LR\tB.S.";
  if (!results.empty())
    for (const auto& [k, v] : results.front().report.columns) os << '\t' << k;
  os << "\tname\n" << std::fixed << std::setprecision(4);
  auto mark = [](bool b) { return b ? "x" : "-"; };
  for (const auto& r : results) {
    const auto& l = r.row.losses;
    os << mark(l.dve) << '\t' << mark(l.id) << '\t' << mark(l.reid) << '\t' << mark(l.lr) << '\t' << mark(r.row.sampler);
    for (const auto& [k, v] : r.report.columns) os << '\t' << v;
    os << '\t' << r.row.name << '\n';
  }
  return os.str();
}

}  // namespace reid::train
