#include "reid_cli/cli.hpp"

#include "reid/ablation.hpp"
#include "reid/checkpoint.hpp"
#include "reid/errors.hpp"
#include "reid/evaluation.hpp"
#include "reid/experiments.hpp"
#include "reid/features.hpp"
#include "reid/kvconfig.hpp"
#include "reid/manifest.hpp"
#include "reid/mask_batch.hpp"
#include "reid/partviz.hpp"
#include "reid/synth.hpp"
#include "reid/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace reid::cli {
namespace fs = std::filesystem;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"fuse-masks", "train",           "eval",           "bias-grid",
                                              "ablate",     "transfer",        "visualize-match", "validate-manifest",
                                              "make-toy-data"};
  return names;
}

namespace {

struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::array<std::uint8_t, 3> parse_rgb(const std::string& s, const char* field) {
  std::array<std::uint8_t, 3> out{};
  std::stringstream ss(s);
  std::string tok;
  int i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= 3) throw ConfigError(field, "expected R,G,B");
    int v = 0;
    try {
      v = std::stoi(tok);
    } catch (const std::exception&) {
      throw ConfigError(field, "'" + tok + "' is not an integer");
    }
    if (v < 0 || v > 255) throw ConfigError(field, "channels must lie in [0, 255]");
    out[static_cast<std::size_t>(i++)] = static_cast<std::uint8_t>(v);
  }
  if (i != 3) throw ConfigError(field, "expected R,G,B");
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Experiment configuration: TrainConfig keys plus eval.* and dataset.* blocks.
struct Experiment {
  train::TrainConfig train;
  eval::EvalOptions eval;
  KeyValueConfig extra;  ///< eval.* / dataset.* entries as given

  KeyValueConfig resolved() const {
    KeyValueConfig kv = train.to_kv();
    kv.set("eval.protocol", std::string(eval::to_string(eval.protocol)));
    kv.set("eval.rerank", eval.rerank);
    kv.set("eval.k1", eval.rerank_params.k1);
    kv.set("eval.k2", eval.rerank_params.k2);
    kv.set("eval.lambda", eval.rerank_params.lambda);
    for (const auto& [k, v] : extra.entries())
      if (k.rfind("dataset.", 0) == 0) kv.set(k, v);
    return kv;
  }
};

Experiment load_experiment(const std::string& config_path, bool toy, const std::vector<std::string>& overrides) {
  KeyValueConfig kv;
  if (!config_path.empty()) kv = KeyValueConfig::load(config_path);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError(o, "override must look like key=value");
    kv.set(o.substr(0, eq), o.substr(eq + 1));
  }
  KeyValueConfig train_kv, extra;
  for (const auto& [k, v] : kv.entries()) {
    if (k.rfind("eval.", 0) == 0 || k.rfind("dataset.", 0) == 0)
      extra.set(k, v);
    else
      train_kv.set(k, v);
  }
  for (const auto& [k, v] : extra.entries()) {
    static const std::vector<std::string> known{"eval.protocol", "eval.rerank", "eval.k1", "eval.k2", "eval.lambda"};
    if (k.rfind("eval.", 0) == 0 && std::find(known.begin(), known.end(), k) == known.end())
      throw ConfigError(k, "unknown configuration key");
  }
  Experiment ex;
  ex.train = train::TrainConfig::from_kv(train_kv, toy ? train::TrainConfig::toy() : train::TrainConfig{});
  ex.eval.protocol = eval::parse_eval_protocol(extra.get_string("eval.protocol", "plain"));
  ex.eval.rerank = extra.get_bool("eval.rerank", false);
  ex.eval.rerank_params.k1 = static_cast<int>(extra.get_int("eval.k1", 20));
  ex.eval.rerank_params.k2 = static_cast<int>(extra.get_int("eval.k2", 6));
  ex.eval.rerank_params.lambda = extra.get_double("eval.lambda", 0.3);
  ex.eval.rerank_params.validate();
  ex.extra = extra;
  return ex;
}

data::DatasetManifest training_part(const data::DatasetManifest& m) {
  const bool has_train = std::any_of(m.records.begin(), m.records.end(),
                                     [](const data::SampleRecord& r) { return r.split == data::Split::train; });
  return has_train ? data::select_split(m, data::Split::train) : m;
}

data::DatasetManifest test_part(const data::DatasetManifest& m) {
  data::DatasetManifest out = m;
  out.records.clear();
  bool any = false;
  for (const auto& r : m.records)
    if (r.split == data::Split::test_query || r.split == data::Split::test_gallery) {
      out.records.push_back(r);
      any = true;
    }
  return any ? data::densify(std::move(out)) : m;
}

void check_disjoint_splits(const data::DatasetManifest& m) {
  const auto train = data::select_split(m, data::Split::train);
  const auto test = test_part(m);
  if (train.records.empty() || test.records.size() == m.records.size()) return;
  data::validate_disjoint(train, test);
}

// ---- subcommands ---------------------------------------------------------------------------

struct Common {
  std::string config;
  bool toy = false;
  std::vector<std::string> set;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Flat key = value experiment config (see docs/config.md)");
  app->add_flag("--toy", c.toy, "Start from the desk-scale toy preset");
  app->add_option("--set", c.set, "Override one config key: --set key=value (repeatable)");
}

int run_make_toy(const synth::ToyDataConfig& cfg, const std::string& out_dir, bool fuse, const std::string& criterion,
                 double threshold, std::ostream& out) {
  const auto ds = synth::write_toy_dataset(cfg, out_dir);
  out << "wrote " << ds.images << " images to " << ds.root.string() << '\n';
  if (fuse) {
    mask::BatchFuseOptions opt;
    opt.criterion.kind = mask::parse_criterion(criterion);
    opt.criterion.threshold = threshold;
    const fs::path masked = fs::path(out_dir) / "masked";
    for (const char* name : {"train", "test"}) {
      const auto m = data::load_manifest(fs::path(out_dir) / (std::string(name) + ".csv"));
      const auto report = mask::batch_fuse(m, ds.candidates, ds.reference, masked / name, opt);
      // Flatten into masked/<split>.csv so both variants share one layout.
      auto fused = data::load_manifest(masked / name / "manifest.csv");
      for (auto& r : fused.records) {
        r.image_path = std::string(name) + "/" + r.image_path;
        if (r.mask_path) r.mask_path = std::string(name) + "/" + *r.mask_path;
      }
      fused.root = masked;
      data::write_manifest(masked / (std::string(name) + ".csv"), fused);
      out << name << ": fused " << report.written() << " masks, skipped " << report.skipped() << '\n';
    }
  }
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"reid: animal re-identification toolkit"};
  app.name("reid");
  app.require_subcommand(1);

  const auto& names = subcommands();
  if (args.empty() || (args[0] != "-h" && args[0] != "--help" &&
                       std::find(names.begin(), names.end(), args[0]) == names.end())) {
    err << (args.empty() ? "missing subcommand" : "unknown subcommand '" + args[0] + "'") << "\nusage: reid <subcommand> [options]\nsubcommands:";
    for (const auto& n : names) err << ' ' << n;
    err << "\nrun 'reid <subcommand> --help' for its flags\n";
    return 2;
  }

  std::function<int()> action;

  // fuse-masks
  auto* fuse = app.add_subcommand("fuse-masks", "Fuse candidate masks against a reference and blank backgrounds");
  std::string f_manifest, f_cand, f_ref, f_out, f_criterion = "iou", f_fill = "0,0,0";
  double f_threshold = 0.3;
  long long f_min_area = 0;
  fuse->add_option("--manifest", f_manifest, "Dataset manifest")->required();
  fuse->add_option("--candidates", f_cand, "Directory of per-image candidate masks (<dir>/<stem>/*.png)")->required();
  fuse->add_option("--reference", f_ref, "Directory of reference masks (<dir>/<stem>.png)")->required();
  fuse->add_option("--out", f_out, "Output directory")->required();
  fuse->add_option("--criterion", f_criterion, "iou, ioc or passthrough")->capture_default_str();
  fuse->add_option("--threshold", f_threshold, "Acceptance threshold in [0,1]")->capture_default_str();
  fuse->add_option("--fill", f_fill, "Background fill R,G,B")->capture_default_str();
  fuse->add_option("--min-area", f_min_area, "Drop candidates smaller than this many pixels (0 = off)");
  fuse->callback([&] {
    action = [&] {
      mask::BatchFuseOptions opt;
      opt.criterion.kind = mask::parse_criterion(f_criterion);
      opt.criterion.threshold = f_threshold;
      if (f_min_area > 0) opt.criterion.min_area = static_cast<std::size_t>(f_min_area);
      opt.fill = parse_rgb(f_fill, "fill");
      const auto m = data::load_manifest(f_manifest);
      const auto report = mask::batch_fuse(m, f_cand, f_ref, f_out, opt);
      KeyValueConfig kv;
      kv.set("manifest", f_manifest);
      kv.set("candidates", f_cand);
      kv.set("reference", f_ref);
      kv.set("criterion", std::string(mask::to_string(opt.criterion.kind)));
      kv.set("threshold", f_threshold);
      kv.set("fill", f_fill);
      kv.set("min_area", f_min_area);
      kv.save(fs::path(f_out) / "resolved_config.txt");
      out << report.to_tsv();
      out << "written " << report.written() << ", skipped " << report.skipped() << '\n';
      return 0;
    };
  });

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  Common tr_c;
  std::string tr_manifest, tr_out;
  bool tr_resume = false;
  add_common(tr, tr_c);
  tr->add_option("--manifest", tr_manifest, "Training manifest (train split is used when a split column exists)")->required();
  tr->add_option("--out", tr_out, "Run directory")->required();
  tr->add_flag("--resume", tr_resume, "Continue from <out>/checkpoints/last.ckpt");
  tr->callback([&] {
    action = [&] {
      const Experiment ex = load_experiment(tr_c.config, tr_c.toy, tr_c.set);
      ex.resolved().save(fs::path(tr_out) / "resolved_config.txt");
      const auto m = training_part(data::load_manifest(tr_manifest));
      train::TrainOptions opt;
      opt.resume = tr_resume;
      opt.on_epoch = [&](const train::EpochSummary& s) {
        out << "epoch " << s.epoch << " loss " << std::fixed << std::setprecision(4) << s.mean_total;
        if (s.val_map) out << " val_mAP " << *s.val_map;
        out << (s.backbone_frozen ? " (backbone frozen)" : "") << '\n';
      };
      const auto res = train::train(ex.train, m, tr_out, opt);
      out << "checkpoints: " << res.last_checkpoint.string() << ", " << res.best_checkpoint.string() << '\n';
      return 0;
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  std::string ev_ckpt, ev_manifest, ev_protocol = "plain", ev_report;
  bool ev_rerank = false, ev_no_mask = false;
  eval::RerankParams ev_rr;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
  ev->add_option("--manifest", ev_manifest, "Test manifest (test split is used when a split column exists)")->required();
  ev->add_option("--protocol", ev_protocol, "plain or atrw")->capture_default_str();
  ev->add_flag("--rerank", ev_rerank, "Apply k-reciprocal re-ranking");
  ev->add_option("--k1", ev_rr.k1, "Re-ranking k1")->capture_default_str();
  ev->add_option("--k2", ev_rr.k2, "Re-ranking k2")->capture_default_str();
  ev->add_option("--lambda", ev_rr.lambda, "Re-ranking lambda")->capture_default_str();
  ev->add_flag("--no-mask", ev_no_mask, "Ignore the manifest's mask column");
  ev->add_option("--report", ev_report, "Report path; <report>.json and <report>.config.txt are written beside it")->required();
  ev->callback([&] {
    action = [&] {
      eval::EvalOptions eo;
      eo.protocol = eval::parse_eval_protocol(ev_protocol);
      eo.rerank = ev_rerank;
      eo.rerank_params = ev_rr;
      eo.rerank_params.validate();
      const auto m = test_part(data::load_manifest(ev_manifest));
      eval::ExtractOptions xo;
      xo.apply_mask = !ev_no_mask;
      const auto store = eval::extract_features(fs::path(ev_ckpt), m, xo);
      auto rep = eval::evaluate(store, eo);
      for (const auto& s : store.skipped) rep.warnings.push_back("skipped " + s);
      write_file(ev_report, rep.to_table());
      write_file(ev_report + ".json", rep.to_json() + "\n");
      KeyValueConfig kv;
      kv.set("checkpoint", ev_ckpt);
      kv.set("manifest", ev_manifest);
      kv.set("protocol", ev_protocol);
      kv.set("rerank", ev_rerank);
      kv.set("k1", ev_rr.k1);
      kv.set("k2", ev_rr.k2);
      kv.set("lambda", ev_rr.lambda);
      kv.set("apply_mask", !ev_no_mask);
      kv.save(ev_report + ".config.txt");
      out << rep.to_table();
      return 0;
    };
  });

  // bias-grid
  auto* bg = app.add_subcommand("bias-grid", "Train/test on original vs masked backgrounds (2 x 2 grid)");
  Common bg_c;
  std::string bg_orig, bg_masked, bg_out;
  add_common(bg, bg_c);
  bg->add_option("--original", bg_orig, "Directory with train.csv/test.csv of the original images")->required();
  bg->add_option("--masked", bg_masked, "Directory with train.csv/test.csv of the masked images")->required();
  bg->add_option("--out", bg_out, "Run directory")->required();
  bg->callback([&] {
    action = [&] {
      Experiment ex = load_experiment(bg_c.config, bg_c.toy, bg_c.set);
      ex.train.apply_mask = false;  // the variant directories already decide what the model sees
      const auto variants = experiments::load_variants(bg_orig, bg_masked);
      ex.resolved().save(fs::path(bg_out) / "resolved_config.txt");
      const auto rows = experiments::bias_grid(ex.train, variants, bg_out);
      const std::string table = experiments::bias_table(rows);
      write_file(fs::path(bg_out) / "bias_grid.tsv", table);
      out << table;
      return 0;
    };
  });

  // ablate
  auto* ab = app.add_subcommand("ablate", "Train one model per ablation row and tabulate");
  Common ab_c;
  std::string ab_train, ab_test, ab_out, ab_grid = "components", ab_rows;
  add_common(ab, ab_c);
  ab->add_option("--train", ab_train, "Training manifest")->required();
  ab->add_option("--test", ab_test, "Test manifest")->required();
  ab->add_option("--out", ab_out, "Run directory")->required();
  ab->add_option("--grid", ab_grid, "components, lambda-dve or lambda-reid")->capture_default_str();
  ab->add_option("--rows", ab_rows, "Comma-separated row indices to run (default: all)");
  ab->callback([&] {
    action = [&] {
      const Experiment ex = load_experiment(ab_c.config, ab_c.toy, ab_c.set);
      std::vector<train::AblationRow> rows;
      if (ab_grid == "components") rows = train::component_grid();
      else if (ab_grid == "lambda-dve") rows = train::lambda_dve_sweep();
      else if (ab_grid == "lambda-reid") rows = train::lambda_reid_sweep();
      else throw ConfigError("grid", "expected components, lambda-dve or lambda-reid");
      if (!ab_rows.empty()) {
        std::vector<train::AblationRow> pick;
        std::stringstream ss(ab_rows);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          const int i = std::stoi(tok);
          if (i < 0 || i >= static_cast<int>(rows.size())) throw ConfigError("rows", "index " + tok + " out of range");
          pick.push_back(rows[static_cast<std::size_t>(i)]);
        }
        rows = pick;
      }
      ex.resolved().save(fs::path(ab_out) / "resolved_config.txt");
      const auto results = train::ablation_run(ex.train, rows, training_part(data::load_manifest(ab_train)),
                                               test_part(data::load_manifest(ab_test)), ab_out, ex.eval.protocol);
      const std::string table = train::ablation_table(results);
      write_file(fs::path(ab_out) / "ablation.tsv", table);
      out << table;
      return 0;
    };
  });

  // transfer
  auto* tf = app.add_subcommand("transfer", "Evaluate a checkpoint on another species, or build the cross-species table");
  Common tf_c;
  std::string tf_ckpt, tf_manifest, tf_protocol = "plain", tf_report, tf_out;
  std::vector<std::string> tf_domains;
  add_common(tf, tf_c);
  tf->add_option("--checkpoint", tf_ckpt, "Checkpoint trained on the source species");
  tf->add_option("--manifest", tf_manifest, "Foreign test manifest");
  tf->add_option("--protocol", tf_protocol, "plain or atrw")->capture_default_str();
  tf->add_option("--report", tf_report, "Report path for single evaluation");
  tf->add_option("--domain", tf_domains, "Table mode: name:train.csv:test.csv[:protocol] (repeatable)");
  tf->add_option("--out", tf_out, "Table mode run directory");
  tf->callback([&] {
    action = [&] {
      if (!tf_domains.empty()) {
        if (tf_out.empty()) throw ConfigError("out", "table mode needs --out");
        const Experiment ex = load_experiment(tf_c.config, tf_c.toy, tf_c.set);
        std::vector<experiments::TransferDomain> domains;
        for (const auto& d : tf_domains) {
          std::vector<std::string> parts;
          std::stringstream ss(d);
          std::string tok;
          while (std::getline(ss, tok, ':')) parts.push_back(tok);
          if (parts.size() < 3 || parts.size() > 4) throw ConfigError("domain", "expected name:train.csv:test.csv[:protocol]");
          experiments::TransferDomain td;
          td.name = parts[0];
          td.train = training_part(data::load_manifest(parts[1]));
          td.test = test_part(data::load_manifest(parts[2]));
          if (parts.size() == 4) td.protocol = eval::parse_eval_protocol(parts[3]);
          domains.push_back(std::move(td));
        }
        ex.resolved().save(fs::path(tf_out) / "resolved_config.txt");
        const auto table = experiments::transfer_table(ex.train, domains, tf_out).to_string();
        write_file(fs::path(tf_out) / "transfer.tsv", table);
        out << table;
        return 0;
      }
      if (tf_ckpt.empty() || tf_manifest.empty() || tf_report.empty())
        throw ConfigError("checkpoint", "single mode needs --checkpoint, --manifest and --report");
      auto model = nn::model_from_checkpoint(nn::load_checkpoint(tf_ckpt));
      const auto rep = experiments::transfer_eval(*model, test_part(data::load_manifest(tf_manifest)),
                                                  eval::parse_eval_protocol(tf_protocol));
      write_file(tf_report, rep.to_table());
      write_file(tf_report + ".json", rep.to_json() + "\n");
      KeyValueConfig kv;
      kv.set("checkpoint", tf_ckpt);
      kv.set("manifest", tf_manifest);
      kv.set("protocol", tf_protocol);
      kv.save(tf_report + ".config.txt");
      out << rep.to_table();
      return 0;
    };
  });

  // visualize-match
  auto* vm = app.add_subcommand("visualize-match", "Match one source pixel in a target image and render the heatmap panel");
  std::string vm_ckpt, vm_src, vm_tgt, vm_point, vm_layer = "dve", vm_out, vm_mask;
  vm->add_option("--checkpoint", vm_ckpt, "Checkpoint file")->required();
  vm->add_option("--source", vm_src, "Source image")->required();
  vm->add_option("--target", vm_tgt, "Target image")->required();
  vm->add_option("--point", vm_point, "Query pixel X,Y in source coordinates")->required();
  vm->add_option("--layer", vm_layer, "dve or stage3")->capture_default_str();
  vm->add_option("--source-mask", vm_mask, "Optional foreground mask of the source (warns on background queries)");
  vm->add_option("--out", vm_out, "Output PNG")->required();
  vm->callback([&] {
    action = [&] {
      viz::MatchQuery q;
      q.source = read_image(vm_src, 3);
      q.target = read_image(vm_tgt, 3);
      const auto comma = vm_point.find(',');
      if (comma == std::string::npos) throw ConfigError("point", "expected X,Y");
      try {
        q.x = std::stod(vm_point.substr(0, comma));
        q.y = std::stod(vm_point.substr(comma + 1));
      } catch (const std::exception&) {
        throw ConfigError("point", "expected X,Y numbers");
      }
      if (vm_layer == "dve") q.layer = nn::DescriptorLayer::dve;
      else if (vm_layer == "stage3" || vm_layer == "stage3-raw") q.layer = nn::DescriptorLayer::stage3;
      else throw ConfigError("layer", "expected dve or stage3");
      std::vector<std::uint8_t> fg;
      if (!vm_mask.empty()) {
        const auto m = mask::read_mask(vm_mask);
        fg.assign(m.bits().begin(), m.bits().end());
        q.foreground = &fg;
      }
      auto model = nn::model_from_checkpoint(nn::load_checkpoint(vm_ckpt));
      const auto pm = viz::match_point(*model, q);
      viz::write_panel(vm_out, q, pm);
      for (const auto& w : pm.match.warnings) err << "warning: " << w << '\n';
      std::ostringstream meta;
      meta << "layer = " << vm_layer << "\nsource = " << vm_src << "\ntarget = " << vm_tgt << "\nquery = " << q.x << ","
           << q.y << "\nmatch = " << pm.x << "," << pm.y << "\nmatch_cell = " << pm.match.best.x << ","
           << pm.match.best.y << "\nsimilarity = " << pm.match.best_similarity << "\nsource_hash = " << std::hex
           << pm.source_hash << "\ntarget_hash = " << pm.target_hash << '\n';
      write_file(vm_out + ".txt", meta.str());
      out << meta.str();
      return 0;
    };
  });

  // validate-manifest
  auto* vmf = app.add_subcommand("validate-manifest", "Parse a manifest and check train/test entity disjointness");
  std::string vmf_manifest, vmf_test;
  vmf->add_option("--manifest", vmf_manifest, "Manifest (train/test splits inside are checked)")->required();
  vmf->add_option("--test", vmf_test, "Separate test manifest to check against");
  vmf->callback([&] {
    action = [&] {
      const auto m = data::load_manifest(vmf_manifest);
      for (const auto& w : m.warnings) err << "warning: " << w << '\n';
      out << m.records.size() << " records, " << m.num_entities << " entities"
          << (m.has_cameras() ? ", cameras present" : "") << '\n';
      if (!vmf_test.empty()) data::validate_disjoint(m, data::load_manifest(vmf_test));
      else check_disjoint_splits(m);
      out << "ok\n";
      return 0;
    };
  });

  // make-toy-data
  auto* mt = app.add_subcommand("make-toy-data", "Render the synthetic toy dataset");
  synth::ToyDataConfig mt_cfg;
  std::string mt_out, mt_species = "striped", mt_criterion = "ioc";
  double mt_threshold = 0.5;
  bool mt_fuse = false;
  mt->add_option("--out", mt_out, "Output directory")->required();
  mt->add_option("--train-entities", mt_cfg.train_entities, "Training entities")->capture_default_str();
  mt->add_option("--test-entities", mt_cfg.test_entities, "Test entities")->capture_default_str();
  mt->add_option("--images-per-side", mt_cfg.images_per_side, "Views per entity and side")->capture_default_str();
  mt->add_option("--size", mt_cfg.image_size, "Square image size")->capture_default_str();
  mt->add_option("--cameras", mt_cfg.cameras, "Number of cameras")->capture_default_str();
  mt->add_option("--species", mt_species, "striped, spotted or patched")->capture_default_str();
  mt->add_flag("--identity-background", mt_cfg.identity_background, "Backgrounds correlate with identity");
  mt->add_option("--seed", mt_cfg.seed, "Generator seed")->capture_default_str();
  mt->add_flag("--fuse", mt_fuse, "Also write the fused-mask variant under <out>/masked");
  mt->add_option("--criterion", mt_criterion, "Fusion criterion for --fuse")->capture_default_str();
  mt->add_option("--threshold", mt_threshold, "Fusion threshold for --fuse")->capture_default_str();
  mt->callback([&] {
    action = [&] {
      mt_cfg.species = synth::parse_species(mt_species);
      return run_make_toy(mt_cfg, mt_out, mt_fuse, mt_criterion, mt_threshold, out);
    };
  });

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return 2;
  }
  try {
    return action ? action() : 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace reid::cli
