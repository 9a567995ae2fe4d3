// Acceptance runner: one PASS/FAIL line per criterion, followed by a summary.
//
// Exit status is 0 when every criterion passes, except those named with --expect-fail, which
// must fail (an unexpected pass is reported as XPASS and also makes the run fail).

#include "dve_probe.hpp"
#include "suites.hpp"

#include "reid/checkpoint.hpp"
#include "reid/evaluation.hpp"
#include "reid/experiments.hpp"
#include "reid/features.hpp"
#include "reid/manifest.hpp"
#include "reid/model.hpp"
#include "reid/rng.hpp"
#include "reid/synth.hpp"
#include "reid/train_config.hpp"
#include "reid_cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace reid;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(1) << v;
  return s.str();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

void reid_cmd(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int rc = cli::dispatch(args, out, err);
  if (rc != 0) {
    std::string joined;
    for (const auto& a : args) joined += " " + a;
    throw std::runtime_error("reid" + joined + " exited " + std::to_string(rc) + ": " + err.str());
  }
}

// A toy training run driven through the command line, evaluated on the plain protocol.
struct ToyRun {
  fs::path dir;
  double train_seconds = 0.0;
  double mAP = 0.0;
  fs::path checkpoint() const { return dir / "checkpoints" / "last.ckpt"; }
  fs::path report() const { return dir / "report.txt"; }
};

class Workspace {
 public:
  explicit Workspace(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  const fs::path& toy_data() {
    if (!toy_ready_) {
      fs::remove_all(root_ / "toy");
      reid_cmd({"make-toy-data", "--out", (root_ / "toy").string()});
      toy_ready_ = true;
    }
    return toy_dir_ = root_ / "toy";
  }

  const fs::path& bias_data() {
    if (!bias_ready_) {
      fs::remove_all(root_ / "toy_bias");
      reid_cmd({"make-toy-data", "--out", (root_ / "toy_bias").string(), "--identity-background", "--fuse"});
      bias_ready_ = true;
    }
    return bias_dir_ = root_ / "toy_bias";
  }

  // Runs are memoized by name so that criteria can share them.
  const ToyRun& run(const std::string& name, const std::vector<std::string>& overrides = {}) {
    if (auto it = runs_.find(name); it != runs_.end()) return it->second;
    const fs::path data = toy_data();
    ToyRun r;
    r.dir = root_ / ("run_" + name);
    fs::remove_all(r.dir);
    std::vector<std::string> args{"train", "--toy", "--manifest", (data / "train.csv").string(), "--out", r.dir.string()};
    for (const auto& o : overrides) {
      args.push_back("--set");
      args.push_back(o);
    }
    std::cout << "  [run " << name << "] training..." << std::flush;
    const auto t0 = Clock::now();
    reid_cmd(args);
    r.train_seconds = seconds_since(t0);
    reid_cmd({"eval", "--checkpoint", r.checkpoint().string(), "--manifest", (data / "test.csv").string(), "--report",
              r.report().string()});
    const auto store = eval::extract_features(r.checkpoint(), data::load_manifest(data / "test.csv"), {});
    r.mAP = eval::evaluate(store, {}).get("mAP");
    std::cout << " " << fmt(r.train_seconds, 1) << " s, mAP " << fmt(r.mAP) << '\n';
    return runs_.emplace(name, r).first->second;
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_, toy_dir_, bias_dir_;
  bool toy_ready_ = false, bias_ready_ = false;
  std::map<std::string, ToyRun> runs_;
};

const std::vector<std::string> kIdOnly{"loss.lr=false", "loss.reid=false", "loss.dve=false", "identity_sampler=false"};
const std::vector<std::string> kNoDve{"lambda_dve=0"};
constexpr double kRunBudgetSeconds = 600.0;
constexpr double kProbeStrength = 3.0;

Verdict loss_oracles(Workspace&) {
  const auto t0 = Clock::now();
  Verdict v{true, ""};
  for (auto kind : {testing::LossKind::circle, testing::LossKind::id, testing::LossKind::lr, testing::LossKind::dve}) {
    const auto r = testing::loss_oracle_suite(kind, 100, 1000 + static_cast<int>(kind));
    v.pass = v.pass && r.ok(100);
    v.detail += std::string(testing::to_string(kind)) + " " + std::to_string(r.instances - r.failures) + "/" +
                std::to_string(r.instances) + " (max rel " + sci(r.worst) + "); ";
  }
  const double s = seconds_since(t0);
  v.pass = v.pass && s < 30.0;
  v.detail += fmt(s, 2) + " s (limit 30)";
  return v;
}

Verdict gradient_checks(Workspace&) {
  const auto t0 = Clock::now();
  Verdict v{true, ""};
  for (auto kind : {testing::LossKind::circle, testing::LossKind::id, testing::LossKind::lr, testing::LossKind::dve}) {
    const auto r = testing::gradient_suite(kind, 20, 2000 + static_cast<int>(kind));
    v.pass = v.pass && r.ok(20);
    v.detail += std::string(testing::to_string(kind)) + " " + std::to_string(r.instances - r.failures) + "/" +
                std::to_string(r.instances) + " (max rel " + sci(r.worst) + "); ";
  }
  const double s = seconds_since(t0);
  v.pass = v.pass && s < 60.0;
  v.detail += fmt(s, 2) + " s (limit 60)";
  return v;
}

Verdict metric_oracle(Workspace&) {
  const auto t0 = Clock::now();
  Verdict v{true, ""};
  const char* names[] = {"plain", "single-camera", "cross-camera"};
  for (int p = 0; p < 3; ++p) {
    testing::SuiteResult rr;
    const auto r = testing::metric_oracle_suite(p, 200, 3000 + static_cast<std::uint64_t>(p), &rr);
    v.pass = v.pass && r.ok(200) && rr.ok(200);
    v.detail += std::string(names[p]) + " exact " + std::to_string(r.instances - r.failures) + "/" +
                std::to_string(r.instances) + ", rerank " + std::to_string(rr.instances - rr.failures) + "/" +
                std::to_string(rr.instances) + "; ";
  }
  const double s = seconds_since(t0);
  v.pass = v.pass && s < 60.0;
  v.detail += fmt(s, 2) + " s (limit 60)";
  return v;
}

Verdict mask_fusion(Workspace&) {
  const auto t0 = Clock::now();
  const auto ex = testing::mask_examples_suite();
  const auto mono = testing::theta_monotonic_suite(100, 4000);
  const double s = seconds_since(t0);
  Verdict v;
  v.pass = ex.failures == 0 && mono.ok(100) && s < 10.0;
  v.detail = "examples " + std::to_string(ex.instances - ex.failures) + "/" + std::to_string(ex.instances) +
             " decisions, monotonic " + std::to_string(mono.instances - mono.failures) + "/" +
             std::to_string(mono.instances) + "; " + fmt(s, 2) + " s (limit 10)";
  return v;
}

Verdict shape_contract(Workspace&) {
  Verdict v{true, ""};
  Rng rng(5);
  nn::Tensor batch({1, 3, 224, 224});
  for (auto& x : batch.values) x = static_cast<float>(uniform(rng, -2.0, 2.0));
  for (auto kind : {nn::BackboneKind::toy, nn::BackboneKind::se_resnet50}) {
    nn::ModelConfig c;
    c.backbone = kind;
    c.num_identities = 4;
    nn::ReIdModel model(c);
    const auto out = model.forward(batch, nn::Mode::eval);
    const auto& d = out.descriptors.shape;
    const bool ok = d == nn::Shape{1, 64, 56, 56} && out.stage5_shape.h == 28 && out.stage5_shape.w == 28;
    v.pass = v.pass && ok;
    v.detail += std::string(nn::to_string(kind)) + ": dve " + std::to_string(d.h) + "x" + std::to_string(d.w) + "x" +
                std::to_string(d.c) + ", stage5 " + std::to_string(out.stage5_shape.h) + "x" +
                std::to_string(out.stage5_shape.w) + "; ";
  }
  v.detail.resize(v.detail.size() - 2);
  return v;
}

Verdict toy_e2e(Workspace& ws) {
  const auto& full = ws.run("full");
  const auto& id_only = ws.run("id_only", kIdOnly);
  Verdict v;
  v.pass = full.mAP >= 0.80 && full.mAP >= id_only.mAP && full.train_seconds <= kRunBudgetSeconds &&
           id_only.train_seconds <= kRunBudgetSeconds;
  v.detail = "full mAP " + fmt(full.mAP) + " (>= 0.80), ID-only mAP " + fmt(id_only.mAP) + " (full >= ID-only); " +
             fmt(full.train_seconds, 0) + " s and " + fmt(id_only.train_seconds, 0) + " s per run (limit 600)";
  return v;
}

Verdict bias_grid(Workspace& ws) {
  const fs::path data = ws.bias_data();
  auto cfg = train::TrainConfig::toy();
  cfg.apply_mask = false;
  const auto variants = experiments::load_variants(data, data / "masked");
  std::cout << "  [bias grid] training on both variants..." << std::flush;
  const auto t0 = Clock::now();
  const fs::path out = ws.root() / "run_bias_grid";
  fs::remove_all(out);
  const auto rows = experiments::bias_grid(cfg, variants, out);
  std::cout << " " << fmt(seconds_since(t0), 1) << " s\n";
  std::ofstream(out / "bias_grid.tsv") << experiments::bias_table(rows);
  const double orig_orig = rows.at(0).plain.get("mAP");
  const double orig_masked = rows.at(1).plain.get("mAP");
  Verdict v;
  v.pass = orig_orig - orig_masked >= 0.05;
  v.detail = "train-orig: test-orig mAP " + fmt(orig_orig) + ", test-masked mAP " + fmt(orig_masked) + ", drop " +
             fmt(orig_orig - orig_masked) + " (>= 0.05); train-masked: test-masked " +
             fmt(rows.at(2).plain.get("mAP")) + ", test-orig " + fmt(rows.at(3).plain.get("mAP"));
  return v;
}

Verdict dve_matching(Workspace& ws) {
  const auto& full = ws.run("full");
  const auto& no_dve = ws.run("no_dve", kNoDve);
  const synth::ToyDataConfig data;
  auto probe = [&](const ToyRun& r) {
    auto model = nn::model_from_checkpoint(nn::load_checkpoint(r.checkpoint()));
    return testing::warp_match_rate(*model, data, 99, 50, 2.0, kProbeStrength);
  };
  const auto a = probe(full);
  const auto b = probe(no_dve);
  Verdict v;
  v.pass = a.rate() >= 0.70 && b.rate() <= 0.40;
  v.detail = "lambda_dve=0.2: " + std::to_string(a.hits) + "/" + std::to_string(a.queries) + " within 2 cells (>= 70%), " +
             "lambda_dve=0: " + std::to_string(b.hits) + "/" + std::to_string(b.queries) + " (<= 40%); " +
             "identity-map baseline " + std::to_string(a.identity_hits) + "/" + std::to_string(a.queries) +
             ", warp strength " + fmt(kProbeStrength, 1);
  return v;
}

Verdict determinism(Workspace& ws) {
  const auto& a = ws.run("full");
  const auto& b = ws.run("full_repeat");
  Verdict v{true, ""};
  for (const fs::path rel : {fs::path("report.txt"), fs::path("report.txt.json"), fs::path("train_log.jsonl"),
                             fs::path("epochs.jsonl"), fs::path("checkpoints") / "last.ckpt",
                             fs::path("checkpoints") / "best.ckpt"}) {
    const bool same = slurp(a.dir / rel) == slurp(b.dir / rel);
    v.pass = v.pass && same;
    v.detail += rel.generic_string() + (same ? " identical" : " DIFFERS") + "; ";
  }
  v.detail.resize(v.detail.size() - 2);
  return v;
}

struct Criterion {
  std::string name;
  std::function<Verdict(Workspace&)> check;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"loss-oracles", loss_oracles},   {"gradient-checks", gradient_checks}, {"metric-oracle", metric_oracle},
      {"mask-fusion", mask_fusion},     {"shape-contract", shape_contract},   {"toy-e2e", toy_e2e},
      {"bias-grid", bias_grid},         {"dve-matching", dve_matching},       {"determinism", determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runs the acceptance criteria and prints one PASS/FAIL line per criterion"};
  std::string work = (fs::temp_directory_path() / "reid_acceptance").string();
  std::vector<std::string> only, expect_fail;
  std::string report_path;
  app.add_option("--work", work, "Scratch directory for toy data and runs")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria (repeatable)");
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail; their failure does not fail the run");
  app.add_option("--report", report_path, "Also write the lines to this file (default <work>/acceptance_report.txt)");
  app.add_flag_callback("--list", [] {
    for (const auto& c : criteria()) std::cout << c.name << '\n';
    std::exit(0);
  }, "List criterion names and exit");
  CLI11_PARSE(app, argc, argv);

  std::set<std::string> known;
  for (const auto& c : criteria()) known.insert(c.name);
  for (const auto& n : only)
    if (!known.count(n)) return std::cerr << "unknown criterion '" << n << "'\n", 2;
  for (const auto& n : expect_fail)
    if (!known.count(n)) return std::cerr << "unknown criterion '" << n << "'\n", 2;
  if (report_path.empty()) report_path = (fs::path(work) / "acceptance_report.txt").string();

  Workspace ws(work);
  std::vector<std::string> lines;
  int unexpected = 0, passed = 0, failed = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const bool xfail = std::find(expect_fail.begin(), expect_fail.end(), c.name) != expect_fail.end();
    std::cout << "running " << c.name << '\n' << std::flush;
    Verdict v;
    try {
      v = c.check(ws);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::string tag = v.pass ? "PASS" : "FAIL";
    if (xfail) tag = v.pass ? "XPASS" : "XFAIL";
    if (v.pass != !xfail) ++unexpected;
    (v.pass ? passed : failed)++;
    lines.push_back(tag + "  " + c.name + ": " + v.detail);
    std::cout << lines.back() << '\n' << std::flush;
  }
  lines.push_back("summary: " + std::to_string(passed) + " passed, " + std::to_string(failed) + " failed, " +
                  std::to_string(unexpected) + " unexpected");
  std::cout << lines.back() << '\n';
  std::ofstream rep(report_path);
  for (const auto& l : lines) rep << l << '\n';
  return unexpected == 0 ? 0 : 1;
}
