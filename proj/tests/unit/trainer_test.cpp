#include "fixtures.hpp"

#include "reid/ablation.hpp"
#include "reid/checkpoint.hpp"
#include "reid/errors.hpp"
#include "reid/synth.hpp"
#include "reid/trainer.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

namespace reid::train {
namespace {

using testing::TempDir;
using testing::read_text;

// Empty when equal, otherwise the first differing line of both texts.
std::string first_difference(const std::string& a, const std::string& b) {
  std::istringstream sa(a), sb(b);
  std::string la, lb;
  for (int line = 1;; ++line) {
    const bool ga = static_cast<bool>(std::getline(sa, la)), gb = static_cast<bool>(std::getline(sb, lb));
    if (!ga && !gb) return {};
    if (ga != gb || la != lb) return "line " + std::to_string(line) + ":\n  " + la + "\n  " + lb;
  }
}

TrainConfig schedule80() {
  TrainConfig c;
  c.epochs = 80;
  return c;
}

TEST(LrAt, BaseRatesBeforeDrop) {
  const auto c = schedule80();
  EXPECT_EQ(lr_at(0, c), std::make_pair(0.001, 0.01));
  EXPECT_EQ(lr_at(52, c), std::make_pair(0.001, 0.01));
}

TEST(LrAt, TenfoldDropFromEpoch53) {
  const auto c = schedule80();
  EXPECT_EQ(c.drop_epoch(), 53);
  const auto [b, h] = lr_at(60, c);
  EXPECT_DOUBLE_EQ(b, 0.0001);
  EXPECT_DOUBLE_EQ(h, 0.001);
  EXPECT_DOUBLE_EQ(lr_at(53, c).first, 0.0001);
}

TEST(LrAt, OutOfRangeThrows) {
  const auto c = schedule80();
  EXPECT_THROW(lr_at(-1, c), InputError);
  EXPECT_THROW(lr_at(80, c), InputError);
}

TEST(TrainConfig, DefaultsValidate) {
  EXPECT_NO_THROW(TrainConfig{}.validate());
  EXPECT_NO_THROW(TrainConfig::toy().validate());
}

TEST(TrainConfig, KeyValueRoundTrip) {
  TrainConfig c = TrainConfig::toy();
  c.lr_heads = 0.02;
  c.losses.lr = false;
  c.circle.gamma = 32;
  c.augment.erase_fill = {1, 2, 3};
  c.model.dve_dim = 32;
  const auto back = TrainConfig::from_kv(c.to_kv(), TrainConfig{});
  EXPECT_EQ(back.to_kv().entries(), c.to_kv().entries());
}

TEST(TrainConfig, UnknownKeyIsNamed) {
  KeyValueConfig kv;
  kv.set("lr_bakcbone", 0.1);
  try {
    TrainConfig::from_kv(kv, {});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("lr_bakcbone"), std::string::npos);
  }
}

TEST(TrainConfig, InvariantsNameTheField) {
  auto expect_field = [](TrainConfig c, const std::string& field) {
    try {
      c.validate();
      ADD_FAILURE() << "accepted bad " << field;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  TrainConfig c;
  c.freeze_epochs = c.epochs;
  expect_field(c, "freeze_epochs");
  c = {};
  c.lr_backbone = 0;
  expect_field(c, "lr_backbone");
  c = {};
  c.batch_size = 31;
  expect_field(c, "batch_size");
  c = {};
  c.losses = {false, false, false, false};
  expect_field(c, "losses");
}

TEST(Ablation, ComponentGridHasNineRows) {
  const auto grid = component_grid();
  ASSERT_EQ(grid.size(), 9u);
  std::set<std::string> names;
  for (const auto& r : grid) {
    names.insert(r.name);
    EXPECT_NO_THROW(r.apply(TrainConfig{}).validate());
  }
  EXPECT_EQ(names.size(), 9u);
}

TEST(Ablation, SweepsCoverTheGrid) {
  const auto dve = lambda_dve_sweep();
  ASSERT_EQ(dve.size(), 11u);
  EXPECT_DOUBLE_EQ(*dve.front().lambda_dve, 0.0);
  EXPECT_NEAR(*dve.back().lambda_dve, 2.0, 1e-12);
  const auto reid = lambda_reid_sweep();
  ASSERT_EQ(reid.size(), 3u);
  EXPECT_EQ(*reid[0].lambda_reid, 1.0);
  EXPECT_EQ(*reid[2].lambda_reid, 5.0);
}

TEST(Ablation, RowTogglesApply) {
  AblationRow row{"id only", {true, false, false, false}, false, std::nullopt, std::nullopt};
  const auto c = row.apply(TrainConfig{});
  EXPECT_TRUE(c.losses.id);
  EXPECT_FALSE(c.losses.lr || c.losses.reid || c.losses.dve);
  EXPECT_FALSE(c.identity_sampler);
}

TEST(Ablation, RowWithoutLossIsRejected) {
  AblationRow row{"none", {false, false, false, false}, true, std::nullopt, std::nullopt};
  EXPECT_THROW(row.apply(TrainConfig{}), ConfigError);
}

synth::ToyDataConfig small_data() {
  synth::ToyDataConfig d;
  d.train_entities = 6;
  d.test_entities = 2;
  d.images_per_side = 2;
  return d;
}

TrainConfig small_config(int epochs) {
  TrainConfig c = TrainConfig::toy();
  c.epochs = epochs;
  c.freeze_epochs = 1;
  c.batch_size = 12;
  c.val_fraction = 0.0;
  return c;
}

class SmallTrain : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("trainer");
    const auto ds = synth::write_toy_dataset(small_data(), dir_->path() / "data");
    manifest_ = new data::DatasetManifest(data::load_manifest(ds.train_manifest));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static TempDir* dir_;
  static data::DatasetManifest* manifest_;
};
TempDir* SmallTrain::dir_ = nullptr;
data::DatasetManifest* SmallTrain::manifest_ = nullptr;

TEST_F(SmallTrain, ResumeKeepsScheduleAndWeights) {
  const auto cfg = small_config(4);
  const auto full = train(cfg, *manifest_, dir_->path() / "full");

  TrainOptions first;
  first.stop_after = 2;
  train(cfg, *manifest_, dir_->path() / "split", first);
  TrainOptions second;
  second.resume = true;
  const auto resumed = train(cfg, *manifest_, dir_->path() / "split", second);

  ASSERT_EQ(resumed.epochs.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = full.epochs[i + 2];
    const auto& b = resumed.epochs[i];
    EXPECT_EQ(a.epoch, b.epoch);
    EXPECT_EQ(a.lr_backbone, b.lr_backbone);
    EXPECT_EQ(a.lr_heads, b.lr_heads);
    EXPECT_EQ(a.backbone_frozen, b.backbone_frozen);
  }
  EXPECT_EQ(first_difference(read_text(dir_->path() / "full" / "train_log.jsonl"),
                             read_text(dir_->path() / "split" / "train_log.jsonl")),
            "");
  EXPECT_TRUE(read_text(full.last_checkpoint) == read_text(resumed.last_checkpoint));
}

TEST_F(SmallTrain, ZeroLambdaDveEqualsDisabledDve) {
  auto a = small_config(2);
  a.weights.lambda_dve = 0.0;
  auto b = small_config(2);
  b.losses.dve = false;
  train(a, *manifest_, dir_->path() / "lam0");
  train(b, *manifest_, dir_->path() / "off");
  EXPECT_EQ(first_difference(read_text(dir_->path() / "lam0" / "train_log.jsonl"),
                             read_text(dir_->path() / "off" / "train_log.jsonl")),
            "");
}

TEST_F(SmallTrain, RepeatedRunIsIdentical) {
  const auto cfg = small_config(2);
  train(cfg, *manifest_, dir_->path() / "r1");
  train(cfg, *manifest_, dir_->path() / "r2");
  EXPECT_EQ(first_difference(read_text(dir_->path() / "r1" / "train_log.jsonl"),
                             read_text(dir_->path() / "r2" / "train_log.jsonl")),
            "");
  EXPECT_TRUE(read_text(dir_->path() / "r1" / "checkpoints" / "last.ckpt") ==
              read_text(dir_->path() / "r2" / "checkpoints" / "last.ckpt"));
}

TEST_F(SmallTrain, WritesConfigLogsAndCheckpoints) {
  const auto r = train(small_config(2), *manifest_, dir_->path() / "files");
  EXPECT_TRUE(std::filesystem::exists(dir_->path() / "files" / "config.txt"));
  EXPECT_TRUE(std::filesystem::exists(r.last_checkpoint));
  EXPECT_TRUE(std::filesystem::exists(r.best_checkpoint));
  const auto ck = nn::load_checkpoint(r.last_checkpoint);
  EXPECT_EQ(ck.epoch, 2);
  EXPECT_EQ(ck.entity_labels.size(), 6u);
  EXPECT_EQ(ck.metric_history.size(), 2u);
}

TEST(SplitValidation, HoldsOutWholeIdentities) {
  TempDir dir;
  const auto ds = synth::write_toy_dataset(small_data(), dir / "data");
  const auto m = data::load_manifest(ds.train_manifest);
  const auto [tr, val] = split_validation(m, 0.1, 3);
  EXPECT_EQ(val.num_entities, 2);  // round(0.6) raised to the minimum of 2
  EXPECT_EQ(tr.num_entities, 4);
  EXPECT_EQ(tr.records.size() + val.records.size(), m.records.size());
  std::set<std::string> a(tr.raw_labels.begin(), tr.raw_labels.end());
  for (const auto& l : val.raw_labels) EXPECT_EQ(a.count(l), 0u);
  const auto [all, none] = split_validation(m, 0.0, 3);
  EXPECT_EQ(all.records.size(), m.records.size());
  EXPECT_TRUE(none.records.empty());
}

std::uint64_t backbone_checksum(const nn::Checkpoint& ck) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, t] : ck.parameters) {
    if (name.rfind("backbone.", 0) != 0 || name.find("running_") != std::string::npos) continue;
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    for (std::size_t i = 0; i < t.numel() * sizeof(float); ++i) h = (h ^ bytes[i]) * 1099511628211ULL;
  }
  return h;
}

TEST(ToySmoke, FiveEpochsFiniteWithFrozenBackbone) {
  TempDir dir("toy-smoke");
  const auto ds = synth::write_toy_dataset({}, dir / "data");
  const auto manifest = data::load_manifest(ds.train_manifest);
  auto cfg = TrainConfig::toy();
  cfg.epochs = 5;

  std::vector<std::uint64_t> sums;
  TrainOptions opt;
  opt.on_epoch = [&](const EpochSummary&) { sums.push_back(backbone_checksum(nn::load_checkpoint(dir / "run" / "checkpoints" / "last.ckpt"))); };
  auto init_cfg = cfg.model;
  init_cfg.num_identities = 14;  // 16 training identities minus the 2 held out for validation
  nn::ReIdModel init_model(init_cfg);
  const auto initial = backbone_checksum(nn::capture(init_model));

  const auto t0 = std::chrono::steady_clock::now();
  const auto r = train(cfg, manifest, dir / "run", opt);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  EXPECT_LT(seconds, 120.0);
  ASSERT_EQ(r.epochs.size(), 5u);
  for (const auto& e : r.epochs) {
    EXPECT_TRUE(std::isfinite(e.mean_total));
    EXPECT_GT(e.mean_dve, 0.0);
    EXPECT_EQ(e.backbone_frozen, e.epoch < 3);
  }
  ASSERT_EQ(sums.size(), 5u);
  EXPECT_EQ(sums[0], initial);
  EXPECT_EQ(sums[1], initial);
  EXPECT_EQ(sums[2], initial);
  EXPECT_NE(sums[3], initial);
}

}  // namespace
}  // namespace reid::train
