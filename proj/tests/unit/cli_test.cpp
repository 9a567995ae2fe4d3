#include "fixtures.hpp"

#include "reid_cli/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <sstream>

namespace reid::cli {
namespace {

namespace fs = std::filesystem;
using testing::read_text;
using testing::TempDir;
using testing::write_text;

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

TEST(Dispatch, MissingSubcommandPrintsUsage) {
  const auto r = run({});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "usage"));
}

TEST(Dispatch, UnknownSubcommandExitsTwo) {
  const auto r = run({"trian"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "trian"));
  for (const auto& name : subcommands()) EXPECT_TRUE(contains(r.err, name)) << name;
}

TEST(Dispatch, MissingRequiredFlagIsAParseError) {
  const auto r = run({"eval", "--checkpoint", "x.ckpt"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "--manifest"));
}

TEST(Dispatch, EverySubcommandDescribesItsFlags) {
  const std::map<std::string, std::vector<std::string>> flags{
      {"fuse-masks", {"--manifest", "--candidates", "--reference", "--out", "--criterion", "--threshold", "--fill", "--min-area"}},
      {"train", {"--config", "--toy", "--set", "--manifest", "--out", "--resume"}},
      {"eval", {"--checkpoint", "--manifest", "--protocol", "--rerank", "--k1", "--k2", "--lambda", "--no-mask", "--report"}},
      {"bias-grid", {"--original", "--masked", "--out", "--config", "--toy", "--set"}},
      {"ablate", {"--train", "--test", "--out", "--grid", "--rows"}},
      {"transfer", {"--checkpoint", "--manifest", "--protocol", "--report", "--domain", "--out"}},
      {"visualize-match", {"--checkpoint", "--source", "--target", "--point", "--layer", "--source-mask", "--out"}},
      {"validate-manifest", {"--manifest", "--test"}},
      {"make-toy-data", {"--out", "--train-entities", "--test-entities", "--images-per-side", "--size", "--cameras",
                         "--species", "--identity-background", "--seed", "--fuse", "--criterion", "--threshold"}},
  };
  ASSERT_EQ(flags.size(), subcommands().size());
  for (const auto& [cmd, list] : flags) {
    const auto r = run({cmd, "--help"});
    EXPECT_EQ(r.code, 0) << cmd;
    for (const auto& f : list) EXPECT_TRUE(contains(r.out, f)) << cmd << " " << f;
  }
}

TEST(ValidateManifest, OverlapNamesTheEntities) {
  TempDir dir;
  write_text(dir / "train.csv", "path,entity,orientation\na.png,t7,L\nb.png,t2,R\nc.png,t9,L\n");
  write_text(dir / "test.csv", "path,entity,orientation\nd.png,t7,L\ne.png,t9,R\nf.png,t4,R\n");
  const auto r = run({"validate-manifest", "--manifest", (dir / "train.csv").string(), "--test", (dir / "test.csv").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(contains(r.err, "t7"));
  EXPECT_TRUE(contains(r.err, "t9"));
  EXPECT_FALSE(contains(r.err, "t4"));
}

TEST(ValidateManifest, SplitColumnOverlapIsCaught) {
  TempDir dir;
  write_text(dir / "all.csv", "path,entity,orientation,split\na.png,t1,L,train\nb.png,t2,R,train\nc.png,t1,R,gallery\n");
  const auto r = run({"validate-manifest", "--manifest", (dir / "all.csv").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(contains(r.err, "t1"));
}

TEST(ValidateManifest, MalformedManifestIsOneLineError) {
  TempDir dir;
  write_text(dir / "m.csv", "path,orientation\na.png,L\n");
  const auto r = run({"validate-manifest", "--manifest", (dir / "m.csv").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "entity"));
}

// One small toy dataset and one short training run shared by the workflow tests.
class Workflow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    data_ = dir_->path() / "data";
    run_ = dir_->path() / "run";
    setup_ = run({"make-toy-data", "--out", data_.string(), "--train-entities", "6", "--test-entities", "3",
                  "--images-per-side", "2", "--fuse"});
    if (setup_.code == 0) setup_ = run(train_args(run_));
  }
  static void TearDownTestSuite() { delete dir_; }

  void SetUp() override { ASSERT_EQ(setup_.code, 0) << setup_.err; }

  static std::vector<std::string> train_args(const fs::path& out) {
    return {"train", "--toy", "--set", "epochs=2", "--set", "freeze_epochs=1", "--set", "batch_size=12",
            "--set", "val_fraction=0", "--manifest", (data_ / "all.csv").string(), "--out", out.string()};
  }
  static std::string ckpt() { return (run_ / "checkpoints" / "last.ckpt").string(); }

  static TempDir* dir_;
  static fs::path data_, run_;
  static CliRun setup_;
};
TempDir* Workflow::dir_ = nullptr;
fs::path Workflow::data_, Workflow::run_;
CliRun Workflow::setup_;

TEST_F(Workflow, MakeToyDataWritesBothVariants) {
  for (const char* f : {"train.csv", "test.csv", "all.csv", "masked/train.csv", "masked/test.csv"})
    EXPECT_TRUE(fs::exists(data_ / f)) << f;
  EXPECT_EQ(run({"validate-manifest", "--manifest", (data_ / "all.csv").string()}).code, 0);
}

TEST_F(Workflow, TrainWritesResolvedConfigAndLogs) {
  for (const char* f : {"resolved_config.txt", "config.txt", "train_log.jsonl", "epochs.jsonl", "checkpoints/last.ckpt"})
    EXPECT_TRUE(fs::exists(run_ / f)) << f;
  EXPECT_TRUE(contains(read_text(run_ / "resolved_config.txt"), "epochs = 2"));
  EXPECT_TRUE(contains(setup_.out, "backbone frozen"));
}

TEST_F(Workflow, BadOverrideNamesTheField) {
  auto args = train_args(dir_->path() / "bad");
  args.insert(args.end(), {"--set", "freeze_epochs=9"});  // later overrides win
  const auto r = run(args);
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "freeze_epochs"));
}

TEST_F(Workflow, UnknownConfigFileKeyIsNamed) {
  write_text(dir_->path() / "bad.cfg", "lr_heads = 0.01\nlamda_dve = 0.5\n");
  auto args = train_args(dir_->path() / "bad2");
  args.insert(args.begin() + 1, {"--config", (dir_->path() / "bad.cfg").string()});
  const auto r = run(args);
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "lamda_dve"));

  write_text(dir_->path() / "bad_eval.cfg", "eval.rerrank = true\n");
  args = train_args(dir_->path() / "bad3");
  args.insert(args.begin() + 1, {"--config", (dir_->path() / "bad_eval.cfg").string()});
  EXPECT_TRUE(contains(run(args).err, "eval.rerrank"));
}

TEST_F(Workflow, EvalAtrwRerankColumnsAndDeterministicReports) {
  const fs::path rep1 = dir_->path() / "eval1" / "report.tsv", rep2 = dir_->path() / "eval2" / "report.tsv";
  for (const auto& rep : {rep1, rep2}) {
    const auto r = run({"eval", "--checkpoint", ckpt(), "--manifest", (data_ / "all.csv").string(), "--protocol", "atrw",
                        "--rerank", "--report", rep.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const std::string table = read_text(rep1);
  for (const char* col : {"mmAP", "R@1(s)", "R@1(c)"}) EXPECT_TRUE(contains(table, col)) << col;
  EXPECT_EQ(table, read_text(rep2));
  EXPECT_EQ(read_text(rep1.string() + ".json"), read_text(rep2.string() + ".json"));
  EXPECT_TRUE(fs::exists(rep1.string() + ".config.txt"));
}

TEST_F(Workflow, EvalRejectsBadProtocol) {
  const auto r = run({"eval", "--checkpoint", ckpt(), "--manifest", (data_ / "all.csv").string(), "--protocol", "topk",
                      "--report", (dir_->path() / "x.tsv").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "protocol"));
}

TEST_F(Workflow, IdenticalConfigsGiveIdenticalRuns) {
  const fs::path again = dir_->path() / "run_again";
  ASSERT_EQ(run(train_args(again)).code, 0);
  EXPECT_EQ(read_text(run_ / "train_log.jsonl"), read_text(again / "train_log.jsonl"));
  EXPECT_EQ(read_text(run_ / "epochs.jsonl").size(), read_text(again / "epochs.jsonl").size());
  EXPECT_TRUE(read_text(run_ / "checkpoints" / "last.ckpt") == read_text(again / "checkpoints" / "last.ckpt"));
}

TEST_F(Workflow, FuseMasksSubcommand) {
  const fs::path out = dir_->path() / "fused";
  const auto r = run({"fuse-masks", "--manifest", (data_ / "train.csv").string(), "--candidates",
                      (data_ / "candidates").string(), "--reference", (data_ / "reference").string(), "--out",
                      out.string(), "--criterion", "ioc", "--threshold", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "resolved_config.txt"));
  EXPECT_TRUE(fs::exists(out / "manifest.csv"));
  EXPECT_TRUE(contains(r.out, "written"));
}

TEST_F(Workflow, VisualizeMatchWritesPanelAndMetadata) {
  fs::path img;
  for (const auto& e : fs::directory_iterator(data_ / "images"))
    if (img.empty() || e.path() < img) img = e.path();
  const fs::path out = dir_->path() / "viz" / "match.png";
  const auto r = run({"visualize-match", "--checkpoint", ckpt(), "--source", img.string(), "--target", img.string(),
                      "--point", "30,30", "--layer", "dve", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out));
  const std::string meta = read_text(out.string() + ".txt");
  EXPECT_TRUE(contains(meta, "layer = dve"));
  EXPECT_TRUE(contains(meta, "similarity = 1"));
  const auto bad = run({"visualize-match", "--checkpoint", ckpt(), "--source", img.string(), "--target", img.string(),
                        "--point", "30", "--out", out.string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_TRUE(contains(bad.err, "point"));
}

TEST_F(Workflow, TransferSingleMode) {
  const fs::path rep = dir_->path() / "transfer" / "spotted.tsv";
  ASSERT_EQ(run({"make-toy-data", "--out", (dir_->path() / "spotted").string(), "--train-entities", "2",
                 "--test-entities", "3", "--images-per-side", "2", "--species", "spotted"})
                .code,
            0);
  const auto r = run({"transfer", "--checkpoint", ckpt(), "--manifest", (dir_->path() / "spotted" / "test.csv").string(),
                      "--report", rep.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(read_text(rep), "mAP"));
}

TEST_F(Workflow, AblateSelectedRow) {
  const fs::path out = dir_->path() / "ablate";
  auto args = train_args(out);
  args[0] = "ablate";
  args.erase(args.end() - 4, args.end());
  args.insert(args.end(), {"--train", (data_ / "all.csv").string(), "--test", (data_ / "all.csv").string(), "--out",
                           out.string(), "--rows", "0"});
  const auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "ablation.tsv"));
  EXPECT_TRUE(fs::exists(out / "resolved_config.txt"));
  args.back() = "42";
  EXPECT_EQ(run(args).code, 1);
}

}  // namespace
}  // namespace reid::cli
