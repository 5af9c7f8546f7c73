// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <numeric>

#include <gtest/gtest.h>

#include "posereg/checkpoint.hpp"
#include "posereg/config.hpp"
#include "posereg/errors.hpp"
#include "posereg/harness.hpp"

namespace posereg {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("posereg_harness_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig small_config(const fs::path& out) {
  RunConfig c;
  c.data.kind = DatasetKind::synth;
  c.data.synth.n_train = 20;
  c.data.synth.n_test = 10;
  c.data.synth.feature_dim = 8;
  c.model.feature_dim = 8;
  c.model.hidden = 2;
  c.optim.batch_size = 10;
  c.optim.lr = 1e-3;
  c.iterations = 6;
  c.log_every = 2;
  c.output_dir = out.string();
  return c;
}

TEST(ConfigTest, JsonRoundTrip) {
  RunConfig c = small_config("x");
  c.model.head = HeadKind::fc;
  c.model.embed_dim = 33;
  c.optim.beta_loss = 120.0;
  const RunConfig back = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(back.optim, c.optim);
}

TEST(ConfigTest, UnknownKeysAndMissingLearningRateAreRejected) {
  EXPECT_THROW(run_config_from_json(R"({"optim": {"lr": 1e-4}, "iterationz": 3})"), ConfigError);
  EXPECT_THROW(run_config_from_json(R"({"iterations": 3})"), ConfigError);
  EXPECT_THROW(run_config_from_json(R"({"optim": {"beta1": 0.9}})"), ConfigError);
  EXPECT_NO_THROW(run_config_from_json(R"({"optim": {"lr": 1e-4}})"));
  EXPECT_THROW(run_config_from_json("{not json"), ConfigError);
}

TEST(ConfigTest, HashIgnoresOutputDirectoryOnly) {
  RunConfig a = small_config("one"), b = small_config("two");
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(ConfigTest, BetaPresets) {
  EXPECT_EQ(beta_preset("indoor-min"), 120.0);
  EXPECT_EQ(beta_preset("indoor-max"), 750.0);
  EXPECT_EQ(beta_preset("outdoor-min"), 250.0);
  EXPECT_EQ(beta_preset("outdoor-max"), 2000.0);
  EXPECT_EQ(beta_preset("tum-lsi"), 1000.0);
  EXPECT_FALSE(beta_preset("mars").has_value());
}

TEST(ConfigTest, ValidationFailsBeforeCompute) {
  RunConfig c = small_config(scratch_dir("invalid"));
  c.optim.batch_size = 0;
  EXPECT_THROW(cmd_train(c, true), ConfigError);
  EXPECT_FALSE(fs::exists(fs::path(c.output_dir) / "config.json"));
}

TEST(CheckpointTest, EncodeDecodeAndTamperDetection) {
  ParamSet p;
  p.add("w", Tensor::matrix({{1, 2}, {3, 4}}), false);
  p.add("b", Tensor::row({-0.0, 1e-310}), true);
  Checkpoint c;
  c.config_json = to_json(small_config("x"), false);
  c.config_hash = fnv1a64(c.config_json);
  c.step = 42;
  c.params = p;
  const std::string bytes = encode_checkpoint(c);
  EXPECT_EQ(decode_checkpoint(bytes), c);
  std::string tampered = bytes;
  tampered[tampered.find("\"iterations\"") + 14] ^= 1;
  EXPECT_THROW(decode_checkpoint(tampered), DataError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), DataError);
}

TEST(ReportTest, ConsistencyAndSummaries) {
  std::vector<EvalRow> rows{{"a", 0.5, 10.0}, {"b", 0.1, 3.0}, {"c", 0.3, 1.0}};
  EvalReport r = make_report("s", "test", "lstm", "00ff", rows);
  EXPECT_EQ(r.med_pos, 0.3);
  EXPECT_EQ(r.med_ori, 3.0);
  EXPECT_NO_THROW(check_consistency(r));
  EXPECT_EQ(report_from_json(report_to_json(r)), r);
  EvalReport bad = r;
  bad.med_pos = 0.31;
  EXPECT_THROW(check_consistency(bad), DataError);
  EXPECT_THROW(make_report("s", "test", "lstm", "", {}), UsageError);

  const std::vector<EvalReport> one{r};
  const std::string csv = summary_csv(one);
  EXPECT_EQ(csv, "scene,n,med_pos_m,med_ori_deg,config_hash\ns,3,0.3,3,00ff\n");
  const std::string js = summary_json(one);
  EXPECT_NE(js.find("\"med_pos_m\": 0.3"), std::string::npos);
  EXPECT_NE(js.find("\"med_ori_deg\": 3.0"), std::string::npos);
}

TEST(ReportTest, HistogramCountsSumToSamples) {
  std::vector<double> v(37);
  std::iota(v.begin(), v.end(), 0.0);
  const Histogram h = histogram(v, 8);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), 37u);
  EXPECT_EQ(h.edges.size(), 9u);
  EvalReport r = make_report("s", "test", "lstm", "", {{"a", 1.0, 1.0}, {"b", 2.0, 2.0}});
  EXPECT_NE(error_histogram_svg(r).find("<svg"), std::string::npos);
}

TEST(EvalTest, GroundTruthAsPredictionsGivesZeroMedians) {
  const SynthScene s = synth_scene(SynthSpec{});
  std::vector<Pose> preds;
  for (const auto& x : s.test.samples) preds.push_back(x.pose);
  const EvalReport r = evaluate_poses(s.test, preds, "synth", "test", "");
  EXPECT_EQ(r.med_pos, 0.0);
  EXPECT_EQ(r.med_ori, 0.0);
}

TEST(HarnessTest, TrainWritesArtifactsDeterministically) {
  const fs::path a = scratch_dir("train_a"), b = scratch_dir("train_b");
  const TrainArtifacts ra = cmd_train(small_config(a), true);
  const TrainArtifacts rb = cmd_train(small_config(b), true);
  for (const char* f : {"config.json", "train_log.csv", "final.ckpt", "best.ckpt", "report.json"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
  }
  EXPECT_EQ(ra.final_checkpoint_hash, rb.final_checkpoint_hash);
  EXPECT_EQ(slurp(a / "final.ckpt"), slurp(b / "final.ckpt"));
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  EXPECT_EQ(slurp(a / "train_log.csv").substr(0, 18), "step,objective,lr\n");
  const Checkpoint ck = load_checkpoint(a / "final.ckpt");
  EXPECT_EQ(ck.step, 6u);
  EXPECT_EQ(hex64(ck.config_hash), ra.report.config_hash);
}

TEST(HarnessTest, EvalReproducesTrainReportAndChecksFeatureWidth) {
  const fs::path dir = scratch_dir("eval");
  const TrainArtifacts art = cmd_train(small_config(dir), true);
  const EvalReport again = cmd_eval(art.final_checkpoint, "test", std::nullopt, dir / "again.json");
  EXPECT_EQ(again, art.report);
  EXPECT_EQ(slurp(dir / "again.json"), slurp(art.report_json));
  EXPECT_EQ(cmd_eval(art.final_checkpoint, "train").count(), 20u);
  DatasetSpec wide = small_config(dir).data;
  wide.synth.feature_dim = 9;
  EXPECT_THROW(cmd_eval(art.final_checkpoint, "test", wide), ConfigError);
  EXPECT_THROW(cmd_eval(art.final_checkpoint, "val"), UsageError);
}

TEST(HarnessTest, FcHeadTrainsInTheSameLoop) {
  RunConfig c = small_config(scratch_dir("fc"));
  c.model.head = HeadKind::fc;
  const TrainArtifacts art = cmd_train(c, true);
  EXPECT_EQ(art.report.head, "fc");
  EXPECT_EQ(art.report.count(), 10u);
}

TEST(HarnessTest, IdenticalHeadsGiveZeroImprovement) {
  const TrainArtifacts a = cmd_train(small_config(scratch_dir("same_a")), true);
  const TrainArtifacts b = cmd_train(small_config(scratch_dir("same_b")), true);
  EXPECT_EQ(improvement_percent(a.report.med_pos, b.report.med_pos), 0);
  EXPECT_EQ(improvement_percent(a.report.med_ori, b.report.med_ori), 0);
}

TEST(HarnessTest, AblationDiffersOnlyInHead) {
  const fs::path dir = scratch_dir("ablate");
  RunConfig c = small_config(dir);
  c.iterations = 2;
  const AblationResult r = cmd_ablate(c, {false, {3, 4}, true, true});
  EXPECT_EQ(r.config_diff, std::vector<std::string>{"model.head"});
  ASSERT_EQ(r.runs.size(), 2u);
  EXPECT_EQ(r.runs[0].lstm.head, "lstm");
  EXPECT_EQ(r.runs[0].fc.head, "fc");
  EXPECT_TRUE(fs::exists(dir / "ablation.json"));
  EXPECT_TRUE(fs::exists(dir / "seed_4" / "fc" / "final.ckpt"));
  const AblationResult m = cmd_ablate(c, {true, {}, true, true});
  EXPECT_EQ(m.config_diff, (std::vector<std::string>{"model.embed_dim", "model.head"}));
}

TEST(HarnessTest, ReportCommandIsBitStable) {
  const fs::path dir = scratch_dir("report");
  const TrainArtifacts art = cmd_train(small_config(dir), true);
  const std::vector<fs::path> files{art.report_json};
  const ReportOutputs a = cmd_report(files, dir / "sum_a", true);
  const ReportOutputs b = cmd_report(files, dir / "sum_b", true);
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.json, b.json);
  EXPECT_EQ(slurp(dir / "sum_a.csv"), a.csv);
  EXPECT_TRUE(fs::exists(dir / "sum_a_0.svg"));
  EXPECT_EQ(std::count(a.csv.begin(), a.csv.end(), '\n'), 2);
}

TEST(HarnessTest, SynthGenOutputTrainsLikeTheInMemoryScene) {
  const fs::path dir = scratch_dir("synth_gen");
  RunConfig c = small_config(dir / "direct");
  cmd_synth_gen(c.data.synth, dir / "data");
  RunConfig f = c;
  f.data.kind = DatasetKind::features;
  f.data.train_manifest = (dir / "data" / "train.txt").string();
  f.data.test_manifest = (dir / "data" / "test.txt").string();
  f.data.feature_store = (dir / "data" / "features.prfs").string();
  f.output_dir = (dir / "stored").string();
  const TrainArtifacts a = cmd_train(c, true);
  const TrainArtifacts b = cmd_train(f, true);
  EXPECT_EQ(load_checkpoint(a.final_checkpoint).params, load_checkpoint(b.final_checkpoint).params);
  EXPECT_EQ(a.report.rows, b.report.rows);
  EXPECT_NO_THROW(load_run_config(dir / "data" / "config.json"));
}

}  // namespace
}  // namespace posereg
