// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/harness.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <json.hpp>

#include "posereg/checkpoint.hpp"
#include "posereg/errors.hpp"

namespace posereg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

Checkpoint make_checkpoint(const RunConfig& config, const PoseModel& model, std::size_t step) {
  Checkpoint c;
  c.config_json = to_json(config, false);
  c.config_hash = fnv1a64(c.config_json);
  c.step = step;
  c.params = model.params();
  return c;
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else {
    out[prefix] = j;
  }
}

}  // namespace

TrainArtifacts cmd_train(const RunConfig& config, bool quiet) {
  config.validate();
  const Dataset data = load_dataset(config.data);
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  write_text(dir / "config.json", to_json(config));

  const std::size_t every = std::max<std::size_t>(1, config.log_every);
  TrainObserver observer;
  if (!quiet) {
    observer = [&](const TrainLogRow& row) {
      if (row.step == 1 || row.step % every == 0 || row.step == config.iterations) {
        fmt::print(stderr, "[train] step {:>6}  objective {:.6f}  lr {}\n", row.step,
                   row.objective, row.lr);
      }
    };
  }
  TrainOutcome outcome = train_model(config, data, observer);

  TrainArtifacts art;
  art.log_csv = dir / "train_log.csv";
  std::string log = "step,objective,lr\n";
  for (const auto& row : outcome.log) log += fmt::format("{},{},{}\n", row.step, row.objective, row.lr);
  write_text(art.log_csv, log);
  if (!outcome.evals.empty()) {
    std::string evals = "step,med_pos_m,med_ori_deg\n";
    for (const auto& e : outcome.evals) evals += fmt::format("{},{},{}\n", e.step, e.med_pos, e.med_ori);
    write_text(dir / "eval_log.csv", evals);
  }

  art.final_checkpoint = dir / "final.ckpt";
  art.best_checkpoint = dir / "best.ckpt";
  save_checkpoint(art.final_checkpoint,
                  make_checkpoint(config, outcome.final_model, config.iterations));
  save_checkpoint(art.best_checkpoint,
                  make_checkpoint(config, outcome.best_model, outcome.best_step));
  art.final_checkpoint_hash = file_hash(art.final_checkpoint);

  art.report = evaluate_model(outcome.final_model, data.test, "test", config, data);
  art.report_json = dir / "report.json";
  save_report(art.report_json, art.report);
  art.initial_objective = outcome.log.front().objective;
  art.final_objective = outcome.log.back().objective;
  if (!quiet) {
    fmt::print(stderr, "[train] done: test median {:.3f} m, {:.2f} deg -> {}\n",
               art.report.med_pos, art.report.med_ori, dir.string());
  }
  return art;
}

EvalReport cmd_eval(const fs::path& checkpoint, const std::string& split,
                    const std::optional<DatasetSpec>& data_override, const fs::path& output) {
  if (split != "train" && split != "test") {
    throw UsageError("eval: split must be 'train' or 'test', got '" + split + "'");
  }
  Checkpoint ckpt = load_checkpoint(checkpoint);
  RunConfig config = run_config_from_json(ckpt.config_json);
  if (data_override) config.data = *data_override;
  const PoseModel model = PoseModel::from_params(config.model, std::move(ckpt.params));
  const Dataset data = load_dataset(config.data);
  const DataSplit& s = split == "train" ? data.train : data.test;
  EvalReport report = evaluate_model(model, s, split, config, data);
  // The report carries the hash of the checkpoint's run, not of the override.
  report.config_hash = hex64(ckpt.config_hash);
  if (!output.empty()) save_report(output, report);
  return report;
}

EvalReport evaluate_poses(const DataSplit& split, std::span<const Pose> predicted,
                          const std::string& scene, const std::string& split_name,
                          const std::string& config_hash) {
  if (predicted.size() != split.samples.size()) {
    throw UsageError("evaluate_poses: prediction count does not match the split");
  }
  std::vector<EvalRow> rows;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const Sample& s = split.samples[i];
    const ErrorPair e = pose_error(s.pose, predicted[i].p, predicted[i].q);
    rows.push_back({s.id, e.pos_err, e.ori_err});
  }
  return make_report(scene, split_name, "given", config_hash, std::move(rows));
}

std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b) {
  std::map<std::string, json> fa, fb;
  flatten(json::parse(to_json(a, false)), "", fa);
  flatten(json::parse(to_json(b, false)), "", fb);
  std::vector<std::string> diff;
  for (const auto& [key, value] : fa) {
    auto it = fb.find(key);
    if (it == fb.end() || it->second != value) diff.push_back(key);
  }
  for (const auto& [key, value] : fb) {
    if (!fa.count(key)) diff.push_back(key);
  }
  return diff;
}

AblationResult cmd_ablate(const RunConfig& config, const AblationOptions& options) {
  config.validate();
  std::vector<std::uint64_t> seeds = options.seeds;
  if (seeds.empty()) seeds.push_back(config.seed);

  AblationResult result;
  json runs = json::array();
  std::string csv = "seed,lstm_med_pos_m,lstm_med_ori_deg,fc_med_pos_m,fc_med_ori_deg,pos_improvement_pct,ori_improvement_pct\n";
  for (std::uint64_t seed : seeds) {
    RunConfig lstm = config;
    lstm.seed = seed;
    lstm.optim.seed = seed;
    if (options.vary_scene && lstm.data.kind == DatasetKind::synth) lstm.data.synth.seed = seed;
    lstm.model.head = HeadKind::lstm;
    lstm.model.embed_dim = kGridSize;
    RunConfig fc = lstm;
    fc.model.head = HeadKind::fc;
    if (options.parameter_matched) fc.model.embed_dim = parameter_matched_embed_dim(lstm.model);

    const fs::path base = fs::path(config.output_dir) / fmt::format("seed_{}", seed);
    lstm.output_dir = (base / "lstm").string();
    fc.output_dir = (base / "fc").string();
    if (result.config_diff.empty()) result.config_diff = config_diff(lstm, fc);

    AblationRun run;
    run.seed = seed;
    run.lstm = cmd_train(lstm, options.quiet).report;
    run.fc = cmd_train(fc, options.quiet).report;
    run.pos_improvement = improvement_percent(run.fc.med_pos, run.lstm.med_pos);
    run.ori_improvement = improvement_percent(run.fc.med_ori, run.lstm.med_ori);
    if (run.lstm.med_pos <= run.fc.med_pos) ++result.lstm_wins;

    runs.push_back({{"seed", seed},
                    {"lstm", {{"med_pos_m", run.lstm.med_pos}, {"med_ori_deg", run.lstm.med_ori},
                              {"config_hash", run.lstm.config_hash}}},
                    {"fc", {{"med_pos_m", run.fc.med_pos}, {"med_ori_deg", run.fc.med_ori},
                            {"config_hash", run.fc.config_hash}}},
                    {"improvement_pct", {run.pos_improvement, run.ori_improvement}}});
    csv += fmt::format("{},{},{},{},{},{},{}\n", seed, run.lstm.med_pos, run.lstm.med_ori,
                       run.fc.med_pos, run.fc.med_ori, run.pos_improvement, run.ori_improvement);
    fmt::print(stderr,
               "[ablate] seed {}: lstm {:.3f} m / {:.2f} deg, fc {:.3f} m / {:.2f} deg ({}%, {}%)\n",
               seed, run.lstm.med_pos, run.lstm.med_ori, run.fc.med_pos, run.fc.med_ori,
               run.pos_improvement, run.ori_improvement);
    result.runs.push_back(std::move(run));
  }

  const json doc = {{"parameter_matched", options.parameter_matched},
                    {"config_diff", result.config_diff},
                    {"lstm_wins", result.lstm_wins},
                    {"seeds", seeds.size()},
                    {"runs", runs}};
  fs::create_directories(config.output_dir);
  write_text(fs::path(config.output_dir) / "ablation.json", doc.dump(2) + "\n");
  write_text(fs::path(config.output_dir) / "ablation.csv", csv);
  return result;
}

ReportOutputs cmd_report(std::span<const fs::path> paths, const fs::path& out_prefix,
                         bool with_svg) {
  if (paths.empty()) throw UsageError("report: need at least one report file");
  std::vector<EvalReport> reports;
  for (const auto& p : paths) {
    reports.push_back(load_report(p));
    check_consistency(reports.back());
  }
  ReportOutputs out{summary_csv(reports), summary_json(reports), {}};
  if (out_prefix.has_parent_path()) fs::create_directories(out_prefix.parent_path());
  write_text(out_prefix.string() + ".csv", out.csv);
  write_text(out_prefix.string() + ".json", out.json);
  if (with_svg) {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      out.svgs.push_back(error_histogram_svg(reports[i]));
      write_text(fmt::format("{}_{}.svg", out_prefix.string(), i), out.svgs.back());
    }
  }
  return out;
}

void cmd_synth_gen(const SynthSpec& spec, const fs::path& out_dir) {
  const SynthScene scene = synth_scene(spec);
  fs::create_directories(out_dir);
  FeatureStore store(spec.feature_dim);
  auto write_split = [&](const DataSplit& split, const char* name) {
    DatasetManifest m;
    m.split = name;
    m.frame_note = fmt::format("synthetic box [-{0}, {0}]^3 m, seed {1}", spec.extent_m / 2,
                               spec.seed);
    for (const auto& s : split.samples) {
      m.records.push_back({s.id, s.pose});
      store.add(s.id, s.feature());
    }
    save_manifest(out_dir / (std::string(name) + ".txt"), m);
  };
  write_split(scene.train, "train");
  write_split(scene.test, "test");
  store.save(out_dir / "features.prfs");

  RunConfig cfg;
  cfg.data.kind = DatasetKind::features;
  cfg.data.scene = "synth";
  cfg.data.train_manifest = (out_dir / "train.txt").string();
  cfg.data.test_manifest = (out_dir / "test.txt").string();
  cfg.data.feature_store = (out_dir / "features.prfs").string();
  cfg.model.feature_dim = spec.feature_dim;
  cfg.seed = spec.seed;
  cfg.optim.seed = spec.seed;
  write_text(out_dir / "config.json", to_json(cfg));
}

}  // namespace posereg
