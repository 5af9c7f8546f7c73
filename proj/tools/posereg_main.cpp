// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

// posereg command-line driver: train, eval, ablate, report, synth-gen.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "posereg/errors.hpp"
#include "posereg/harness.hpp"

namespace {

using namespace posereg;

template <typename T>
void apply(const std::optional<T>& flag, T& field) {
  if (flag) field = *flag;
}

// Every RunConfig field as an optional override; values left unset keep
// whatever the config file (or the built-in default) says.
struct ConfigFlags {
  std::string config_file;
  std::optional<std::string> data_kind, scene, train_manifest, test_manifest, feature_store;
  std::optional<std::size_t> base_size, crop;
  std::optional<std::uint64_t> synth_seed;
  std::optional<std::size_t> n_train, n_test, synth_feature_dim;
  std::optional<double> extent, bandwidth, noise;
  std::optional<std::string> head, backbone;
  std::optional<std::size_t> feature_dim, hidden, embed_dim, image_channels;
  std::optional<double> position_scale;
  std::optional<double> lr, beta1, beta2, eps, lambda, gamma, dropout, beta_loss;
  std::optional<std::size_t> batch_size;
  std::optional<std::string> beta_preset;
  std::optional<std::size_t> iterations, eval_every, log_every;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App& app) {
    app.add_option("--config", config_file, "JSON run config")->check(CLI::ExistingFile);
    app.add_option("--data-kind", data_kind, "synth | features | images");
    app.add_option("--scene", scene, "Scene label used in reports");
    app.add_option("--train-manifest", train_manifest);
    app.add_option("--test-manifest", test_manifest);
    app.add_option("--feature-store", feature_store);
    app.add_option("--base-size", base_size, "Shorter-side resize before cropping (0 = none)");
    app.add_option("--crop", crop);
    app.add_option("--synth-seed", synth_seed);
    app.add_option("--n-train", n_train);
    app.add_option("--n-test", n_test);
    app.add_option("--extent", extent, "Synthetic scene box side (m)");
    app.add_option("--synth-feature-dim", synth_feature_dim);
    app.add_option("--bandwidth", bandwidth);
    app.add_option("--noise", noise);
    app.add_option("--head", head, "lstm | fc");
    app.add_option("--backbone", backbone, "features | tiny-cnn");
    app.add_option("--feature-dim", feature_dim);
    app.add_option("--hidden", hidden, "LSTM hidden size H");
    app.add_option("--embed-dim", embed_dim);
    app.add_option("--image-channels", image_channels);
    app.add_option("--position-scale", position_scale, "Fixed multiplier on position outputs (m)");
    app.add_option("--lr", lr);
    app.add_option("--beta1", beta1);
    app.add_option("--beta2", beta2);
    app.add_option("--eps", eps);
    app.add_option("--lambda", lambda, "L2 weight on non-bias parameters");
    app.add_option("--gamma", gamma, "Auxiliary loss weight");
    app.add_option("--dropout", dropout);
    app.add_option("--batch-size", batch_size);
    app.add_option("--beta-loss", beta_loss, "Orientation weight in the pose loss");
    app.add_option("--beta-preset", beta_preset,
                   "indoor-min | indoor-max | outdoor-min | outdoor-max | tum-lsi");
    app.add_option("--iterations", iterations);
    app.add_option("--eval-every", eval_every);
    app.add_option("--log-every", log_every);
    app.add_option("--output-dir", output_dir);
    app.add_option("--seed", seed);
  }

  RunConfig resolve() const {
    RunConfig c = config_file.empty() ? RunConfig{} : load_run_config(config_file);
    if (data_kind) c.data.kind = parse_dataset_kind(*data_kind);
    apply(scene, c.data.scene);
    apply(train_manifest, c.data.train_manifest);
    apply(test_manifest, c.data.test_manifest);
    apply(feature_store, c.data.feature_store);
    apply(base_size, c.data.base_size);
    apply(crop, c.data.crop);
    apply(synth_seed, c.data.synth.seed);
    apply(n_train, c.data.synth.n_train);
    apply(n_test, c.data.synth.n_test);
    apply(extent, c.data.synth.extent_m);
    apply(synth_feature_dim, c.data.synth.feature_dim);
    apply(bandwidth, c.data.synth.bandwidth);
    apply(noise, c.data.synth.noise);
    if (head) c.model.head = parse_head_kind(*head);
    if (backbone) c.model.backbone = parse_backbone_kind(*backbone);
    apply(feature_dim, c.model.feature_dim);
    apply(hidden, c.model.hidden);
    apply(embed_dim, c.model.embed_dim);
    apply(image_channels, c.model.image_channels);
    apply(position_scale, c.model.position_scale);
    apply(lr, c.optim.lr);
    apply(beta1, c.optim.beta1);
    apply(beta2, c.optim.beta2);
    apply(eps, c.optim.eps);
    apply(lambda, c.optim.lambda);
    apply(gamma, c.optim.gamma);
    apply(dropout, c.optim.dropout);
    apply(batch_size, c.optim.batch_size);
    if (beta_preset) {
      const auto b = posereg::beta_preset(*beta_preset);
      if (!b) throw UsageError("unknown --beta-preset '" + *beta_preset + "'");
      c.optim.beta_loss = *b;
    }
    apply(beta_loss, c.optim.beta_loss);
    apply(iterations, c.iterations);
    apply(eval_every, c.eval_every);
    apply(log_every, c.log_every);
    apply(output_dir, c.output_dir);
    apply(seed, c.seed);
    // Synthetic scenes dictate the feature width.
    if (c.data.kind == DatasetKind::synth) c.model.feature_dim = c.data.synth.feature_dim;
    c.model.dropout = c.optim.dropout;
    c.optim.seed = c.seed;
    c.validate();
    return c;
  }
};

// Training allocates and frees the same large gradient buffers every step.
// Keeping them on the heap instead of fresh mmap'd pages avoids a page-fault
// storm that otherwise costs about a third of the run time.
void keep_large_blocks_on_heap() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace

int main(int argc, char** argv) {
  keep_large_blocks_on_heap();
  CLI::App app{"posereg: camera pose regression with a spatial LSTM head"};
  app.require_subcommand(1);

  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log errors");

  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "Train a model and write checkpoints + report");
  train_flags.add_to(*train);

  std::string ckpt, split = "test", eval_out;
  ConfigFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  eval->add_option("checkpoint", ckpt)->required()->check(CLI::ExistingFile);
  eval->add_option("--split", split, "train | test")->check(CLI::IsMember({"train", "test"}));
  eval->add_option("-o,--out", eval_out, "Report JSON path");
  eval->add_option("--data-config", eval_flags.config_file,
                   "Take the dataset section from this config instead of the checkpoint's")
      ->check(CLI::ExistingFile);

  ConfigFlags ablate_flags;
  AblationOptions ablate_opts;
  std::size_t n_seeds = 0;
  auto* ablate = app.add_subcommand("ablate", "LSTM head vs FC baseline under a matched budget");
  ablate_flags.add_to(*ablate);
  ablate->add_flag("--parameter-matched", ablate_opts.parameter_matched,
                   "Shrink the FC embedding to the LSTM model's parameter count");
  ablate->add_option("--seeds", n_seeds, "Run seeds seed..seed+N-1 (default: just seed)");
  ablate->add_flag("!--fixed-scene", ablate_opts.vary_scene,
                   "Keep the synthetic scene seed fixed across runs");

  std::vector<std::filesystem::path> report_files;
  std::string report_prefix = "summary";
  bool svg = false;
  auto* report = app.add_subcommand("report", "Summarize evaluation reports as CSV/JSON/SVG");
  report->add_option("reports", report_files)->required()->check(CLI::ExistingFile);
  report->add_option("-o,--out", report_prefix, "Output path prefix");
  report->add_flag("--svg", svg, "Also write an error histogram per report");

  SynthSpec synth;
  std::string synth_out = "synth";
  auto* gen = app.add_subcommand("synth-gen", "Write a synthetic scene as a features dataset");
  gen->add_option("--seed", synth.seed);
  gen->add_option("--n-train", synth.n_train);
  gen->add_option("--n-test", synth.n_test);
  gen->add_option("--extent", synth.extent_m);
  gen->add_option("--feature-dim", synth.feature_dim);
  gen->add_option("--bandwidth", synth.bandwidth);
  gen->add_option("--noise", synth.noise);
  gen->add_option("-o,--out", synth_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const TrainArtifacts art = cmd_train(train_flags.resolve(), quiet);
      if (!quiet) fmt::print(stderr, "wrote {}\n", art.report_json.string());
    } else if (eval->parsed()) {
      std::optional<DatasetSpec> data;
      if (!eval_flags.config_file.empty()) data = load_run_config(eval_flags.config_file).data;
      const EvalReport r = cmd_eval(ckpt, split, data, eval_out);
      if (!quiet) {
        fmt::print(stderr, "[eval] {} {}: n={} median {:.4f} m, {:.3f} deg\n", r.scene, r.split,
                   r.rows.size(), r.med_pos, r.med_ori);
      }
    } else if (ablate->parsed()) {
      const RunConfig cfg = ablate_flags.resolve();
      for (std::size_t i = 0; i < n_seeds; ++i) ablate_opts.seeds.push_back(cfg.seed + i);
      ablate_opts.quiet = quiet;
      const AblationResult res = cmd_ablate(cfg, ablate_opts);
      if (!quiet) {
        fmt::print(stderr, "[ablate] lstm <= fc in {}/{} seeds; heads differ in: {}\n",
                   res.lstm_wins, res.runs.size(), fmt::join(res.config_diff, ", "));
      }
    } else if (report->parsed()) {
      cmd_report(report_files, report_prefix, svg);
    } else if (gen->parsed()) {
      synth.validate();
      cmd_synth_gen(synth, synth_out);
    }
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
