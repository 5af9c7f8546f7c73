// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "posereg/config.hpp"
#include "posereg/errors.hpp"

namespace posereg {

namespace {

constexpr std::size_t kEvalChunk = 64;

// Stream tags for derive_seed.
constexpr std::uint64_t kInitStream = 10;
constexpr std::uint64_t kShuffleStream = 11;
constexpr std::uint64_t kDropoutStream = 12;
constexpr std::uint64_t kCropStream = 13;

}  // namespace

PoseModel initial_model(const RunConfig& config) {
  return PoseModel::create(config.model, derive_seed(config.seed, kInitStream));
}

Dataset load_dataset(const DatasetSpec& spec) {
  Dataset data;
  data.scene = spec.scene;
  switch (spec.kind) {
    case DatasetKind::synth: {
      SynthScene scene = synth_scene(spec.synth);
      data.train = std::move(scene.train);
      data.test = std::move(scene.test);
      break;
    }
    case DatasetKind::features: {
      const FeatureStore store = FeatureStore::load(spec.feature_store);
      const ManifestOptions opts{false, ""};
      data.train = attach_features(load_manifest(spec.train_manifest, opts), store);
      data.test = attach_features(load_manifest(spec.test_manifest, opts), store);
      break;
    }
    case DatasetKind::images: {
      data.train = load_images(load_manifest(spec.train_manifest), spec.base_size);
      data.test = load_images(load_manifest(spec.test_manifest), spec.base_size);
      std::vector<Image> images;
      images.reserve(data.train.samples.size());
      for (const auto& s : data.train.samples) images.push_back(s.image());
      data.mean = compute_mean_image(images);
      break;
    }
  }
  if (data.train.samples.empty() || data.test.samples.empty()) {
    throw DataError("dataset '" + spec.scene + "' has an empty split");
  }
  return data;
}

Tensor batch_input(const DataSplit& split, std::span<const std::size_t> indices,
                   const DatasetSpec& spec, const MeanImage* mean, Mode mode, Rng& rng) {
  if (indices.empty()) throw UsageError("batch_input: empty batch");
  const Sample& first = split.samples.at(indices[0]);
  if (!first.has_image()) {
    const std::size_t dim = first.feature().numel();
    Tensor out({indices.size(), dim});
    for (std::size_t b = 0; b < indices.size(); ++b) {
      const Sample& s = split.samples.at(indices[b]);
      if (s.has_image() || s.feature().numel() != dim) {
        throw DataError("batch_input: inconsistent payload for '" + s.id + "'");
      }
      std::copy(s.feature().data().begin(), s.feature().data().end(),
                out.data().begin() + static_cast<std::ptrdiff_t>(b * dim));
    }
    return out;
  }
  if (!mean) throw UsageError("batch_input: image batches need a mean image");
  const std::size_t crop = spec.crop;
  const std::size_t ch = first.image().channels;
  const std::size_t per = ch * crop * crop;
  Tensor out({indices.size(), ch, crop, crop});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Sample& s = split.samples.at(indices[b]);
    if (!s.has_image()) throw DataError("batch_input: inconsistent payload for '" + s.id + "'");
    const Tensor chw = hwc_to_chw(preprocess(s.image(), *mean, mode, crop, rng));
    std::copy(chw.data().begin(), chw.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(b * per));
  }
  return out;
}

std::vector<Pose> batch_poses(const DataSplit& split, std::span<const std::size_t> indices) {
  std::vector<Pose> poses;
  poses.reserve(indices.size());
  for (std::size_t i : indices) poses.push_back(split.samples.at(i).pose);
  return poses;
}

double batch_objective(const PoseModel& model, const Tensor& input,
                       std::span<const Pose> truth, const OptimConfig& cfg, Mode mode,
                       Rng& rng, std::vector<Tensor>* grads) {
  Tape tape;
  const std::vector<Var> bound = model.params().bind(tape);
  const ForwardOutput out = model.forward(tape.constant(input), bound, mode, rng);
  Var losses = pose_loss(out.main.p_hat, out.main.q_raw, truth, cfg.beta_loss);
  std::vector<Var> aux;
  for (const auto& a : out.aux) aux.push_back(pose_loss(a.p_hat, a.q_raw, truth, cfg.beta_loss));
  Var total = total_objective(losses, aux, model.params(), bound, cfg.lambda, cfg.gamma);
  const double value = total.value().item();
  if (!std::isfinite(value)) throw NumericError("training objective is not finite");
  if (grads) {
    tape.backward(total);
    *grads = ParamSet::gradients(tape, bound);
  }
  return value;
}

double train_step(const Dataset& data, std::span<const std::size_t> batch, PoseModel& model,
                  AdamState& state, const RunConfig& config, Rng& dropout_rng,
                  Rng& crop_rng) {
  if (batch.empty()) throw UsageError("train_step: empty batch");
  const Tensor input = batch_input(data.train, batch, config.data,
                                   data.mean ? &*data.mean : nullptr, Mode::train, crop_rng);
  const std::vector<Pose> truth = batch_poses(data.train, batch);
  std::vector<Tensor> grads;
  const double objective =
      batch_objective(model, input, truth, config.optim, Mode::train, dropout_rng, &grads);
  adam_step(model.params(), grads, state, config.optim);
  return objective;
}

TrainOutcome train_model(const RunConfig& config, const Dataset& data,
                         const TrainObserver& observer) {
  config.validate();
  PoseModel model = initial_model(config);
  AdamState state = AdamState::init(model.params());
  BatchStream stream(data.train.samples.size(), config.optim.batch_size,
                     derive_seed(config.seed, kShuffleStream));
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));
  Rng crop_rng(derive_seed(config.seed, kCropStream));

  TrainOutcome outcome{model, model, 0, {}, {}};
  const std::size_t window = std::max<std::size_t>(1, config.log_every);
  double window_sum = 0.0;
  double best_window = std::numeric_limits<double>::infinity();

  for (std::size_t step = 1; step <= config.iterations; ++step) {
    const std::vector<std::size_t>& batch = stream.next();
    const double objective =
        train_step(data, batch, model, state, config, dropout_rng, crop_rng);
    TrainLogRow row{step, objective, config.optim.lr};
    outcome.log.push_back(row);
    if (observer) observer(row);

    window_sum += objective;
    if (step % window == 0 || step == config.iterations) {
      const std::size_t len = step % window == 0 ? window : step % window;
      const double mean_obj = window_sum / static_cast<double>(len);
      if (mean_obj < best_window) {
        best_window = mean_obj;
        outcome.best_model = model;
        outcome.best_step = step;
      }
      window_sum = 0.0;
    }
    if (config.eval_every > 0 && step % config.eval_every == 0) {
      const EvalReport r = evaluate_model(model, data.test, "test", config, data);
      outcome.evals.push_back({step, r.med_pos, r.med_ori});
    }
  }
  outcome.final_model = std::move(model);
  return outcome;
}

EvalReport evaluate_model(const PoseModel& model, const DataSplit& split,
                          const std::string& split_name, const RunConfig& config,
                          const Dataset& data) {
  if (split.samples.empty()) throw UsageError("evaluate_model: empty split");
  const Sample& first = split.samples.front();
  if (!first.has_image() && first.feature().numel() != model.spec().feature_dim) {
    throw ConfigError("evaluate_model: split features have dimension " +
                      std::to_string(first.feature().numel()) + ", model expects " +
                      std::to_string(model.spec().feature_dim));
  }
  Rng unused(0);
  std::vector<EvalRow> rows;
  rows.reserve(split.samples.size());
  std::vector<std::size_t> idx(split.samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t start = 0; start < idx.size(); start += kEvalChunk) {
    const std::size_t end = std::min(idx.size(), start + kEvalChunk);
    const std::span<const std::size_t> chunk(idx.data() + start, end - start);
    const Tensor input = batch_input(split, chunk, config.data,
                                     data.mean ? &*data.mean : nullptr, Mode::eval, unused);
    const auto preds = model.predict(input);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const Sample& s = split.samples[chunk[k]];
      const ErrorPair e = pose_error(s.pose, preds[k].p, preds[k].q_raw);
      rows.push_back({s.id, e.pos_err, e.ori_err});
    }
  }
  return make_report(data.scene, split_name, std::string(to_string(model.spec().head)),
                     hex64(config_hash(config)), std::move(rows));
}

}  // namespace posereg
