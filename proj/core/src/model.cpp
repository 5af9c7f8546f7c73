// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/model.hpp"

#include <cmath>
#include <string>

#include "posereg/conv.hpp"
#include "posereg/errors.hpp"

namespace posereg {

namespace {

enum class Init { glorot, zero, forget_one, quat_identity };

struct ParamDecl {
  std::string name;
  Shape shape;
  bool is_bias;
  Init init;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
};

std::size_t cnn_flat_size(const ModelSpec& s) {
  const std::size_t s2 = conv_out_extent(s.cnn.input_size, 3, {2, 1});
  const std::size_t s3 = conv_out_extent(s2, 3, {2, 1});
  return s.cnn.channels3 * s3 * s3;
}

void add_fc(std::vector<ParamDecl>& out, const std::string& prefix, std::size_t in,
            std::size_t outputs, Init bias_init = Init::zero) {
  out.push_back({prefix + ".w", {outputs, in}, false, Init::glorot, in, outputs});
  out.push_back({prefix + ".b", {outputs}, true, bias_init});
}

void add_conv(std::vector<ParamDecl>& out, const std::string& prefix, std::size_t in,
              std::size_t outputs) {
  out.push_back({prefix + ".w", {outputs, in, 3, 3}, false, Init::glorot, in * 9,
                 outputs * 9});
  out.push_back({prefix + ".b", {outputs}, true, Init::zero});
}

std::vector<ParamDecl> layout(const ModelSpec& s) {
  std::vector<ParamDecl> decls;
  if (s.backbone == BackboneKind::tiny_cnn) {
    add_conv(decls, "cnn.conv1", s.image_channels, s.cnn.channels1);
    add_conv(decls, "cnn.conv2", s.cnn.channels1, s.cnn.channels2);
    add_conv(decls, "cnn.conv3", s.cnn.channels2, s.cnn.channels3);
    add_fc(decls, "cnn.fc", cnn_flat_size(s), s.feature_dim);
    if (s.cnn.aux_head) {
      add_fc(decls, "cnn.aux.pos", s.cnn.channels2, 3);
      add_fc(decls, "cnn.aux.quat", s.cnn.channels2, 4, Init::quat_identity);
    }
  }
  add_fc(decls, "embed", s.feature_dim, s.embed_dim);
  std::size_t regress_in = s.embed_dim;
  if (s.head == HeadKind::lstm) {
    const std::size_t h = s.hidden;
    for (Direction d : kSweepOrder) {
      const std::string p = "lstm." + std::string(to_string(d));
      const std::size_t in = sweep_input_size(d);
      decls.push_back({p + ".w", {4 * h, in}, false, Init::glorot, in, h});
      decls.push_back({p + ".u", {4 * h, h}, false, Init::glorot, h, h});
      decls.push_back({p + ".b", {4 * h}, true, Init::forget_one});
    }
    regress_in = 4 * h;
  }
  add_fc(decls, "pos", regress_in, 3);
  add_fc(decls, "quat", regress_in, 4, Init::quat_identity);
  return decls;
}

Tensor initial_value(const ParamDecl& d, Rng& rng) {
  Tensor t(d.shape);
  switch (d.init) {
    case Init::zero:
      break;
    case Init::glorot: {
      const double a = std::sqrt(6.0 / static_cast<double>(d.fan_in + d.fan_out));
      std::uniform_real_distribution<double> u(-a, a);
      for (double& v : t.data()) v = u(rng);
      break;
    }
    case Init::forget_one: {
      const std::size_t h = t.numel() / 4;
      for (std::size_t j = h; j < 2 * h; ++j) t[j] = 1.0;
      break;
    }
    case Init::quat_identity:
      t[0] = 1.0;
      break;
  }
  return t;
}

std::size_t index(const ParamSet& p, const char* name) { return p.index_of(name); }

}  // namespace

std::string_view to_string(HeadKind k) { return k == HeadKind::lstm ? "lstm" : "fc"; }

std::string_view to_string(BackboneKind k) {
  return k == BackboneKind::features ? "features" : "tiny-cnn";
}

HeadKind parse_head_kind(std::string_view s) {
  if (s == "lstm") return HeadKind::lstm;
  if (s == "fc") return HeadKind::fc;
  throw ConfigError("unknown head '" + std::string(s) + "' (expected lstm|fc)");
}

BackboneKind parse_backbone_kind(std::string_view s) {
  if (s == "features") return BackboneKind::features;
  if (s == "tiny-cnn") return BackboneKind::tiny_cnn;
  throw ConfigError("unknown backbone '" + std::string(s) +
                    "' (expected features|tiny-cnn)");
}

void ModelSpec::validate() const {
  if (feature_dim == 0 || hidden == 0 || embed_dim == 0) {
    throw ConfigError("model: feature_dim, hidden and embed_dim must be positive");
  }
  if (head == HeadKind::lstm && embed_dim != kGridSize) {
    throw ConfigError("model: the LSTM head folds a " + std::to_string(kGridSize) +
                      "-d embedding, embed_dim is " + std::to_string(embed_dim));
  }
  if (!(position_scale > 0.0) || !std::isfinite(position_scale)) {
    throw ConfigError("model: position_scale must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("model: dropout must be in [0,1)");
  }
  if (backbone == BackboneKind::tiny_cnn &&
      (cnn.input_size < 4 || cnn.channels1 == 0 || cnn.channels2 == 0 ||
       cnn.channels3 == 0 || image_channels == 0)) {
    throw ConfigError("model: invalid tiny-cnn geometry");
  }
}

// ---- Heads --------------------------------------------------------------------

PoseOutputVars lstm_head(Var features, const LstmHeadVars& v, double dropout_rate,
                         Mode mode, Rng& rng) {
  Var embedded = fc(features, v.embed_w, v.embed_b);
  embedded = dropout(embedded, dropout_rate, rng, mode);
  Var grid = grid_fold(embedded);
  std::vector<Var> outs;
  outs.reserve(4);
  for (std::size_t k = 0; k < kSweepOrder.size(); ++k) {
    outs.push_back(directional_sweep(grid, kSweepOrder[k], v.sweeps[k]));
  }
  Var joined = concat(outs);
  return {fc(joined, v.pos_w, v.pos_b), fc(joined, v.quat_w, v.quat_b)};
}

PoseOutputVars fc_baseline_head(Var features, const FcHeadVars& v, double dropout_rate,
                                Mode mode, Rng& rng) {
  Var embedded = fc(features, v.embed_w, v.embed_b);
  embedded = dropout(embedded, dropout_rate, rng, mode);
  return {fc(embedded, v.pos_w, v.pos_b), fc(embedded, v.quat_w, v.quat_b)};
}

// ---- PoseModel ------------------------------------------------------------------

PoseModel::PoseModel(ModelSpec spec, ParamSet params)
    : spec_(std::move(spec)), params_(std::move(params)) {}

PoseModel PoseModel::create(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ParamSet params;
  for (const ParamDecl& d : layout(spec)) {
    params.add(d.name, initial_value(d, rng), d.is_bias);
  }
  return PoseModel(spec, std::move(params));
}

PoseModel PoseModel::from_params(const ModelSpec& spec, ParamSet params) {
  spec.validate();
  const auto decls = layout(spec);
  if (decls.size() != params.size()) {
    throw ConfigError("model: expected " + std::to_string(decls.size()) +
                      " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < decls.size(); ++i) {
    if (params[i].name != decls[i].name || params[i].value.shape() != decls[i].shape ||
        params[i].is_bias != decls[i].is_bias) {
      throw ConfigError("model: parameter '" + params[i].name + "' " +
                        to_string(params[i].value.shape()) + " does not match expected '" +
                        decls[i].name + "' " + to_string(decls[i].shape));
    }
  }
  return PoseModel(spec, std::move(params));
}

ParamSet zero_params(const ModelSpec& spec) {
  ParamSet params;
  for (const ParamDecl& d : layout(spec)) params.add(d.name, Tensor(d.shape), d.is_bias);
  return params;
}

Var PoseModel::backbone(Var input, const std::vector<Var>& bound,
                        std::vector<PoseOutputVars>* aux) const {
  const Shape& shape = input.shape();
  if (spec_.backbone == BackboneKind::features) {
    if (shape.size() != 2 || shape[1] != spec_.feature_dim) {
      throw ConfigError("model: expected features [B x " +
                        std::to_string(spec_.feature_dim) + "], got " +
                        to_string(shape));
    }
    return input;
  }
  const std::size_t s = spec_.cnn.input_size;
  if (shape.size() != 4 || shape[1] != spec_.image_channels || shape[2] != s ||
      shape[3] != s) {
    throw ConfigError("model: expected images [B x " +
                      std::to_string(spec_.image_channels) + " x " + std::to_string(s) +
                      " x " + std::to_string(s) + "], got " + to_string(shape));
  }
  const ParamSet& p = params_;
  auto var = [&](const char* name) { return bound[index(p, name)]; };
  Var x = relu(conv2d(input, var("cnn.conv1.w"), var("cnn.conv1.b"), {1, 1}));
  x = relu(conv2d(x, var("cnn.conv2.w"), var("cnn.conv2.b"), {2, 1}));
  if (spec_.cnn.aux_head && aux) {
    Var pooled = spatial_mean(x);
    aux->push_back({fc(pooled, var("cnn.aux.pos.w"), var("cnn.aux.pos.b")),
                    fc(pooled, var("cnn.aux.quat.w"), var("cnn.aux.quat.b"))});
  }
  x = relu(conv2d(x, var("cnn.conv3.w"), var("cnn.conv3.b"), {2, 1}));
  const std::size_t batch = shape[0];
  x = reshape(x, {batch, x.value().numel() / batch});
  return fc(x, var("cnn.fc.w"), var("cnn.fc.b"));
}

ForwardOutput PoseModel::forward(Var input, const std::vector<Var>& bound, Mode mode,
                                 Rng& rng) const {
  if (bound.size() != params_.size()) {
    throw UsageError("model: bound variables do not match the parameter set");
  }
  ForwardOutput out;
  Var features = backbone(input, bound, &out.aux);
  const ParamSet& p = params_;
  auto var = [&](const std::string& name) { return bound[p.index_of(name)]; };
  if (spec_.head == HeadKind::lstm) {
    LstmHeadVars v;
    v.embed_w = var("embed.w");
    v.embed_b = var("embed.b");
    for (std::size_t k = 0; k < kSweepOrder.size(); ++k) {
      const std::string prefix = "lstm." + std::string(to_string(kSweepOrder[k]));
      v.sweeps[k] = {var(prefix + ".w"), var(prefix + ".u"), var(prefix + ".b")};
    }
    v.pos_w = var("pos.w");
    v.pos_b = var("pos.b");
    v.quat_w = var("quat.w");
    v.quat_b = var("quat.b");
    out.main = lstm_head(features, v, spec_.dropout, mode, rng);
  } else {
    FcHeadVars v{var("embed.w"), var("embed.b"), var("pos.w"),
                 var("pos.b"),   var("quat.w"),  var("quat.b")};
    out.main = fc_baseline_head(features, v, spec_.dropout, mode, rng);
  }
  if (spec_.position_scale != 1.0) {
    out.main.p_hat = scale(out.main.p_hat, spec_.position_scale);
    for (auto& a : out.aux) a.p_hat = scale(a.p_hat, spec_.position_scale);
  }
  return out;
}

std::vector<PoseModel::Prediction> PoseModel::predict(const Tensor& input) const {
  Tape tape;
  std::vector<Var> bound;
  bound.reserve(params_.size());
  for (const auto& p : params_) bound.push_back(tape.constant(p.value));
  Rng unused(0);
  ForwardOutput out = forward(tape.constant(input), bound, Mode::eval, unused);
  const Tensor& pv = out.main.p_hat.value();
  const Tensor& qv = out.main.q_raw.value();
  std::vector<Prediction> preds(pv.dim(0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    preds[i].p = {pv.at(i, 0), pv.at(i, 1), pv.at(i, 2)};
    preds[i].q_raw = {qv.at(i, 0), qv.at(i, 1), qv.at(i, 2), qv.at(i, 3)};
  }
  return preds;
}

std::size_t PoseModel::regression_param_count() const {
  return params_.scalar_count("pos.") + params_.scalar_count("quat.");
}

std::size_t parameter_matched_embed_dim(const ModelSpec& lstm_spec) {
  ModelSpec lstm = lstm_spec;
  lstm.head = HeadKind::lstm;
  lstm.embed_dim = kGridSize;
  std::size_t target = 0;
  for (const ParamDecl& d : layout(lstm)) {
    if (!d.name.starts_with("cnn.")) target += shape_numel(d.shape);
  }
  // FC head: E*(F+1) + 7*(E+1) parameters.
  const std::size_t per_unit = lstm.feature_dim + 1 + 7;
  return std::max<std::size_t>(1, (target - 7 + per_unit / 2) / per_unit);
}

}  // namespace posereg
