// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include "posereg/config.hpp"

#include <fstream>
#include <iterator>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "posereg/errors.hpp"

namespace posereg {

using nlohmann::json;

std::string_view to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::synth: return "synth";
    case DatasetKind::features: return "features";
    case DatasetKind::images: return "images";
  }
  return "?";
}

DatasetKind parse_dataset_kind(std::string_view s) {
  if (s == "synth") return DatasetKind::synth;
  if (s == "features") return DatasetKind::features;
  if (s == "images") return DatasetKind::images;
  throw ConfigError("unknown dataset kind '" + std::string(s) +
                    "' (expected synth|features|images)");
}

void RunConfig::validate() const {
  model.validate();
  optim.validate();
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (model.dropout != optim.dropout) throw ConfigError("model and optim dropout disagree");
  switch (data.kind) {
    case DatasetKind::synth:
      data.synth.validate();
      if (model.backbone != BackboneKind::features) {
        throw ConfigError("synthetic scenes carry features; use backbone 'features'");
      }
      if (data.synth.feature_dim != model.feature_dim) {
        throw ConfigError(fmt::format("synthetic feature_dim {} != model feature_dim {}",
                                      data.synth.feature_dim, model.feature_dim));
      }
      break;
    case DatasetKind::features:
      if (data.train_manifest.empty() || data.test_manifest.empty() ||
          data.feature_store.empty()) {
        throw ConfigError("features dataset needs train/test manifests and a feature store");
      }
      if (model.backbone != BackboneKind::features) {
        throw ConfigError("features dataset needs backbone 'features'");
      }
      break;
    case DatasetKind::images:
      if (data.train_manifest.empty() || data.test_manifest.empty()) {
        throw ConfigError("images dataset needs train/test manifests");
      }
      if (model.backbone != BackboneKind::tiny_cnn) {
        throw ConfigError("images dataset needs backbone 'tiny-cnn'");
      }
      if (data.crop != model.cnn.input_size) {
        throw ConfigError(fmt::format("crop {} != tiny-cnn input_size {}", data.crop,
                                      model.cnn.input_size));
      }
      if (data.base_size != 0 && data.base_size < data.crop) {
        throw ConfigError("base_size must be >= crop");
      }
      break;
  }
}

namespace {

json synth_json(const SynthSpec& s) {
  return {{"seed", s.seed},       {"n_train", s.n_train},     {"n_test", s.n_test},
          {"extent_m", s.extent_m}, {"feature_dim", s.feature_dim},
          {"bandwidth", s.bandwidth}, {"noise", s.noise}};
}

// Reads the keys of `j` into fields; rejects keys nobody consumed.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) {
        throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

  template <typename T>
  void operator()(const char* key, T& field) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

}  // namespace

std::string to_json(const RunConfig& c, bool with_output_dir) {
  json j;
  j["seed"] = c.seed;
  j["iterations"] = c.iterations;
  j["eval_every"] = c.eval_every;
  j["log_every"] = c.log_every;
  if (with_output_dir) j["output_dir"] = c.output_dir;
  j["data"] = {{"kind", std::string(to_string(c.data.kind))},
               {"scene", c.data.scene},
               {"synth", synth_json(c.data.synth)},
               {"train_manifest", c.data.train_manifest},
               {"test_manifest", c.data.test_manifest},
               {"feature_store", c.data.feature_store},
               {"base_size", c.data.base_size},
               {"crop", c.data.crop}};
  const ModelSpec& m = c.model;
  j["model"] = {{"head", std::string(to_string(m.head))},
                {"backbone", std::string(to_string(m.backbone))},
                {"feature_dim", m.feature_dim},
                {"hidden", m.hidden},
                {"embed_dim", m.embed_dim},
                {"image_channels", m.image_channels},
                {"position_scale", m.position_scale},
                {"cnn",
                 {{"input_size", m.cnn.input_size},
                  {"channels1", m.cnn.channels1},
                  {"channels2", m.cnn.channels2},
                  {"channels3", m.cnn.channels3},
                  {"aux_head", m.cnn.aux_head}}}};
  const OptimConfig& o = c.optim;
  j["optim"] = {{"lr", o.lr},         {"beta1", o.beta1},   {"beta2", o.beta2},
                {"eps", o.eps},       {"lambda", o.lambda}, {"gamma", o.gamma},
                {"dropout", o.dropout}, {"batch_size", o.batch_size},
                {"beta_loss", o.beta_loss}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  {
    Reader r(j, "config");
    r("seed", c.seed);
    r("iterations", c.iterations);
    r("eval_every", c.eval_every);
    r("log_every", c.log_every);
    r("output_dir", c.output_dir);
    if (const json* d = r.sub("data")) {
      Reader rd(*d, "data");
      std::string kind(to_string(c.data.kind));
      rd("kind", kind);
      c.data.kind = parse_dataset_kind(kind);
      rd("scene", c.data.scene);
      rd("train_manifest", c.data.train_manifest);
      rd("test_manifest", c.data.test_manifest);
      rd("feature_store", c.data.feature_store);
      rd("base_size", c.data.base_size);
      rd("crop", c.data.crop);
      if (const json* s = rd.sub("synth")) {
        Reader rs(*s, "data.synth");
        rs("seed", c.data.synth.seed);
        rs("n_train", c.data.synth.n_train);
        rs("n_test", c.data.synth.n_test);
        rs("extent_m", c.data.synth.extent_m);
        rs("feature_dim", c.data.synth.feature_dim);
        rs("bandwidth", c.data.synth.bandwidth);
        rs("noise", c.data.synth.noise);
      }
    }
    if (const json* m = r.sub("model")) {
      Reader rm(*m, "model");
      std::string head(to_string(c.model.head));
      std::string backbone(to_string(c.model.backbone));
      rm("head", head);
      rm("backbone", backbone);
      c.model.head = parse_head_kind(head);
      c.model.backbone = parse_backbone_kind(backbone);
      rm("feature_dim", c.model.feature_dim);
      rm("hidden", c.model.hidden);
      rm("embed_dim", c.model.embed_dim);
      rm("image_channels", c.model.image_channels);
      rm("position_scale", c.model.position_scale);
      if (const json* cnn = rm.sub("cnn")) {
        Reader rc(*cnn, "model.cnn");
        rc("input_size", c.model.cnn.input_size);
        rc("channels1", c.model.cnn.channels1);
        rc("channels2", c.model.cnn.channels2);
        rc("channels3", c.model.cnn.channels3);
        rc("aux_head", c.model.cnn.aux_head);
      }
    }
    // No published learning rate exists for this setup, so config files must state one.
    const json* o = r.sub("optim");
    if (o == nullptr || !o->contains("lr")) {
      throw ConfigError("config: optim.lr must be given explicitly");
    }
    {
      Reader ro(*o, "optim");
      ro("lr", c.optim.lr);
      ro("beta1", c.optim.beta1);
      ro("beta2", c.optim.beta2);
      ro("eps", c.optim.eps);
      ro("lambda", c.optim.lambda);
      ro("gamma", c.optim.gamma);
      ro("dropout", c.optim.dropout);
      ro("batch_size", c.optim.batch_size);
      ro("beta_loss", c.optim.beta_loss);
    }
  }
  c.model.dropout = c.optim.dropout;
  c.optim.seed = c.seed;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return run_config_from_json(text);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& config) {
  return fnv1a64(to_json(config, false));
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

std::optional<double> beta_preset(std::string_view name) {
  if (name == "indoor-min") return 120.0;
  if (name == "indoor-max") return 750.0;
  if (name == "outdoor-min") return 250.0;
  if (name == "outdoor-max") return 2000.0;
  if (name == "tum-lsi") return 1000.0;
  return std::nullopt;
}

}  // namespace posereg
