// Copyright 2026 The posereg Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "posereg/errors.hpp"
#include "posereg/gradcheck.hpp"
#include "posereg/model.hpp"
#include "posereg/trainer.hpp"

namespace posereg {
namespace {

ModelSpec toy_spec(HeadKind head) {
  ModelSpec s;
  s.head = head;
  s.feature_dim = 16;
  s.hidden = 3;
  return s;
}

std::vector<Pose> random_poses(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g;
  std::vector<Pose> out(n);
  for (auto& p : out) {
    p.p = {g(rng), g(rng), g(rng)};
    p.q = quat_canonicalize(quat_normalize({g(rng), g(rng), g(rng), g(rng)}));
  }
  return out;
}

Tensor random_input(Shape shape, Rng& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = u(rng);
  return t;
}

GradCheckResult check_model(const ModelSpec& spec, const Tensor& input, std::size_t batch) {
  Rng rng(5);
  const auto truth = random_poses(batch, rng);
  const PoseModel model = PoseModel::create(spec, 9);
  OptimConfig cfg;
  cfg.beta_loss = 20.0;
  auto f = [&](const ParamSet& p, std::vector<Tensor>* grads) {
    const PoseModel m = PoseModel::from_params(spec, p);
    Rng dropout_rng(77);  // same mask on every evaluation
    return batch_objective(m, input, truth, cfg, Mode::train, dropout_rng, grads);
  };
  GradCheckOptions opts;
  opts.per_param = 4;
  return finite_diff_check(f, model.params(), opts);
}

TEST(ModelTest, LayoutNamesAndBiasFlags) {
  const PoseModel m = PoseModel::create(toy_spec(HeadKind::lstm), 1);
  const ParamSet& p = m.params();
  ASSERT_NE(p.find("lstm.left.w"), nullptr);
  EXPECT_EQ(p.find("lstm.left.w")->value.shape(), (Shape{12, kGridRows}));
  EXPECT_EQ(p.find("lstm.up.w")->value.shape(), (Shape{12, kGridCols}));
  EXPECT_EQ(p.find("embed.w")->value.shape(), (Shape{kGridSize, 16}));
  EXPECT_EQ(p.find("pos.w")->value.shape(), (Shape{3, 12}));
  EXPECT_TRUE(p.find("quat.b")->is_bias);
  EXPECT_FALSE(p.find("quat.w")->is_bias);
}

TEST(ModelTest, InitialBiases) {
  const PoseModel m = PoseModel::create(toy_spec(HeadKind::lstm), 1);
  EXPECT_EQ(m.params().find("quat.b")->value, Tensor::row({1, 0, 0, 0}));
  const Tensor& b = m.params().find("lstm.down.b")->value;
  for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(b[j], (j >= 3 && j < 6) ? 1.0 : 0.0);
}

TEST(ModelTest, CreateIsSeededAndFromParamsValidates) {
  const ModelSpec spec = toy_spec(HeadKind::lstm);
  EXPECT_EQ(PoseModel::create(spec, 3).params(), PoseModel::create(spec, 3).params());
  EXPECT_NE(PoseModel::create(spec, 3).params(), PoseModel::create(spec, 4).params());
  ModelSpec other = spec;
  other.hidden = 4;
  EXPECT_THROW(PoseModel::from_params(other, PoseModel::create(spec, 3).params()), ConfigError);
}

TEST(ModelTest, LstmHeadRequiresGridSizedEmbedding) {
  ModelSpec s = toy_spec(HeadKind::lstm);
  s.embed_dim = 1000;
  EXPECT_THROW(s.validate(), ConfigError);
  s.head = HeadKind::fc;
  EXPECT_NO_THROW(s.validate());
}

TEST(ModelTest, WrongFeatureWidthIsConfigError) {
  const PoseModel m = PoseModel::create(toy_spec(HeadKind::lstm), 1);
  EXPECT_THROW(m.predict(Tensor({2, 15})), ConfigError);
}

TEST(ModelTest, EvalPredictionIsDeterministicAndBatchIndependent) {
  Rng rng(2);
  const PoseModel m = PoseModel::create(toy_spec(HeadKind::lstm), 1);
  const Tensor x = random_input({3, 16}, rng);
  const auto a = m.predict(x);
  const auto b = m.predict(x);
  const Tensor first({1, 16}, std::vector<double>(x.data().begin(), x.data().begin() + 16));
  const auto c = m.predict(first);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(a[0].p[k], b[0].p[k]);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[0].p[k], c[0].p[k], 1e-12);
}

TEST(ModelTest, LstmHeadGradientsMatchFiniteDifferences) {
  Rng rng(3);
  const GradCheckResult r = check_model(toy_spec(HeadKind::lstm), random_input({2, 16}, rng), 2);
  EXPECT_LT(r.max_rel_err, 1e-4);
  EXPECT_EQ(r.per_param.size(), PoseModel::create(toy_spec(HeadKind::lstm), 1).params().size());
}

TEST(ModelTest, FcHeadGradientsMatchFiniteDifferences) {
  Rng rng(4);
  ModelSpec s = toy_spec(HeadKind::fc);
  s.embed_dim = 40;
  EXPECT_LT(check_model(s, random_input({3, 16}, rng), 3).max_rel_err, 1e-4);
}

TEST(ModelTest, TinyCnnGradientsIncludingAuxHead) {
  Rng rng(5);
  ModelSpec s = toy_spec(HeadKind::fc);
  s.backbone = BackboneKind::tiny_cnn;
  s.embed_dim = 12;
  s.cnn = {8, 3, 4, 4, true};
  s.feature_dim = 10;
  const GradCheckResult r = check_model(s, random_input({2, 3, 8, 8}, rng), 2);
  EXPECT_LT(r.max_rel_err, 1e-4);
  bool saw_aux = false;
  for (const auto& [name, err] : r.per_param) saw_aux |= name.starts_with("cnn.aux.");
  EXPECT_TRUE(saw_aux);
}

TEST(ModelTest, TinyCnnWithZeroWeightsIsBiasDetermined) {
  ModelSpec s = toy_spec(HeadKind::fc);
  s.backbone = BackboneKind::tiny_cnn;
  s.embed_dim = 12;
  s.cnn = {8, 3, 4, 4, false};
  s.feature_dim = 10;
  ParamSet p = zero_params(s);
  p[p.index_of("cnn.fc.b")].value.fill(0.25);
  p[p.index_of("embed.w")].value.fill(1.0);
  p[p.index_of("pos.w")].value.fill(1.0);
  const PoseModel m = PoseModel::from_params(s, p);
  Rng rng(6);
  const auto a = m.predict(random_input({1, 3, 8, 8}, rng));
  const auto b = m.predict(Tensor({1, 3, 8, 8}));
  // Every embedding unit sees 10 * 0.25, summed over 12 units.
  for (int k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(a[0].p[k], 12 * 2.5);
    EXPECT_EQ(a[0].p[k], b[0].p[k]);
  }
}

TEST(ModelTest, ParameterMatchedEmbeddingIsCloseToLstmCount) {
  ModelSpec lstm = toy_spec(HeadKind::lstm);
  lstm.feature_dim = 64;
  lstm.hidden = 32;
  ModelSpec fc = lstm;
  fc.head = HeadKind::fc;
  fc.embed_dim = parameter_matched_embed_dim(lstm);
  const double a = static_cast<double>(PoseModel::create(lstm, 1).params().scalar_count());
  const double b = static_cast<double>(PoseModel::create(fc, 1).params().scalar_count());
  EXPECT_LT(std::abs(a - b) / a, 0.01);
}

TEST(ModelTest, LstmRegressionStageIsSmallerThanFcBaseline) {
  ModelSpec lstm = toy_spec(HeadKind::lstm);
  lstm.hidden = 32;
  ModelSpec fc = lstm;
  fc.head = HeadKind::fc;
  EXPECT_EQ(PoseModel::create(lstm, 1).regression_param_count(), 7u * (4 * 32 + 1));
  EXPECT_EQ(PoseModel::create(fc, 1).regression_param_count(), 7u * (kGridSize + 1));
}

}  // namespace
}  // namespace posereg
