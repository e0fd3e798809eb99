#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "canonica/errors.hpp"
#include "canonica/fields/checkpoint.hpp"
#include "canonica/fields/encoding.hpp"
#include "canonica/fields/scene_model.hpp"
#include "helpers.hpp"

using namespace canonica;
using canonica::testing::perturb;
using canonica::testing::small_model_config;

namespace {

Eigen::Vector3d random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST(PositionalEncoding, ZeroPoint) {
  const auto e = fields::positional_encode(Eigen::Vector3d::Zero(), 2);
  ASSERT_EQ(e.features.size(), 3u + 6u * 2u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(e.features[k], 0.0);
  for (int band = 0; band < 2; ++band) {
    const int base = 3 + 6 * band;
    for (int d = 0; d < 3; ++d) {
      EXPECT_EQ(e.features[base + d], 0.0);
      EXPECT_EQ(e.features[base + 3 + d], 1.0);
    }
  }
}

TEST(PositionalEncoding, NoBandsIsRawPoint) {
  const auto e = fields::positional_encode(Eigen::Vector3d(0.1, -0.2, 0.3), 0);
  ASSERT_EQ(e.features.size(), 3u);
  EXPECT_EQ(e.features[1], -0.2);
}

TEST(PositionalEncoding, QuarterTurn) {
  const auto e = fields::positional_encode(Eigen::Vector3d(0.5, 0, 0), 1);
  EXPECT_NEAR(e.features[3], 1.0, 1e-15);
}

TEST(PositionalEncoding, BatchMatchesPointwise) {
  std::mt19937_64 rng(1);
  ad::Matrix pts(5, 3);
  for (int r = 0; r < 5; ++r) pts.row(r) = random_point(rng).transpose();
  ad::Tape tape;
  const ad::Var enc = fields::positional_encode(tape.constant(pts), 3);
  tape.forward(enc);
  for (int r = 0; r < 5; ++r) {
    const auto e = fields::positional_encode(Eigen::Vector3d(pts.row(r).transpose()), 3);
    for (std::size_t k = 0; k < e.features.size(); ++k) {
      EXPECT_NEAR(tape.value(enc)(r, static_cast<Eigen::Index>(k)), e.features[k], 1e-14);
    }
  }
}

TEST(CanonicalField, ZeroOutputLayerGivesLn2AndGray) {
  auto model = fields::SceneModel::create(small_model_config());
  // Final field layer starts random; zero it to exercise the closed form.
  const auto& last = model.field.network().layers().back();
  model.params.at(last.weight).value.setZero();
  model.params.at(last.bias).value.setZero();
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const auto s = model.field.query(model.params, random_point(rng));
    EXPECT_NEAR(s.sigma, std::log(2.0), 1e-15);
    EXPECT_NEAR(s.color.x(), 0.5, 1e-15);
  }
}

TEST(CanonicalField, DensityNonNegativeColorInRange) {
  auto model = fields::SceneModel::create(small_model_config());
  perturb(model, 2.0, 3);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 1000; ++k) {
    const auto s = model.field.query(model.params, 3.0 * random_point(rng));
    ASSERT_GE(s.sigma, 0.0);
    ASSERT_GE(s.color.minCoeff(), 0.0);
    ASSERT_LE(s.color.maxCoeff(), 1.0);
  }
}

TEST(CanonicalField, DensityGradientWrtPointMatchesFiniteDifferences) {
  auto model = fields::SceneModel::create(small_model_config());
  perturb(model, 0.3, 5);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Vector3d u = random_point(rng);
    ad::Tape tape;
    ad::ParamBinder bind(tape, model.params);
    const ad::Var x = tape.leaf(u.transpose());
    const auto out = model.field.query(bind, x);
    tape.backward(out.sigma);
    const Eigen::RowVector3d g = tape.grad(x);
    for (int d = 0; d < 3; ++d) {
      Eigen::Vector3d p = u, m = u;
      p(d) += 1e-4;
      m(d) -= 1e-4;
      const double fd = (model.field.query(model.params, p).sigma -
                         model.field.query(model.params, m).sigma) / 2e-4;
      EXPECT_LT(std::abs(fd - g(d)) / std::max(1.0, std::abs(fd)), 1e-3);
    }
  }
}

TEST(MappingNetwork, IdentityAtInitialization) {
  const auto model = fields::SceneModel::create(small_model_config());
  std::mt19937_64 rng(7);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d x = random_point(rng);
    for (int f = 0; f < 4; ++f) {
      EXPECT_EQ(model.mapping.to_canonical(model.params, x, f), x);
    }
  }
}

TEST(MappingNetwork, RoundTripUnderRandomParameters) {
  auto model = fields::SceneModel::create(small_model_config());
  perturb(model, 0.3, 8);
  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Eigen::Vector3d x = random_point(rng);
    const int f = k % 4;
    const Eigen::Vector3d u = model.mapping.to_canonical(model.params, x, f);
    worst = std::max(worst, (model.mapping.from_canonical(model.params, u, f) - x).norm());
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(MappingNetwork, InjectiveOnRandomPairs) {
  auto model = fields::SceneModel::create(small_model_config());
  perturb(model, 1.0, 10);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 1000; ++k) {
    const Eigen::Vector3d a = random_point(rng);
    const Eigen::Vector3d b = random_point(rng);
    EXPECT_NE(model.mapping.to_canonical(model.params, a, 1),
              model.mapping.to_canonical(model.params, b, 1));
  }
}

TEST(MappingNetwork, BatchMatchesPointwiseAndFramesDiffer) {
  auto model = fields::SceneModel::create(small_model_config());
  perturb(model, 0.5, 12);
  ad::Matrix pts(4, 3);
  std::mt19937_64 rng(13);
  for (int r = 0; r < 4; ++r) pts.row(r) = random_point(rng).transpose();
  const std::vector<int> frames{0, 1, 2, 3};
  ad::Tape tape;
  ad::ParamBinder bind(tape, model.params);
  const ad::Var u = model.mapping.to_canonical(bind, tape.constant(pts), frames);
  const ad::Var back = model.mapping.from_canonical(bind, u, frames);
  tape.forward(back);
  for (int r = 0; r < 4; ++r) {
    const Eigen::Vector3d x = pts.row(r).transpose();
    const Eigen::Vector3d single = model.mapping.to_canonical(model.params, x, r);
    EXPECT_LT((tape.value(u).row(r).transpose() - single).norm(), 1e-12);
    EXPECT_LT((tape.value(back).row(r) - pts.row(r)).norm(), 1e-9);
  }
  const Eigen::Vector3d x = pts.row(0).transpose();
  EXPECT_GT((model.mapping.to_canonical(model.params, x, 0) -
             model.mapping.to_canonical(model.params, x, 1)).norm(), 1e-6);
}

TEST(MappingNetwork, GradientMatchesFiniteDifferences) {
  auto model = fields::SceneModel::create(small_model_config());
  perturb(model, 0.05, 14);
  const Eigen::Vector3d x(0.2, -0.1, 0.7);
  auto loss = [&](const fields::SceneModel& m) {
    const Eigen::Vector3d u = m.mapping.to_canonical(m.params, x, 2);
    return m.mapping.from_canonical(m.params, u, 1).sum();
  };
  ad::Tape tape;
  ad::ParamBinder bind(tape, model.params);
  const std::vector<int> f2{2}, f1{1};
  const ad::Var u = model.mapping.to_canonical(bind, tape.constant(x.transpose()), f2);
  tape.backward(ad::sum(model.mapping.from_canonical(bind, u, f1)));
  const auto grads = bind.gradients();
  std::mt19937_64 rng(15);
  int checked = 0;
  for (std::size_t p = 0; p < model.params.size(); ++p) {
    if (grads[p].size() == 0) continue;
    std::uniform_int_distribution<Eigen::Index> pick(0, grads[p].size() - 1);
    const Eigen::Index e = pick(rng);
    auto plus = model;
    auto minus = model;
    plus.params.all()[p].value(e) += 1e-5;
    minus.params.all()[p].value(e) -= 1e-5;
    const double fd = (loss(plus) - loss(minus)) / 2e-5;
    EXPECT_LT(std::abs(fd - grads[p](e)) / std::max(1.0, std::abs(fd)), 1e-3)
        << model.params.all()[p].name;
    ++checked;
  }
  EXPECT_GT(checked, 5);
}

TEST(MappingNetwork, FrameOutOfRangeThrows) {
  const auto model = fields::SceneModel::create(small_model_config());
  EXPECT_THROW(model.mapping.to_canonical(model.params, Eigen::Vector3d::Zero(), 4), std::out_of_range);
  EXPECT_THROW(model.mapping.from_canonical(model.params, Eigen::Vector3d::Zero(), -1), std::out_of_range);
}

TEST(Checkpoint, RoundTripIsLossless) {
  auto model = fields::SceneModel::create(small_model_config());
  perturb(model, 0.7, 16);
  model.iteration = 42;
  for (auto& p : model.params.all()) {
    p.adam_m = p.value * 0.5;
    p.adam_v = p.value.cwiseAbs();
  }
  model.params.set_step(17);
  const std::string bytes = fields::serialize_checkpoint(model);
  const auto back = fields::deserialize_checkpoint(bytes);
  EXPECT_EQ(back.iteration, 42);
  EXPECT_EQ(back.params.step(), 17);
  ASSERT_EQ(back.params.size(), model.params.size());
  for (std::size_t k = 0; k < model.params.size(); ++k) {
    EXPECT_EQ(back.params.all()[k].name, model.params.all()[k].name);
    EXPECT_EQ(back.params.all()[k].value, model.params.all()[k].value);
    EXPECT_EQ(back.params.all()[k].adam_m, model.params.all()[k].adam_m);
    EXPECT_EQ(back.params.all()[k].adam_v, model.params.all()[k].adam_v);
  }
  EXPECT_EQ(fields::serialize_checkpoint(back), bytes);
}

TEST(Checkpoint, CorruptInputIsDataError) {
  const auto model = fields::SceneModel::create(small_model_config());
  std::string bytes = fields::serialize_checkpoint(model);
  EXPECT_THROW(fields::deserialize_checkpoint(bytes.substr(0, bytes.size() / 2)), DataError);
  bytes[0] = 'X';
  EXPECT_THROW(fields::deserialize_checkpoint(bytes), DataError);
}

TEST(ModelConfig, KeyValueRoundTrip) {
  auto cfg = small_model_config(6, 24);
  cfg.init_seed = 99;
  cfg.mapping.scale_bound = 2.5;
  const auto back = fields::model_config_from_kv(fields::to_kv(cfg));
  EXPECT_EQ(fields::to_kv(back).to_text(), fields::to_kv(cfg).to_text());
}
