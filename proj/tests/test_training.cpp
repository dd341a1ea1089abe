// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pdfembed/error.hpp"
#include "pdfembed/inference.hpp"
#include "pdfembed/training.hpp"

using namespace pdfembed;
using namespace pdfembed::encoder;

namespace {

Schedule quick(int epochs, double lr, int batch) {
  Schedule s;
  s.epochs = epochs;
  s.base_lr = lr;
  s.batch_size = batch;
  s.seed = 5;
  return s;
}

}  // namespace

TEST(CosineLr, Endpoints) {
  EXPECT_EQ(cosine_lr(0.1, 0, 100), 0.1);
  EXPECT_NEAR(cosine_lr(0.1, 50, 100), 0.05, 1e-15);
  EXPECT_NEAR(cosine_lr(0.1, 100, 100), 0.0, 1e-15);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const auto pairs = oracle::small_batch(6, 1);
  const auto spec = objectives::ObjectiveSpec::from_name("kl-exp");
  auto config = oracle::small_config();
  const auto r = train(config, pairs, spec, quick(0, 0.05, 4));
  const auto init = ModelParams::initialize(r.params.config(), 5);
  EXPECT_TRUE(std::equal(init.values().begin(), init.values().end(), r.params.values().begin()));
  EXPECT_TRUE(r.steps.empty());
}

TEST(Train, FullBatchDescentAtSmallStep) {
  const auto pairs = oracle::small_batch(12, 2);
  for (const char* name : {"kl-exp", "onehot", "regression"}) {
    const auto spec = objectives::ObjectiveSpec::from_name(name);
    auto s = quick(11, 0.005, 12);
    s.momentum = 0.0;
    const auto r = train(oracle::small_config(), pairs, spec, s);
    ASSERT_EQ(r.steps.size(), 11U);
    for (std::size_t i = 1; i < r.steps.size(); ++i) {
      EXPECT_LE(r.steps[i].loss, r.steps[i - 1].loss) << name << " step " << i;
    }
  }
}

TEST(Train, SameSeedIsBitIdenticalAcrossThreadCounts) {
  const auto pairs = oracle::small_batch(10, 3);
  const auto spec = objectives::ObjectiveSpec::from_name("kl-gauss");
  auto s = quick(2, 0.05, 4);
  const auto a = train(oracle::small_config(), pairs, spec, s);
  const auto b = train(oracle::small_config(), pairs, spec, s);
  s.threads = 3;
  const auto c = train(oracle::small_config(), pairs, spec, s);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].loss, b.steps[i].loss);
    EXPECT_EQ(a.steps[i].loss, c.steps[i].loss);
  }
  EXPECT_TRUE(std::equal(a.params.values().begin(), a.params.values().end(), c.params.values().begin()));
}

TEST(Gradients, DuplicatedPairAddsItsContribution) {
  const auto pairs = oracle::small_batch(2, 4);
  const auto spec = objectives::ObjectiveSpec::from_name("labelsmooth");
  auto config = oracle::small_config();
  const auto params = ModelParams::initialize(config, 1);
  auto g_a = ModelParams::zeros(config);
  auto g_b = ModelParams::zeros(config);
  auto g_abb = ModelParams::zeros(config);
  const std::vector<std::size_t> a{0}, b{1}, abb{0, 1, 1};
  compute_gradients(params, pairs, a, spec, g_a);
  compute_gradients(params, pairs, b, spec, g_b);
  compute_gradients(params, pairs, abb, spec, g_abb);
  // Mean reduction: 3 * grad(a, b, b) = grad(a) + 2 grad(b).
  for (std::size_t i = 0; i < g_a.values().size(); ++i) {
    EXPECT_NEAR(3.0 * g_abb.values()[i], g_a.values()[i] + 2.0 * g_b.values()[i], 1e-12);
  }
}

TEST(Gradients, ZeroAtExactRegressionFit) {
  const auto r = objectives::regression_objective(std::vector<double>{2.0}, std::vector<double>{2.0});
  EXPECT_NEAR(r.grad[0], 0.0, 1e-8);
}

TEST(Train, NonFiniteInputReportsDivergenceStep) {
  auto pairs = oracle::small_batch(4, 5);
  pairs[2].real.pixels[7] = std::nanf("");
  try {
    train(oracle::small_config(), pairs, objectives::ObjectiveSpec::from_name("kl-exp"), quick(1, 0.05, 8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Divergence);
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
}

TEST(Train, PccSkipsBatchesWithoutLabelVariance) {
  auto pairs = oracle::small_batch(4, 6);
  for (auto& p : pairs) p.level = 3;
  const auto r = train(oracle::small_config(), pairs, objectives::ObjectiveSpec::from_name("pcc"), quick(2, 0.05, 2));
  EXPECT_EQ(r.skipped_batches, 4);
  EXPECT_EQ(r.steps.back().skipped_batches, 4);
}

TEST(Train, RejectsEmptyData) {
  EXPECT_THROW(train(oracle::small_config(), {}, objectives::ObjectiveSpec::from_name("kl-exp"), quick(1, 0.1, 2)),
               Error);
}

TEST(Inference, ScoresFollowHead) {
  const auto pairs = oracle::small_batch(6, 7);
  auto config = oracle::small_config();
  const auto dist = ModelParams::initialize(config, 2);
  for (const auto& p : predict_pairs(dist, pairs).scores) EXPECT_EQ(p, std::round(p));
  config.head = Head::Scalar;
  const auto scalar = ModelParams::initialize(config, 2);
  for (double s : predict_pairs(scalar, pairs).scores) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 5.0);
  }
  EXPECT_EQ(score_to_level(2.4, 5), 2);
  EXPECT_EQ(score_to_level(7.0, 5), 5);
  EXPECT_EQ(score_to_level(-1.0, 5), 0);
}
