#include <cmath>
#include <cstdio>
#include <sstream>

#include <gtest/gtest.h>

#include "bleubound/errors.hpp"
#include "bleubound/grad.hpp"
#include "bleubound/lower_bound.hpp"
#include "bleubound/stats.hpp"
#include "bleubound/trainers.hpp"
#include "oracle.hpp"

using namespace bleubound;

namespace {

ToyConfig small_config() {
  ToyConfig cfg;
  cfg.len = 4;
  cfg.vocab_size = 30;
  cfg.steps = 60;
  cfg.eval_every = 20;
  cfg.mc_samples = 200;
  cfg.learning_rate = 0.05;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST(ToyInstance, ReproducibleFromSeed) {
  const ToyConfig cfg = small_config();
  Rng a(5), b(5), c(6);
  const ToyInstance x = gen_toy_instance(cfg, a);
  const ToyInstance y = gen_toy_instance(cfg, b);
  const ToyInstance z = gen_toy_instance(cfg, c);
  EXPECT_EQ(x.logits, y.logits);
  EXPECT_EQ(x.ref, y.ref);
  EXPECT_NE(x.logits, z.logits);
}

TEST(ToyInstance, StandardNormalLogits) {
  const ToyConfig cfg;  // 10 x 10000 entries
  Rng rng(7);
  const ToyInstance inst = gen_toy_instance(cfg, rng);
  RunningStats s;
  for (double z : inst.logits.flat()) s.push(z);
  EXPECT_EQ(s.count(), 100000u);
  EXPECT_NEAR(s.mean(), 0.0, 0.05);
  EXPECT_NEAR(s.variance(), 1.0, 0.05);
  EXPECT_EQ(inst.ref.size(), 10u);
  EXPECT_TRUE(RefNGramIndex(inst.ref, 1).unique_words());
}

TEST(ToyInstance, UniformReferenceTokens) {
  ToyConfig cfg;
  cfg.len = 10000;
  cfg.vocab_size = 10;
  cfg.allow_duplicate_refs = true;
  Rng rng(8);
  const ToyInstance inst = gen_toy_instance(cfg, rng);
  std::vector<double> counts(10, 0.0);
  for (TokenId id : inst.ref.ids) counts[id] += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  EXPECT_LT(chi2, 27.88);  // 0.999 quantile, 9 degrees of freedom
}

TEST(ToyConfig, Validation) {
  ToyConfig cfg;
  cfg.len = 1;
  cfg.bleu = BleuConfig::uniform(2);
  EXPECT_THROW(cfg.validate(), InvalidConfig);
  ToyConfig small_vocab;
  small_vocab.vocab_size = 5;
  EXPECT_THROW(small_vocab.validate(), InvalidConfig);
  small_vocab.allow_duplicate_refs = true;
  EXPECT_NO_THROW(small_vocab.validate());
  ToyConfig bad_lr;
  bad_lr.learning_rate = 0.0;
  EXPECT_THROW(bad_lr.validate(), InvalidConfig);
  EXPECT_THROW(run_toy(cfg), InvalidConfig);
}

TEST(RunToy, ZeroStepsGivesTheStartingPoint) {
  ToyConfig cfg = small_config();
  cfg.steps = 0;
  const ToyRun run = run_toy(cfg);
  ASSERT_EQ(run.curve.size(), 1u);
  const LbResult lb = lb_bleu(softmax_rows(run.initial.logits), run.initial.ref, cfg.bleu, false);
  EXPECT_EQ(run.curve[0].lb_aggregate, lb.aggregate);
  EXPECT_EQ(run.curve[0].step, 0u);
}

TEST(RunToy, CurveLayoutAndReproducibility) {
  ToyConfig cfg = small_config();
  const ToyRun a = run_toy(cfg);
  ASSERT_EQ(a.curve.size(), cfg.steps / cfg.eval_every + 1);
  EXPECT_EQ(a.curve.back().step, cfg.steps);
  const ToyRun b = run_toy(cfg);
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].lb_aggregate, b.curve[i].lb_aggregate);
    EXPECT_EQ(a.curve[i].mc_mean, b.curve[i].mc_mean);
  }
  cfg.steps = 50;
  const ToyRun c = run_toy(cfg);
  EXPECT_EQ(c.curve.back().step, 50u);
  EXPECT_EQ(c.curve.size(), 4u);
}

TEST(RunToy, TrainingRaisesTheBoundAndStaysBelowSampledBleu) {
  const ToyRun run = run_toy(small_config());
  EXPECT_GT(run.summary.final_lb, run.summary.initial_lb);
  EXPECT_GT(run.summary.final_argmax_bleu, run.summary.initial_argmax_bleu);
  EXPECT_EQ(run.summary.bound_violations, 0u);
  for (const CurvePoint& pt : run.curve) {
    EXPECT_GE(pt.lb_aggregate, 0.0);
    EXPECT_LE(pt.lb_aggregate, 1.0);
    EXPECT_GE(pt.mc_mean, 0.0);
    EXPECT_LE(pt.mc_mean, 1.0);
  }
}

TEST(RunToy, ThreadCountDoesNotChangeTheCurve) {
  ToyConfig cfg = small_config();
  cfg.steps = 20;
  const ToyRun a = run_toy(cfg);
  cfg.threads = 3;
  const ToyRun b = run_toy(cfg);
  for (std::size_t i = 0; i < a.curve.size(); ++i) EXPECT_EQ(a.curve[i].mc_mean, b.curve[i].mc_mean);
}

TEST(Curve, CsvHeaderAndSummary) {
  std::vector<CurvePoint> curve{{0, 0.1, 0.0, 0.2, 0.01}, {10, 0.3, 0.5, 0.25, 0.01}};
  std::ostringstream out;
  write_curve_csv(curve, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "step,lb,exact_argmax_bleu,mc_mean,mc_stderr");
  const ToySummary s = summarize_curve(curve);
  EXPECT_EQ(s.bound_violations, 1u);  // 0.3 > 0.25 + 3 * 0.01
  EXPECT_NEAR(s.correlation, 1.0, 1e-12);
  EXPECT_EQ(s.final_argmax_bleu, 0.5);
}

TEST(Reinforce, ZeroRewardGivesZeroGradient) {
  const Matrix z{{40, -40}, {40, -40}};
  const ReinforceEstimate e = reinforce_grad(z, TokenSeq{1, 1}, BleuConfig::uniform(1), 500, BaselineMode::None, 1);
  for (double g : e.grad_logits.flat()) EXPECT_EQ(g, 0.0);
  EXPECT_EQ(e.mean_reward, 0.0);
}

TEST(Reinforce, DeterministicGivenSeed) {
  Rng rng(40);
  const Matrix z = oracle::random_logits(rng, 3, 4);
  const TokenSeq ref{0, 1, 2};
  const auto a = reinforce_grad(z, ref, BleuConfig::uniform(2), 300, BaselineMode::Mean, 9);
  const auto b = reinforce_grad(z, ref, BleuConfig::uniform(2), 300, BaselineMode::Mean, 9, 3);
  EXPECT_EQ(a.grad_logits, b.grad_logits);
  EXPECT_EQ(a.grad_logits.rows(), 3u);
  EXPECT_EQ(a.grad_logits.cols(), 4u);
  const auto c = reinforce_grad(z, ref, BleuConfig::uniform(2), 300, BaselineMode::Mean, 10);
  EXPECT_NE(a.grad_logits, c.grad_logits);
  EXPECT_THROW(reinforce_grad(z, ref, BleuConfig::uniform(2), 0, BaselineMode::None, 1), InvalidConfig);
}

TEST(Reinforce, UnbiasedOnATinyInstance) {
  const Matrix z{{0.4, -0.3}, {-0.2, 0.5}};
  const TokenSeq ref{0, 1};
  const BleuConfig cfg = BleuConfig::uniform(2);
  const Matrix exact = exhaustive_bleu_gradient(z, ref, cfg);
  const ReinforceEstimate e = reinforce_grad(z, ref, cfg, 200000, BaselineMode::None, 11);
  for (std::size_t i = 0; i < exact.size(); ++i) {
    EXPECT_NEAR(e.grad_logits.flat()[i], exact.flat()[i], 3.0 * std::sqrt(e.entry_variance.flat()[i]) + 1e-6);
  }
}

TEST(Reinforce, MeanBaselineCutsVariance) {
  const Matrix z{{0.4, -0.3}, {-0.2, 0.5}};
  const TokenSeq ref{0, 1};
  const BleuConfig cfg = BleuConfig::uniform(1);
  const Matrix exact = exhaustive_bleu_gradient(z, ref, cfg);
  const auto plain = reinforce_grad(z, ref, cfg, 100000, BaselineMode::None, 12);
  const auto based = reinforce_grad(z, ref, cfg, 100000, BaselineMode::Mean, 12);
  double var_plain = 0.0, var_based = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    var_plain += plain.entry_variance.flat()[i];
    var_based += based.entry_variance.flat()[i];
    EXPECT_NEAR(based.grad_logits.flat()[i], exact.flat()[i], 4.0 * std::sqrt(based.entry_variance.flat()[i]) + 1e-6);
  }
  EXPECT_LT(var_based, var_plain);
  EXPECT_GT(based.baseline, 0.0);
}

TEST(CompareGradients, BoundIsDeterministicAndReinforceVarianceShrinks) {
  const Matrix z{{0.1, 0.7}, {-0.4, 0.2}};
  const GradientComparison c = compare_gradients(z, TokenSeq{1, 0}, BleuConfig::uniform(2), 5);
  EXPECT_TRUE(c.lb_deterministic);
  ASSERT_EQ(c.reinforce.size(), 3u);
  for (std::size_t k = 1; k < c.reinforce.size(); ++k) {
    EXPECT_GT(c.reinforce[k - 1].mean_entry_variance, 0.0);
    const double ratio = c.reinforce[k - 1].mean_entry_variance / c.reinforce[k].mean_entry_variance;
    EXPECT_NEAR(ratio, 4.0, 1.2);
  }
  EXPECT_THROW(compare_gradients(Matrix(8, 8), TokenSeq{0}, BleuConfig::uniform(1), 0), InstanceTooLarge);
}

TEST(CompareGradients, BoundGradientDirection) {
  // Reported, not asserted: how often the bound's gradient points into the
  // same half-space as the exact gradient of expected BLEU.
  Rng rng(41);
  int positive = 0;
  const int instances = 50;
  for (int trial = 0; trial < instances; ++trial) {
    const std::size_t v = 2 + rng.below(2);
    const std::size_t len = 1 + rng.below(3);
    const Matrix z = oracle::random_logits(rng, len, v);
    const TokenSeq ref = oracle::random_seq(rng, 1 + rng.below(3), v);
    const BleuConfig cfg = BleuConfig::uniform(1 + rng.below(2), false);
    const Matrix exact = exhaustive_bleu_gradient(z, ref, cfg);
    const Matrix lb = grad_lb(z, ref, cfg, false).grad_logits;
    positive += cosine_similarity(lb.flat(), exact.flat()) > 0.0;
  }
  RecordProperty("positive_cosine", positive);
  std::printf("bound gradient cosine > 0 on %d of %d instances\n", positive, instances);
}
