#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bleubound/bleu.hpp"
#include "bleubound/expected.hpp"
#include "bleubound/matrix.hpp"
#include "bleubound/optimizer.hpp"
#include "bleubound/rng.hpp"
#include "bleubound/text.hpp"

namespace bleubound {

// Random-logits toy task: learn a [len x vocab_size] logits matrix whose
// row-wise softmax maximizes the bound on expected BLEU against a random
// reference of the same length.
struct ToyConfig {
  std::size_t len = 10;
  std::size_t vocab_size = 10000;
  BleuConfig bleu = BleuConfig::uniform(1);
  double learning_rate = 1e-4;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamParams adam;
  std::size_t steps = 20000;
  std::size_t eval_every = 200;
  std::size_t mc_samples = 10000;
  std::uint64_t seed = 0;
  // Smoothed precisions in the training objective. Curve points always
  // report the unsmoothed bound.
  bool smoothing = true;
  // The reference is drawn with replacement; unless this is set, draws with a
  // repeated word are rejected so the bound stays in its proven regime.
  bool allow_duplicate_refs = false;
  unsigned threads = 1;

  // Throws InvalidConfig.
  void validate() const;
};

struct ToyInstance {
  Matrix logits;
  TokenSeq ref;
};

struct CurvePoint {
  std::size_t step = 0;
  double lb_aggregate = 0.0;       // unsmoothed bound aggregate ("LB + 1")
  double exact_bleu_argmax = 0.0;  // BLEU of the row-wise argmax sentence
  double mc_mean = 0.0;            // sampled expected BLEU
  double mc_stderr = 0.0;
};

struct ToySummary {
  double initial_lb = 0.0;
  double final_lb = 0.0;
  double initial_argmax_bleu = 0.0;
  double final_argmax_bleu = 0.0;
  double initial_mc = 0.0;
  double final_mc = 0.0;
  double correlation = 0.0;  // Pearson(lb_aggregate, mc_mean) over the curve; NaN if flat
  // Curve points where lb_aggregate > mc_mean + 3 * mc_stderr + 1e-12.
  std::size_t bound_violations = 0;
};

struct ToyRun {
  ToyInstance initial;
  std::vector<CurvePoint> curve;
  ToySummary summary;
};

// Logits i.i.d. N(0, 1); reference ids uniform over the vocabulary.
ToyInstance gen_toy_instance(const ToyConfig& cfg, Rng& rng);

// Evaluates a curve point from logits without touching any gradient state.
CurvePoint evaluate_point(const Matrix& logits, const TokenSeq& ref, const ToyConfig& cfg,
                          std::size_t step);

// Gradient ascent on the bound for cfg.steps steps. Points are recorded at
// step 0, every eval_every steps, and at the final step.
ToyRun run_toy(const ToyConfig& cfg);

ToySummary summarize_curve(const std::vector<CurvePoint>& curve);

// CSV header: step,lb,exact_argmax_bleu,mc_mean,mc_stderr
void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& out);

enum class BaselineMode { None, Mean };

struct ReinforceEstimate {
  Matrix grad_logits;
  // Per-entry variance of the estimate, i.e. the sample variance of the
  // per-sample terms divided by the number of samples.
  Matrix entry_variance;
  std::size_t samples = 0;
  double baseline = 0.0;     // reward subtracted from every sample (0 without a baseline)
  double mean_reward = 0.0;
  std::uint64_t seed = 0;
};

// Score-function estimate of d E[BLEU] / d logits:
// mean_s (R_s - b) * sum_t d log p[t][x_t] / d logits, where the log-prob
// gradient for row t is onehot(x_t) - p[t]. The reward is the whole-sentence
// BLEU under cfg. Sample s uses the stream derive_seed(seed, s).
ReinforceEstimate reinforce_grad(const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                                 std::size_t samples, BaselineMode baseline, std::uint64_t seed,
                                 unsigned threads = 1);

// Gradient of the exhaustively computed E[BLEU] by central differences on
// every logit. BP is included when cfg.use_bp is set. Throws InstanceTooLarge.
Matrix exhaustive_bleu_gradient(const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                                double step = 1e-5,
                                std::uint64_t enumeration_cap = kDefaultEnumerationCap);

struct ReinforceComparison {
  std::size_t samples = 0;
  Matrix grad;
  Matrix entry_variance;
  double mean_entry_variance = 0.0;
  double cosine_to_exact = 0.0;
};

struct GradientComparison {
  Matrix exact_grad;
  Matrix lb_grad;
  // The bound gradient evaluated twice (different seeds have no input) is
  // bitwise identical.
  bool lb_deterministic = false;
  double lb_cosine_to_exact = 0.0;
  std::vector<ReinforceComparison> reinforce;
};

struct CompareOptions {
  std::vector<std::size_t> sample_counts = {1000, 4000, 16000};
  BaselineMode baseline = BaselineMode::None;
  double fd_step = 1e-5;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  unsigned threads = 1;
};

// Throws InstanceTooLarge when the exhaustive oracle is infeasible.
GradientComparison compare_gradients(const Matrix& logits, const TokenSeq& ref,
                                     const BleuConfig& cfg, std::uint64_t seed,
                                     const CompareOptions& opts = {});

}  // namespace bleubound
