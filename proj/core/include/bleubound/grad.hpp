#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "bleubound/bleu.hpp"
#include "bleubound/lower_bound.hpp"
#include "bleubound/matrix.hpp"
#include "bleubound/text.hpp"

namespace bleubound {

struct GradResult {
  double objective_value = 0.0;
  Matrix grad_logits;  // same shape as the logits
};

// The bound aggregate as a differentiable function of the logits, with the
// reference index and scratch buffers kept across calls. Not thread-safe;
// use one instance per thread.
class LbObjective {
 public:
  // Throws EmptyText, InvalidConfig.
  LbObjective(TokenSeq ref, BleuConfig cfg, bool smoothing);

  // Writes d aggregate / d logits into grad_logits (resized as needed) and
  // returns the aggregate. Throws NonFiniteInput, IdOutOfRange, LengthTooShort.
  double value_and_grad(const Matrix& logits, Matrix& grad_logits);

  // Gradient with respect to probabilities instead of logits.
  double value_and_grad_probs(const Matrix& probs, Matrix& grad_probs);

 private:
  struct Entry {
    std::size_t col;
    double value;
  };
  double sparse_grad(const Matrix& probs);

  TokenSeq ref_;
  BleuConfig cfg_;
  bool smoothing_;
  RefNGramIndex index_;
  Matrix probs_;
  std::vector<std::vector<Entry>> rows_;  // sparse d aggregate / d probs
};

// Value and exact gradient of lb_bleu(softmax_rows(logits), ref, cfg,
// smoothing).aggregate with respect to the logits.
//
// The derivative of min(1, r) is taken as 0 at r == 1. When the aggregate is
// 0 (some used precision is 0) the gradient is 0.
// Throws NonFiniteInput, EmptyText, IdOutOfRange, InvalidConfig.
GradResult grad_lb(const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                   bool smoothing = false);

// Same objective, differentiated with respect to the probabilities. Useful on
// degenerate distributions, which have no finite logits.
GradResult grad_lb_probs(const DistMatrix& p, const TokenSeq& ref, const BleuConfig& cfg,
                         bool smoothing = false);

// Pulls a gradient with respect to softmax outputs back to the logits:
// g_z[t][j] = p[t][j] * (g_p[t][j] - sum_k p[t][k] g_p[t][k]).
Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs);

using GradientFn =
    std::function<GradResult(const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                             bool smoothing)>;

// Central differences at step 1e-5 carry round-off near 1e-11, so entries
// smaller than this floor are compared on an absolute scale.
inline constexpr double kRelErrorFloor = 1e-6;

struct FdOptions {
  double step = 1e-5;
  // Number of logit entries to check, drawn without replacement; 0 checks all.
  std::size_t entries = 0;
  std::uint64_t seed = 0;
  // Gradient under test; grad_lb when empty.
  GradientFn gradient;
};

struct FdReport {
  double max_rel_error = 0.0;  // |a - n| / max(|a|, |n|, kRelErrorFloor)
  double max_abs_error = 0.0;
  double step = 0.0;
  std::size_t entries_checked = 0;
  double max_row_sum = 0.0;    // largest |sum_j grad[t][j]|
};

// Central differences of the forward objective against the analytic gradient.
FdReport finite_diff_check(const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                           bool smoothing, const FdOptions& opts = {});

// Random-instance gradient suite used by the gradcheck command.
struct GradSuiteOptions {
  std::size_t instances = 100;
  std::size_t max_len = 6;
  std::size_t max_vocab = 8;
  double step = 1e-5;
  // Instances with any min(1, r) argument within this distance of 1 are
  // redrawn: the objective has a kink there.
  double kink_margin = 1e-3;
  std::uint64_t seed = 0;
  std::size_t entries = 0;
  GradientFn gradient;
};

struct GradSuiteReport {
  FdReport worst;             // maxima over all instances
  std::size_t instances = 0;
  std::size_t redrawn = 0;    // instances rejected for lying near a kink
};

GradSuiteReport gradient_suite(const GradSuiteOptions& opts = {});

}  // namespace bleubound
