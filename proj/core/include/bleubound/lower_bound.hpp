#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bleubound/bleu.hpp"
#include "bleubound/matrix.hpp"
#include "bleubound/text.hpp"

namespace bleubound {

// A distinct reference n-gram and its multiplicity Count_R.
struct RefNGram {
  std::vector<TokenId> tokens;
  std::size_t count = 0;
};

// Distinct reference n-grams per order, in first-occurrence order.
//
// Only these n-grams can contribute to the bound: any other label tuple has
// Count_R = 0 in the numerator of its min(1, .) term, so the bound is
// evaluated over this list instead of all v^n tuples.
class RefNGramIndex {
 public:
  RefNGramIndex(const TokenSeq& ref, std::size_t max_order);

  std::size_t max_order() const noexcept { return by_order_.size(); }
  std::size_t ref_len() const noexcept { return ref_len_; }
  // n is 1-based. Empty when the reference is shorter than n.
  const std::vector<RefNGram>& order(std::size_t n) const { return by_order_.at(n - 1); }
  // True when no word repeats in the reference, the regime in which the
  // bound is proven.
  bool unique_words() const noexcept { return unique_words_; }

 private:
  std::vector<std::vector<RefNGram>> by_order_;
  std::size_t ref_len_ = 0;
  bool unique_words_ = true;
};

// Intermediate quantities of one order of the bound. With q[l][g] the
// probability that candidate position l starts reference n-gram g,
//
//   T[g]       = sum_l q[l][g]
//   ratio[l][g] = Count_R(g) / (1 + T[g] - q[l][g])
//   LB[O_n]    = sum_l sum_g q[l][g] * min(1, ratio[l][g])
//
// The gradient engine reuses the trace instead of recomputing it.
struct OrderTrace {
  std::size_t order = 0;
  std::size_t positions = 0;  // len_x - n + 1
  Matrix match_prob;          // q, [positions x distinct ref n-grams]
  std::vector<double> total;  // T
  Matrix ratio;
  double lb_overlap = 0.0;
};

// Throws LengthTooShort when probs has fewer than n rows.
OrderTrace trace_order(const Matrix& probs, const RefNGramIndex& index, std::size_t n);

// Lower bound on E[O_n^i] for candidate position i, evaluated straight from
// its definition. Throws PositionOutOfRange, ShapeMismatch.
double lb_overlap_component(const DistMatrix& p, const RefNGramIndex& index, std::size_t n,
                            std::size_t i);

// Lower bound on E[O_n], the sum of the per-position components. 0 when the
// reference is shorter than n. Throws LengthTooShort.
double lb_overlap(const DistMatrix& p, const RefNGramIndex& index, std::size_t n);

struct LbResult {
  // Index n-1. Orders skipped because the candidate is too short hold 0.
  std::vector<double> lb_overlaps;    // LB[O_n]
  std::vector<double> lb_precisions;  // LB[O_n] / (len_x - n + 1)
  std::vector<double> smoothed;       // (LB[O_n] + 1) / (len_x - n + 2)
  std::vector<double> weights;        // effective weights after skipping orders
  bool smoothing = false;             // which precisions entered `aggregate`
  double aggregate = 0.0;             // prod_n precision_n^{w_n}
  double bound_value = -1.0;          // aggregate - 1, the stated bound on E[BLEU]
  // False when the reference repeats a word; the bound is then evaluated
  // with Count_R > 1 but is outside the proven regime.
  bool proven_regime = true;
};

// Aggregated bound over orders 1..N. The brevity penalty is not part of the
// bound. Throws EmptyText, IdOutOfRange, InvalidConfig, LengthTooShort.
LbResult lb_bleu(const DistMatrix& p, const TokenSeq& ref, const BleuConfig& cfg,
                 bool smoothing = false);

// Smallest |ratio - 1| over every min(1, ratio) term entering lb_bleu with a
// positive weight. The objective is not differentiable where this is 0.
double lb_kink_margin(const Matrix& probs, const TokenSeq& ref, const BleuConfig& cfg);

struct ConvexityProbe {
  double lhs = 0.0;  // f(alpha x + (1 - alpha) y)
  double rhs = 0.0;  // alpha f(x) + (1 - alpha) f(y)
};

// Evaluates both sides of the convexity inequality for
// f(z) = min(1, A / (1 + B + c.z)). Throws ShapeMismatch, InvalidConfig.
ConvexityProbe convexity_probe(double a, double b, std::span<const double> c,
                               std::span<const double> x, std::span<const double> y,
                               double alpha);

}  // namespace bleubound
