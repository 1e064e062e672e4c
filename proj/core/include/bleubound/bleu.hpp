#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "bleubound/matrix.hpp"
#include "bleubound/text.hpp"

namespace bleubound {

struct BleuConfig {
  std::size_t max_order = 4;
  // Per-order weights w_1..w_N. Empty means uniform 1/N.
  std::vector<double> weights;
  bool use_bp = true;
  // Orders longer than the candidate are normally skipped and the remaining
  // weights renormalized. With strict_orders they raise LengthTooShort instead.
  bool strict_orders = false;

  static BleuConfig uniform(std::size_t max_order, bool use_bp = true);

  // Throws InvalidConfig: N >= 1, |weights| in {0, N}, w_n >= 0, sum = 1 within 1e-12.
  void validate() const;
  // Weight of order n (1-based) before any renormalization.
  double weight(std::size_t n) const;
};

// Effective per-order weights (index n-1) for a candidate with `positions(n)`
// n-gram positions: orders with no positions get weight 0 and the rest are
// renormalized to sum to 1. Throws LengthTooShort when nothing is left (or
// under strict_orders when any order is skipped).
std::vector<double> effective_weights(const BleuConfig& cfg, std::size_t cand_len);

// Number of n-gram positions in a text of length len, max(0, len - n + 1).
constexpr std::size_t ngram_positions(std::size_t len, std::size_t n) noexcept {
  return len >= n ? len - n + 1 : 0;
}

// Match matrices and column-sum counters of one n-gram order for a
// candidate/reference pair in one-hot form.
struct NGramStats {
  std::size_t order = 0;
  Matrix self_match;               // S^n, [(len_x-n+1) x (len_x-n+1)]
  Matrix ref_match;                // P^n, [(len_y-n+1) x (len_x-n+1)]
  std::vector<double> cand_counts; // v^{x,n}: column sums of S^n
  std::vector<double> ref_counts;  // v^{y,n}: column sums of P^n
};

struct BleuBreakdown {
  std::vector<double> overlaps;        // O_n, index n-1
  std::vector<double> denominators;    // candidate n-gram positions
  std::vector<double> precisions;      // p_n; 0 for skipped orders
  std::vector<double> weights;         // effective weights used in the score
  double bp = 1.0;
  double score = 0.0;
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
};

// Clipped n-gram matches: sum over distinct candidate n-grams of
// min(Count_C, Count_R). Throws InvalidConfig when n == 0.
std::size_t count_overlap(const TokenSeq& cand, const TokenSeq& ref, std::size_t n);

// Throws LengthTooShort (either text shorter than n), ShapeMismatch (vocab sizes differ).
NGramStats ngram_stats(const OneHotSeq& x, const OneHotSeq& y, std::size_t n);

// sum_i min(1, v^{y,n}_i / v^{x,n}_i). 0 when either text is shorter than n.
double overlap_matrix_form(const OneHotSeq& x, const OneHotSeq& y, std::size_t n);

// 1 if c > r else exp(1 - r/c). Throws ZeroLength.
double brevity_penalty(std::size_t cand_len, std::size_t ref_len);

// Throws EmptyText, InvalidConfig, LengthTooShort.
BleuBreakdown bleu(const TokenSeq& cand, const TokenSeq& ref, const BleuConfig& cfg);

// Micro-averaged corpus BLEU: overlaps, denominators and lengths are summed
// over pairs before the precisions are formed. Throws EmptyCorpus, EmptyText.
BleuBreakdown corpus_bleu(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs,
                          const BleuConfig& cfg);

}  // namespace bleubound
