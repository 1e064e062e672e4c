#include "bleubound/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>

#include "bleubound/errors.hpp"

namespace bleubound {
namespace {

using NGramCounts = std::map<std::vector<TokenId>, std::size_t>;

NGramCounts count_ngrams(const TokenSeq& seq, std::size_t n) {
  NGramCounts counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    ++counts[std::vector<TokenId>(seq.ids.begin() + i, seq.ids.begin() + i + n)];
  }
  return counts;
}

bool same_ngram(const TokenSeq& a, std::size_t i, const TokenSeq& b, std::size_t j,
                std::size_t n) noexcept {
  for (std::size_t k = 0; k < n; ++k) {
    if (a[i + k] != b[j + k]) return false;
  }
  return true;
}

BleuBreakdown combine(std::vector<double> overlaps, std::vector<double> denominators,
                      std::size_t cand_len, std::size_t ref_len, const BleuConfig& cfg,
                      std::span<const double> weights) {
  BleuBreakdown out;
  out.cand_len = cand_len;
  out.ref_len = ref_len;
  out.precisions.assign(cfg.max_order, 0.0);
  out.weights.assign(weights.begin(), weights.end());
  bool zero = false;
  double log_sum = 0.0;
  for (std::size_t k = 0; k < cfg.max_order; ++k) {
    if (denominators[k] > 0.0) out.precisions[k] = overlaps[k] / denominators[k];
    if (weights[k] <= 0.0) continue;
    if (out.precisions[k] <= 0.0) {
      zero = true;
    } else {
      log_sum += weights[k] * std::log(out.precisions[k]);
    }
  }
  out.overlaps = std::move(overlaps);
  out.denominators = std::move(denominators);
  out.bp = cfg.use_bp ? brevity_penalty(cand_len, ref_len) : 1.0;
  out.score = zero ? 0.0 : out.bp * std::exp(log_sum);
  return out;
}

}  // namespace

BleuConfig BleuConfig::uniform(std::size_t max_order, bool use_bp) {
  BleuConfig cfg;
  cfg.max_order = max_order;
  cfg.use_bp = use_bp;
  return cfg;
}

void BleuConfig::validate() const {
  if (max_order == 0) throw InvalidConfig("max_order must be >= 1");
  if (weights.empty()) return;
  if (weights.size() != max_order) {
    throw InvalidConfig("expected " + std::to_string(max_order) + " weights, got " +
                        std::to_string(weights.size()));
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidConfig("weights must be finite and >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InvalidConfig("weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

double BleuConfig::weight(std::size_t n) const {
  return weights.empty() ? 1.0 / static_cast<double>(max_order) : weights.at(n - 1);
}

std::vector<double> effective_weights(const BleuConfig& cfg, std::size_t cand_len) {
  cfg.validate();
  std::vector<double> w(cfg.max_order, 0.0);
  double total = 0.0;
  for (std::size_t n = 1; n <= cfg.max_order; ++n) {
    if (ngram_positions(cand_len, n) == 0) {
      if (cfg.strict_orders) {
        throw LengthTooShort("candidate of length " + std::to_string(cand_len) +
                             " has no " + std::to_string(n) + "-grams");
      }
      continue;
    }
    w[n - 1] = cfg.weight(n);
    total += w[n - 1];
  }
  if (total <= 0.0) {
    throw LengthTooShort("no n-gram order with positive weight fits a candidate of length " +
                         std::to_string(cand_len));
  }
  for (double& x : w) x /= total;
  return w;
}

std::size_t count_overlap(const TokenSeq& cand, const TokenSeq& ref, std::size_t n) {
  if (n == 0) throw InvalidConfig("n-gram order must be >= 1");
  if (cand.size() < n || ref.size() < n) return 0;
  const auto cand_counts = count_ngrams(cand, n);
  const auto ref_counts = count_ngrams(ref, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand_counts) {
    if (auto it = ref_counts.find(gram); it != ref_counts.end()) {
      overlap += std::min(count, it->second);
    }
  }
  return overlap;
}

NGramStats ngram_stats(const OneHotSeq& x, const OneHotSeq& y, std::size_t n) {
  if (n == 0) throw InvalidConfig("n-gram order must be >= 1");
  if (x.vocab_size() != y.vocab_size()) {
    throw ShapeMismatch("candidate and reference one-hot matrices have different widths");
  }
  if (x.rows() < n || y.rows() < n) {
    throw LengthTooShort("texts of length " + std::to_string(x.rows()) + " and " +
                         std::to_string(y.rows()) + " have no common " + std::to_string(n) +
                         "-gram positions");
  }
  const std::size_t lx = ngram_positions(x.rows(), n);
  const std::size_t ly = ngram_positions(y.rows(), n);
  const TokenSeq& cx = x.ids();
  const TokenSeq& cy = y.ids();

  // Each entry is prod_k <x_{i+k}, x_{j+k}>; for one-hot rows every factor is
  // an equality indicator, so the product is an n-gram equality test.
  NGramStats s;
  s.order = n;
  s.self_match = Matrix(lx, lx);
  s.ref_match = Matrix(ly, lx);
  s.cand_counts.assign(lx, 0.0);
  s.ref_counts.assign(lx, 0.0);
  for (std::size_t i = 0; i < lx; ++i) {
    for (std::size_t j = 0; j < lx; ++j) s.self_match(i, j) = same_ngram(cx, i, cx, j, n) ? 1.0 : 0.0;
  }
  for (std::size_t i = 0; i < ly; ++i) {
    for (std::size_t j = 0; j < lx; ++j) s.ref_match(i, j) = same_ngram(cy, i, cx, j, n) ? 1.0 : 0.0;
  }
  for (std::size_t j = 0; j < lx; ++j) {
    for (std::size_t i = 0; i < lx; ++i) s.cand_counts[j] += s.self_match(i, j);
    for (std::size_t i = 0; i < ly; ++i) s.ref_counts[j] += s.ref_match(i, j);
  }
  return s;
}

double overlap_matrix_form(const OneHotSeq& x, const OneHotSeq& y, std::size_t n) {
  if (n == 0) throw InvalidConfig("n-gram order must be >= 1");
  // With no n-gram positions on either side the sum over candidate positions is empty.
  if (x.rows() < n || y.rows() < n) return 0.0;
  const NGramStats s = ngram_stats(x, y, n);
  double overlap = 0.0;
  for (std::size_t i = 0; i < s.cand_counts.size(); ++i) {
    overlap += std::min(1.0, s.ref_counts[i] / s.cand_counts[i]);
  }
  return overlap;
}

double brevity_penalty(std::size_t cand_len, std::size_t ref_len) {
  if (cand_len == 0 || ref_len == 0) throw ZeroLength("brevity penalty needs non-empty texts");
  if (cand_len > ref_len) return 1.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
}

BleuBreakdown bleu(const TokenSeq& cand, const TokenSeq& ref, const BleuConfig& cfg) {
  if (cand.empty() || ref.empty()) throw EmptyText("bleu needs non-empty candidate and reference");
  const auto weights = effective_weights(cfg, cand.size());
  std::vector<double> overlaps(cfg.max_order, 0.0);
  std::vector<double> denominators(cfg.max_order, 0.0);
  for (std::size_t n = 1; n <= cfg.max_order; ++n) {
    denominators[n - 1] = static_cast<double>(ngram_positions(cand.size(), n));
    overlaps[n - 1] = static_cast<double>(count_overlap(cand, ref, n));
  }
  return combine(std::move(overlaps), std::move(denominators), cand.size(), ref.size(), cfg,
                 weights);
}

BleuBreakdown corpus_bleu(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs,
                          const BleuConfig& cfg) {
  if (pairs.empty()) throw EmptyCorpus("corpus_bleu needs at least one pair");
  cfg.validate();
  std::vector<double> overlaps(cfg.max_order, 0.0);
  std::vector<double> denominators(cfg.max_order, 0.0);
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
  for (const auto& [cand, ref] : pairs) {
    if (cand.empty() || ref.empty()) throw EmptyText("corpus_bleu: empty candidate or reference");
    cand_len += cand.size();
    ref_len += ref.size();
    for (std::size_t n = 1; n <= cfg.max_order; ++n) {
      denominators[n - 1] += static_cast<double>(ngram_positions(cand.size(), n));
      overlaps[n - 1] += static_cast<double>(count_overlap(cand, ref, n));
    }
  }
  // Orders are skipped when no candidate in the corpus has an n-gram of that order.
  std::vector<double> weights(cfg.max_order, 0.0);
  double total = 0.0;
  for (std::size_t n = 1; n <= cfg.max_order; ++n) {
    if (denominators[n - 1] <= 0.0) {
      if (cfg.strict_orders) {
        throw LengthTooShort("no candidate has " + std::to_string(n) + "-grams");
      }
      continue;
    }
    weights[n - 1] = cfg.weight(n);
    total += weights[n - 1];
  }
  if (total <= 0.0) throw LengthTooShort("no n-gram order with positive weight fits the corpus");
  for (double& w : weights) w /= total;
  return combine(std::move(overlaps), std::move(denominators), cand_len, ref_len, cfg, weights);
}

}  // namespace bleubound
