#include "bleubound/lower_bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "bleubound/errors.hpp"

namespace bleubound {
namespace {

double ngram_prob(const Matrix& probs, std::size_t start, const std::vector<TokenId>& gram) {
  double q = 1.0;
  for (std::size_t k = 0; k < gram.size(); ++k) q *= probs(start + k, gram[k]);
  return q;
}

void check_ref_ids(const TokenSeq& ref, std::size_t vocab_size) {
  for (auto id : ref.ids) {
    if (id >= vocab_size) {
      throw IdOutOfRange("reference token id " + std::to_string(id) + " >= vocab size " +
                         std::to_string(vocab_size));
    }
  }
}

}  // namespace

RefNGramIndex::RefNGramIndex(const TokenSeq& ref, std::size_t max_order)
    : by_order_(max_order), ref_len_(ref.size()) {
  if (max_order == 0) throw InvalidConfig("max_order must be >= 1");
  for (std::size_t n = 1; n <= max_order; ++n) {
    std::map<std::vector<TokenId>, std::size_t> slot;
    auto& grams = by_order_[n - 1];
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
      std::vector<TokenId> gram(ref.ids.begin() + i, ref.ids.begin() + i + n);
      auto [it, inserted] = slot.try_emplace(gram, grams.size());
      if (inserted) {
        grams.push_back({std::move(gram), 1});
      } else {
        ++grams[it->second].count;
      }
    }
  }
  std::map<TokenId, int> seen;
  for (auto id : ref.ids) {
    if (++seen[id] > 1) unique_words_ = false;
  }
}

OrderTrace trace_order(const Matrix& probs, const RefNGramIndex& index, std::size_t n) {
  if (n == 0 || n > index.max_order()) throw InvalidConfig("order outside the reference index");
  if (probs.rows() < n) {
    throw LengthTooShort("candidate of length " + std::to_string(probs.rows()) + " has no " +
                         std::to_string(n) + "-grams");
  }
  const auto& grams = index.order(n);
  OrderTrace tr;
  tr.order = n;
  tr.positions = ngram_positions(probs.rows(), n);
  tr.match_prob = Matrix(tr.positions, grams.size());
  tr.total.assign(grams.size(), 0.0);
  tr.ratio = Matrix(tr.positions, grams.size());

  for (std::size_t l = 0; l < tr.positions; ++l) {
    for (std::size_t g = 0; g < grams.size(); ++g) {
      const double q = ngram_prob(probs, l, grams[g].tokens);
      tr.match_prob(l, g) = q;
      tr.total[g] += q;
    }
  }
  double lb = 0.0;
  for (std::size_t l = 0; l < tr.positions; ++l) {
    for (std::size_t g = 0; g < grams.size(); ++g) {
      const double q = tr.match_prob(l, g);
      // 1 + sum over the other positions of their chance to form the same n-gram.
      const double r = static_cast<double>(grams[g].count) / (1.0 + (tr.total[g] - q));
      tr.ratio(l, g) = r;
      lb += q * std::min(1.0, r);
    }
  }
  tr.lb_overlap = lb;
  return tr;
}

double lb_overlap_component(const DistMatrix& p, const RefNGramIndex& index, std::size_t n,
                            std::size_t i) {
  if (n == 0 || n > index.max_order()) throw InvalidConfig("order outside the reference index");
  const Matrix& probs = p.probs();
  const std::size_t positions = ngram_positions(probs.rows(), n);
  if (i >= positions) {
    throw PositionOutOfRange("position " + std::to_string(i) + " outside 0.." +
                             std::to_string(positions == 0 ? 0 : positions - 1) + " for order " +
                             std::to_string(n));
  }
  double out = 0.0;
  for (const auto& gram : index.order(n)) {
    double competing = 0.0;
    for (std::size_t l = 0; l < positions; ++l) {
      if (l != i) competing += ngram_prob(probs, l, gram.tokens);
    }
    out += ngram_prob(probs, i, gram.tokens) *
           std::min(1.0, static_cast<double>(gram.count) / (1.0 + competing));
  }
  return out;
}

double lb_overlap(const DistMatrix& p, const RefNGramIndex& index, std::size_t n) {
  return trace_order(p.probs(), index, n).lb_overlap;
}

LbResult lb_bleu(const DistMatrix& p, const TokenSeq& ref, const BleuConfig& cfg, bool smoothing) {
  const std::size_t len = p.rows();
  if (len == 0) throw EmptyText("candidate distribution has no rows");
  if (ref.empty()) throw EmptyText("reference is empty");
  check_ref_ids(ref, p.vocab_size());
  const auto weights = effective_weights(cfg, len);
  const RefNGramIndex index(ref, cfg.max_order);

  LbResult out;
  out.smoothing = smoothing;
  out.weights = weights;
  out.proven_regime = index.unique_words();
  out.lb_overlaps.assign(cfg.max_order, 0.0);
  out.lb_precisions.assign(cfg.max_order, 0.0);
  out.smoothed.assign(cfg.max_order, 0.0);

  bool zero = false;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= cfg.max_order; ++n) {
    const std::size_t positions = ngram_positions(len, n);
    if (positions == 0) continue;
    const double lb = lb_overlap(p, index, n);
    out.lb_overlaps[n - 1] = lb;
    out.lb_precisions[n - 1] = lb / static_cast<double>(positions);
    out.smoothed[n - 1] = (lb + 1.0) / static_cast<double>(positions + 1);
    const double w = weights[n - 1];
    if (w <= 0.0) continue;
    const double prec = smoothing ? out.smoothed[n - 1] : out.lb_precisions[n - 1];
    if (prec <= 0.0) {
      zero = true;
    } else {
      log_sum += w * std::log(prec);
    }
  }
  out.aggregate = zero ? 0.0 : std::exp(log_sum);
  out.bound_value = out.aggregate - 1.0;
  return out;
}

double lb_kink_margin(const Matrix& probs, const TokenSeq& ref, const BleuConfig& cfg) {
  const auto weights = effective_weights(cfg, probs.rows());
  const RefNGramIndex index(ref, cfg.max_order);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= cfg.max_order; ++n) {
    if (weights[n - 1] <= 0.0) continue;
    const OrderTrace tr = trace_order(probs, index, n);
    for (double r : tr.ratio.flat()) margin = std::min(margin, std::abs(r - 1.0));
  }
  return margin;
}

ConvexityProbe convexity_probe(double a, double b, std::span<const double> c,
                               std::span<const double> x, std::span<const double> y,
                               double alpha) {
  if (c.empty() || c.size() != x.size() || c.size() != y.size()) {
    throw ShapeMismatch("convexity_probe: c, x and y must have the same positive length");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidConfig("alpha must lie in [0, 1]");
  auto f = [&](auto&& point) {
    double dot = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) dot += c[k] * point(k);
    return std::min(1.0, a / (1.0 + b + dot));
  };
  ConvexityProbe out;
  out.lhs = f([&](std::size_t k) { return alpha * x[k] + (1.0 - alpha) * y[k]; });
  out.rhs = alpha * f([&](std::size_t k) { return x[k]; }) +
            (1.0 - alpha) * f([&](std::size_t k) { return y[k]; });
  return out;
}

}  // namespace bleubound
