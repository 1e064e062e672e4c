#include "bleubound/grad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bleubound/errors.hpp"
#include "bleubound/lower_bound.hpp"
#include "bleubound/rng.hpp"

namespace bleubound {
namespace {

// Feeds scale * d LB[O_n] / d probs[row][col] to add(row, col, value). Only
// columns holding reference tokens receive contributions.
template <typename Sink>
void accumulate_order(const Matrix& probs, const std::vector<RefNGram>& grams,
                      const OrderTrace& tr, double scale, Sink&& add) {
  const std::size_t n = tr.order;
  // Sensitivity of every unclamped term to the competing mass of its n-gram:
  // d/dT of q * c / (1 + T - q) is -q * r^2 / c.
  std::vector<double> competing(grams.size(), 0.0);
  for (std::size_t l = 0; l < tr.positions; ++l) {
    for (std::size_t g = 0; g < grams.size(); ++g) {
      const double r = tr.ratio(l, g);
      if (r < 1.0) {
        competing[g] += tr.match_prob(l, g) * r * r / static_cast<double>(grams[g].count);
      }
    }
  }
  for (std::size_t l = 0; l < tr.positions; ++l) {
    for (std::size_t g = 0; g < grams.size(); ++g) {
      const double r = tr.ratio(l, g);
      const double q = tr.match_prob(l, g);
      // Position l's own term does not compete with itself.
      const double self = r < 1.0 ? q * r * r / static_cast<double>(grams[g].count) : 0.0;
      const double d_q = scale * (std::min(1.0, r) - (competing[g] - self));
      if (d_q == 0.0) continue;
      const auto& tokens = grams[g].tokens;
      for (std::size_t k = 0; k < n; ++k) {
        double others = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j != k) others *= probs(l + j, tokens[j]);
        }
        add(l + k, tokens[k], d_q * others);
      }
    }
  }
}

double forward_objective(const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                         bool smoothing) {
  return lb_bleu(softmax_rows(logits), ref, cfg, smoothing).aggregate;
}

}  // namespace

Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs) {
  if (probs.rows() != grad_probs.rows() || probs.cols() != grad_probs.cols()) {
    throw ShapeMismatch("softmax_backward: shape mismatch");
  }
  Matrix out(probs.rows(), probs.cols());
  for (std::size_t t = 0; t < probs.rows(); ++t) {
    auto p = probs.row(t);
    auto g = grad_probs.row(t);
    auto o = out.row(t);
    double dot = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * g[j];
    for (std::size_t j = 0; j < p.size(); ++j) o[j] = p[j] * (g[j] - dot);
  }
  return out;
}

LbObjective::LbObjective(TokenSeq ref, BleuConfig cfg, bool smoothing)
    : ref_(std::move(ref)),
      cfg_(std::move(cfg)),
      smoothing_(smoothing),
      index_((cfg_.validate(), ref_), cfg_.max_order) {
  if (ref_.empty()) throw EmptyText("reference is empty");
}

double LbObjective::sparse_grad(const Matrix& probs) {
  const std::size_t len = probs.rows();
  if (len == 0) throw EmptyText("candidate distribution has no rows");
  for (auto id : ref_.ids) {
    if (id >= probs.cols()) {
      throw IdOutOfRange("reference token id " + std::to_string(id) + " >= vocab size " +
                         std::to_string(probs.cols()));
    }
  }
  const auto weights = effective_weights(cfg_, len);

  std::vector<OrderTrace> traces;
  std::vector<double> precisions;
  std::vector<double> denominators;
  bool zero = false;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= cfg_.max_order; ++n) {
    if (weights[n - 1] <= 0.0) continue;
    OrderTrace tr = trace_order(probs, index_, n);
    const double denom = static_cast<double>(smoothing_ ? tr.positions + 1 : tr.positions);
    const double prec = smoothing_ ? (tr.lb_overlap + 1.0) / denom : tr.lb_overlap / denom;
    if (prec <= 0.0) {
      zero = true;
    } else {
      log_sum += weights[n - 1] * std::log(prec);
    }
    precisions.push_back(prec);
    denominators.push_back(denom);
    traces.push_back(std::move(tr));
  }
  const double value = zero ? 0.0 : std::exp(log_sum);

  rows_.resize(len);
  for (auto& row : rows_) row.clear();
  if (value == 0.0) return value;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const std::size_t n = traces[k].order;
    // d aggregate / d LB[O_n] = aggregate * w_n / precision_n / denominator_n
    const double scale = value * weights[n - 1] / (precisions[k] * denominators[k]);
    accumulate_order(probs, index_.order(n), traces[k], scale,
                     [&](std::size_t r, std::size_t c, double v) { rows_[r].push_back({c, v}); });
  }
  return value;
}

double LbObjective::value_and_grad(const Matrix& logits, Matrix& grad_logits) {
  softmax_rows_into(logits, probs_);
  const double value = sparse_grad(probs_);
  if (grad_logits.rows() != logits.rows() || grad_logits.cols() != logits.cols()) {
    grad_logits = Matrix(logits.rows(), logits.cols());
  }
  // Softmax backward with a sparse upstream gradient g:
  // d/dz[t][j] = p[t][j] * g[t][j] - p[t][j] * sum_k p[t][k] g[t][k].
  for (std::size_t t = 0; t < probs_.rows(); ++t) {
    auto p = probs_.row(t);
    auto out = grad_logits.row(t);
    double dot = 0.0;
    for (const auto& e : rows_[t]) dot += p[e.col] * e.value;
    for (std::size_t j = 0; j < p.size(); ++j) out[j] = -p[j] * dot;
    for (const auto& e : rows_[t]) out[e.col] += p[e.col] * e.value;
  }
  return value;
}

double LbObjective::value_and_grad_probs(const Matrix& probs, Matrix& grad_probs) {
  const double value = sparse_grad(probs);
  grad_probs = Matrix(probs.rows(), probs.cols());
  for (std::size_t t = 0; t < rows_.size(); ++t) {
    for (const auto& e : rows_[t]) grad_probs(t, e.col) += e.value;
  }
  return value;
}

GradResult grad_lb(const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                   bool smoothing) {
  LbObjective objective(ref, cfg, smoothing);
  GradResult out;
  out.objective_value = objective.value_and_grad(logits, out.grad_logits);
  return out;
}

GradResult grad_lb_probs(const DistMatrix& p, const TokenSeq& ref, const BleuConfig& cfg,
                         bool smoothing) {
  LbObjective objective(ref, cfg, smoothing);
  GradResult out;
  out.objective_value = objective.value_and_grad_probs(p.probs(), out.grad_logits);
  return out;
}

FdReport finite_diff_check(const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                           bool smoothing, const FdOptions& opts) {
  if (!(opts.step > 0.0)) throw InvalidConfig("finite-difference step must be positive");
  const GradResult analytic =
      opts.gradient ? opts.gradient(logits, ref, cfg, smoothing) : grad_lb(logits, ref, cfg, smoothing);
  if (analytic.grad_logits.rows() != logits.rows() || analytic.grad_logits.cols() != logits.cols()) {
    throw ShapeMismatch("gradient shape differs from the logits");
  }

  std::vector<std::size_t> entries(logits.size());
  std::iota(entries.begin(), entries.end(), std::size_t{0});
  if (opts.entries != 0 && opts.entries < entries.size()) {
    Rng rng(opts.seed);
    for (std::size_t i = 0; i < opts.entries; ++i) {
      const auto j = i + rng.below(entries.size() - i);
      std::swap(entries[i], entries[j]);
    }
    entries.resize(opts.entries);
  }

  FdReport report;
  report.step = opts.step;
  Matrix probe = logits;
  auto flat = probe.flat();
  const auto grad = analytic.grad_logits.flat();
  for (std::size_t idx : entries) {
    const double saved = flat[idx];
    flat[idx] = saved + opts.step;
    const double up = forward_objective(probe, ref, cfg, smoothing);
    flat[idx] = saved - opts.step;
    const double down = forward_objective(probe, ref, cfg, smoothing);
    flat[idx] = saved;
    const double numeric = (up - down) / (2.0 * opts.step);
    const double abs_err = std::abs(numeric - grad[idx]);
    const double rel_err = abs_err / std::max({std::abs(grad[idx]), std::abs(numeric), kRelErrorFloor});
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    report.max_rel_error = std::max(report.max_rel_error, rel_err);
    ++report.entries_checked;
  }
  for (std::size_t t = 0; t < analytic.grad_logits.rows(); ++t) {
    auto row = analytic.grad_logits.row(t);
    report.max_row_sum = std::max(report.max_row_sum, std::abs(std::accumulate(row.begin(), row.end(), 0.0)));
  }
  return report;
}

GradSuiteReport gradient_suite(const GradSuiteOptions& opts) {
  if (opts.max_len == 0 || opts.max_vocab < 2) throw InvalidConfig("gradient suite needs max_len >= 1 and max_vocab >= 2");
  Rng rng(opts.seed);
  GradSuiteReport out;
  out.worst.step = opts.step;
  std::size_t done = 0;
  while (done < opts.instances) {
    const std::size_t len = 1 + rng.below(opts.max_len);
    const std::size_t vocab = 2 + rng.below(opts.max_vocab - 1);
    const std::size_t ref_len = 1 + rng.below(opts.max_len);
    TokenSeq ref;
    for (std::size_t i = 0; i < ref_len; ++i) ref.ids.push_back(static_cast<TokenId>(rng.below(vocab)));
    BleuConfig cfg = BleuConfig::uniform(1 + rng.below(4), false);
    const bool smoothing = rng.below(2) == 1;
    Matrix logits(len, vocab);
    for (double& z : logits.flat()) z = rng.normal();

    Matrix probs;
    softmax_rows_into(logits, probs);
    if (lb_kink_margin(probs, ref, cfg) < opts.kink_margin) {
      ++out.redrawn;
      continue;
    }
    FdOptions fd;
    fd.step = opts.step;
    fd.entries = opts.entries;
    fd.seed = derive_seed(opts.seed, done);
    fd.gradient = opts.gradient;
    const FdReport r = finite_diff_check(logits, ref, cfg, smoothing, fd);
    out.worst.max_rel_error = std::max(out.worst.max_rel_error, r.max_rel_error);
    out.worst.max_abs_error = std::max(out.worst.max_abs_error, r.max_abs_error);
    out.worst.max_row_sum = std::max(out.worst.max_row_sum, r.max_row_sum);
    out.worst.entries_checked += r.entries_checked;
    ++done;
  }
  out.instances = done;
  return out;
}

}  // namespace bleubound
