#include "bleubound/trainers.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <string>

#include "bleubound/errors.hpp"
#include "bleubound/grad.hpp"
#include "bleubound/lower_bound.hpp"
#include "bleubound/parallel.hpp"
#include "bleubound/stats.hpp"

namespace bleubound {
namespace {

constexpr std::uint64_t kInstanceStream = 0;
constexpr std::uint64_t kEvalStream = 1;

bool has_duplicates(const TokenSeq& seq) {
  std::set<TokenId> seen(seq.ids.begin(), seq.ids.end());
  return seen.size() != seq.size();
}

}  // namespace

void ToyConfig::validate() const {
  bleu.validate();
  if (len == 0 || vocab_size == 0) throw InvalidConfig("len and vocab_size must be positive");
  if (len < bleu.max_order) {
    throw InvalidConfig("len (" + std::to_string(len) + ") must be >= max_order (" +
                        std::to_string(bleu.max_order) + ")");
  }
  if (!(learning_rate > 0.0)) throw InvalidConfig("learning_rate must be positive");
  if (eval_every == 0) throw InvalidConfig("eval_every must be positive");
  if (mc_samples == 0) throw InvalidConfig("mc_samples must be positive");
  if (!allow_duplicate_refs && vocab_size < len) {
    throw InvalidConfig("a duplicate-free reference needs vocab_size >= len");
  }
  if (optimizer == OptimizerKind::Adam &&
      !(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 &&
        adam.epsilon > 0.0)) {
    throw InvalidConfig("adam needs beta1, beta2 in [0, 1) and epsilon > 0");
  }
}

ToyInstance gen_toy_instance(const ToyConfig& cfg, Rng& rng) {
  ToyInstance inst;
  inst.logits = Matrix(cfg.len, cfg.vocab_size);
  for (double& z : inst.logits.flat()) z = rng.normal();
  do {
    inst.ref.ids.clear();
    for (std::size_t i = 0; i < cfg.len; ++i) {
      inst.ref.ids.push_back(static_cast<TokenId>(rng.below(cfg.vocab_size)));
    }
  } while (!cfg.allow_duplicate_refs && has_duplicates(inst.ref));
  return inst;
}

CurvePoint evaluate_point(const Matrix& logits, const TokenSeq& ref, const ToyConfig& cfg,
                          std::size_t step) {
  const DistMatrix p = softmax_rows(logits);
  CurvePoint pt;
  pt.step = step;
  pt.lb_aggregate = lb_bleu(p, ref, cfg.bleu, false).aggregate;
  pt.exact_bleu_argmax = bleu(argmax_decode(p), ref, cfg.bleu).score;
  OracleOptions oracle;
  oracle.threads = cfg.threads;
  const std::uint64_t mc_seed = derive_seed(derive_seed(cfg.seed, kEvalStream), step);
  const McEstimate mc = mc_expected_bleu(p, ref, cfg.bleu, cfg.mc_samples, mc_seed, oracle);
  pt.mc_mean = mc.mean;
  pt.mc_stderr = mc.std_error;
  return pt;
}

ToySummary summarize_curve(const std::vector<CurvePoint>& curve) {
  ToySummary s;
  if (curve.empty()) return s;
  s.initial_lb = curve.front().lb_aggregate;
  s.final_lb = curve.back().lb_aggregate;
  s.initial_argmax_bleu = curve.front().exact_bleu_argmax;
  s.final_argmax_bleu = curve.back().exact_bleu_argmax;
  s.initial_mc = curve.front().mc_mean;
  s.final_mc = curve.back().mc_mean;
  std::vector<double> lb, mc;
  for (const auto& pt : curve) {
    lb.push_back(pt.lb_aggregate);
    mc.push_back(pt.mc_mean);
    if (pt.lb_aggregate > pt.mc_mean + 3.0 * pt.mc_stderr + 1e-12) ++s.bound_violations;
  }
  s.correlation = pearson(lb, mc);
  return s;
}

ToyRun run_toy(const ToyConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, kInstanceStream));
  ToyRun run;
  run.initial = gen_toy_instance(cfg, rng);

  Matrix logits = run.initial.logits;
  const auto optimizer =
      make_optimizer(cfg.optimizer, logits.size(), cfg.learning_rate, cfg.adam);
  LbObjective objective(run.initial.ref, cfg.bleu, cfg.smoothing);
  Matrix ascent;
  std::vector<double> loss_grad(logits.size());
  for (std::size_t step = 0;; ++step) {
    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      run.curve.push_back(evaluate_point(logits, run.initial.ref, cfg, step));
    }
    if (step == cfg.steps) break;
    objective.value_and_grad(logits, ascent);
    // Maximize the aggregate: minimize loss = -aggregate.
    const auto up = ascent.flat();
    for (std::size_t i = 0; i < up.size(); ++i) loss_grad[i] = -up[i];
    optimizer->step(logits.flat(), loss_grad);
  }
  run.summary = summarize_curve(run.curve);
  return run;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& out) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "step,lb,exact_argmax_bleu,mc_mean,mc_stderr\n";
  for (const auto& pt : curve) {
    out << pt.step << ',' << pt.lb_aggregate << ',' << pt.exact_bleu_argmax << ',' << pt.mc_mean
        << ',' << pt.mc_stderr << '\n';
  }
  out.precision(old_precision);
}

ReinforceEstimate reinforce_grad(const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                                 std::size_t samples, BaselineMode baseline, std::uint64_t seed,
                                 unsigned threads) {
  if (samples == 0) throw InvalidConfig("reinforce_grad needs at least one sample");
  if (ref.empty()) throw EmptyText("reference is empty");
  cfg.validate();
  const DistMatrix p = softmax_rows(logits);
  const std::size_t len = p.rows();
  const std::size_t v = p.vocab_size();
  if (len == 0) throw EmptyText("logits have no rows");
  const CategoricalSampler sampler(p.probs());

  std::vector<TokenId> drawn(samples * len);
  std::vector<double> rewards(samples);
  parallel_for(samples, threads, [&](std::size_t s) {
    Rng rng(derive_seed(seed, s));
    TokenSeq x = sampler.sample(rng);
    std::copy(x.ids.begin(), x.ids.end(), drawn.begin() + static_cast<std::ptrdiff_t>(s * len));
    rewards[s] = bleu(x, ref, cfg).score;
  });

  ReinforceEstimate est;
  est.samples = samples;
  est.seed = seed;
  est.mean_reward = pairwise_sum(rewards) / static_cast<double>(samples);
  est.baseline = baseline == BaselineMode::Mean ? est.mean_reward : 0.0;

  // Per-entry Welford accumulators of (R_s - b) * (onehot(x_t) - p[t]).
  std::vector<RunningStats> stats(len * v);
  for (std::size_t s = 0; s < samples; ++s) {
    const double adv = rewards[s] - est.baseline;
    for (std::size_t t = 0; t < len; ++t) {
      const TokenId chosen = drawn[s * len + t];
      for (std::size_t j = 0; j < v; ++j) {
        const double indicator = j == chosen ? 1.0 : 0.0;
        stats[t * v + j].push(adv * (indicator - p.prob(t, j)));
      }
    }
  }
  est.grad_logits = Matrix(len, v);
  est.entry_variance = Matrix(len, v);
  for (std::size_t i = 0; i < stats.size(); ++i) {
    est.grad_logits.flat()[i] = stats[i].mean();
    est.entry_variance.flat()[i] = stats[i].variance() / static_cast<double>(samples);
  }
  return est;
}

Matrix exhaustive_bleu_gradient(const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                                double step, std::uint64_t enumeration_cap) {
  if (!(step > 0.0)) throw InvalidConfig("finite-difference step must be positive");
  OracleOptions oracle;
  oracle.include_bp = cfg.use_bp;
  oracle.enumeration_cap = enumeration_cap;
  count_outcomes(logits.rows(), logits.cols(), enumeration_cap);

  Matrix grad(logits.rows(), logits.cols());
  Matrix probe = logits;
  auto flat = probe.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + step;
    const double up = exhaustive_expected_bleu(softmax_rows(probe), ref, cfg, oracle).value;
    flat[i] = saved - step;
    const double down = exhaustive_expected_bleu(softmax_rows(probe), ref, cfg, oracle).value;
    flat[i] = saved;
    grad.flat()[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

GradientComparison compare_gradients(const Matrix& logits, const TokenSeq& ref,
                                     const BleuConfig& cfg, std::uint64_t seed,
                                     const CompareOptions& opts) {
  GradientComparison out;
  out.exact_grad = exhaustive_bleu_gradient(logits, ref, cfg, opts.fd_step, opts.enumeration_cap);
  out.lb_grad = grad_lb(logits, ref, cfg, false).grad_logits;
  out.lb_deterministic = grad_lb(logits, ref, cfg, false).grad_logits == out.lb_grad;
  out.lb_cosine_to_exact = cosine_similarity(out.lb_grad.flat(), out.exact_grad.flat());
  for (std::size_t k = 0; k < opts.sample_counts.size(); ++k) {
    const std::size_t samples = opts.sample_counts[k];
    const ReinforceEstimate est = reinforce_grad(logits, ref, cfg, samples, opts.baseline,
                                                 derive_seed(seed, k), opts.threads);
    ReinforceComparison row;
    row.samples = samples;
    row.grad = est.grad_logits;
    row.entry_variance = est.entry_variance;
    double total = 0.0;
    for (double var : est.entry_variance.flat()) total += var;
    row.mean_entry_variance = total / static_cast<double>(est.entry_variance.size());
    row.cosine_to_exact = cosine_similarity(est.grad_logits.flat(), out.exact_grad.flat());
    out.reinforce.push_back(std::move(row));
  }
  return out;
}

}  // namespace bleubound
