#include "bleubound/expected.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bleubound/errors.hpp"
#include "bleubound/parallel.hpp"
#include "bleubound/stats.hpp"

namespace bleubound {
namespace {

constexpr std::uint64_t kEnumerationChunk = 4096;

// Sums prob(x) * fn(x) over all candidate sequences. Outcomes are processed in
// fixed-size chunks whose partial sums are combined in index order, so the
// result is identical for every thread count.
template <typename Fn>
ExactExpectation enumerate_expectation(const Matrix& probs, const OracleOptions& opts, Fn&& fn) {
  const std::size_t len = probs.rows();
  const std::size_t v = probs.cols();
  const std::uint64_t outcomes = count_outcomes(len, v, opts.enumeration_cap);
  const std::uint64_t chunks = (outcomes + kEnumerationChunk - 1) / kEnumerationChunk;
  std::vector<double> partial(chunks, 0.0);

  parallel_for(chunks, opts.threads, [&](std::size_t chunk) {
    const std::uint64_t begin = chunk * kEnumerationChunk;
    const std::uint64_t end = std::min(outcomes, begin + kEnumerationChunk);
    // Mixed-radix digits of `begin`; position len-1 is least significant.
    TokenSeq x;
    x.ids.assign(len, 0);
    std::uint64_t rest = begin;
    for (std::size_t t = len; t-- > 0;) {
      x.ids[t] = static_cast<TokenId>(rest % v);
      rest /= v;
    }
    double sum = 0.0;
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      double prob = 1.0;
      for (std::size_t t = 0; t < len && prob != 0.0; ++t) prob *= probs(t, x[t]);
      if (prob != 0.0) sum += prob * fn(x);
      for (std::size_t t = len; t-- > 0;) {
        if (++x.ids[t] < v) break;
        x.ids[t] = 0;
      }
    }
    partial[chunk] = sum;
  });
  return {pairwise_sum(partial), outcomes};
}

void check_ref(const TokenSeq& ref, std::size_t vocab_size) {
  if (ref.empty()) throw EmptyText("reference is empty");
  for (auto id : ref.ids) {
    if (id >= vocab_size) {
      throw IdOutOfRange("reference token id " + std::to_string(id) + " >= vocab size " +
                         std::to_string(vocab_size));
    }
  }
}

}  // namespace

CategoricalSampler::CategoricalSampler(const Matrix& probs)
    : rows_(probs.rows()), cols_(probs.cols()), cdf_(probs.size()), last_nonzero_(probs.rows(), 0) {
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) {
      acc += probs(r, c);
      cdf_[r * cols_ + c] = acc;
      if (probs(r, c) > 0.0) last_nonzero_[r] = static_cast<TokenId>(c);
    }
  }
}

void CategoricalSampler::sample_into(Rng& rng, TokenSeq& out) const {
  out.ids.resize(rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double u = rng.uniform();
    const auto begin = cdf_.begin() + static_cast<std::ptrdiff_t>(r * cols_);
    const auto end = begin + static_cast<std::ptrdiff_t>(cols_);
    const auto it = std::upper_bound(begin, end, u);
    // u can land past a row total that rounds to slightly below 1.
    out.ids[r] = it == end ? last_nonzero_[r] : static_cast<TokenId>(it - begin);
  }
}

TokenSeq CategoricalSampler::sample(Rng& rng) const {
  TokenSeq out;
  sample_into(rng, out);
  return out;
}

TokenSeq sample_candidate(const DistMatrix& p, Rng& rng) {
  return CategoricalSampler(p.probs()).sample(rng);
}

McEstimate mc_expected_bleu(const DistMatrix& p, const TokenSeq& ref, const BleuConfig& cfg,
                            std::size_t samples, std::uint64_t seed, const OracleOptions& opts) {
  if (samples == 0) throw InvalidConfig("mc_expected_bleu needs at least one sample");
  check_ref(ref, p.vocab_size());
  BleuConfig eval_cfg = cfg;
  eval_cfg.use_bp = opts.include_bp;
  eval_cfg.validate();

  const CategoricalSampler sampler(p.probs());
  std::vector<double> rewards(samples);
  parallel_for(samples, opts.threads, [&](std::size_t s) {
    Rng rng(derive_seed(seed, s));
    rewards[s] = bleu(sampler.sample(rng), ref, eval_cfg).score;
  });

  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  // Constant rewards: report the value itself rather than a rounded average.
  if (*lo == *hi) return {*lo, 0.0, samples, seed};
  const double mean = pairwise_sum(rewards) / static_cast<double>(samples);
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double var = samples > 1 ? ss / static_cast<double>(samples - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(samples)), samples, seed};
}

std::uint64_t count_outcomes(std::size_t len, std::size_t vocab_size, std::uint64_t cap) {
  if (vocab_size == 0) throw InvalidConfig("empty vocabulary");
  std::uint64_t total = 1;
  for (std::size_t t = 0; t < len; ++t) {
    if (total > cap / vocab_size) {
      throw InstanceTooLarge(std::to_string(vocab_size) + "^" + std::to_string(len) +
                             " outcomes exceed the enumeration cap of " + std::to_string(cap));
    }
    total *= vocab_size;
  }
  if (total > cap) {
    throw InstanceTooLarge("outcome count exceeds the enumeration cap of " + std::to_string(cap));
  }
  return total;
}

ExactExpectation exhaustive_expected_overlap(const DistMatrix& p, const TokenSeq& ref,
                                             std::size_t n, const OracleOptions& opts) {
  if (n == 0) throw InvalidConfig("n-gram order must be >= 1");
  check_ref(ref, p.vocab_size());
  return enumerate_expectation(p.probs(), opts, [&](const TokenSeq& x) {
    return static_cast<double>(count_overlap(x, ref, n));
  });
}

ExactExpectation exhaustive_expected_bleu(const DistMatrix& p, const TokenSeq& ref,
                                          const BleuConfig& cfg, const OracleOptions& opts) {
  check_ref(ref, p.vocab_size());
  if (p.rows() == 0) throw EmptyText("candidate distribution has no rows");
  BleuConfig eval_cfg = cfg;
  eval_cfg.use_bp = opts.include_bp;
  eval_cfg.validate();
  return enumerate_expectation(p.probs(), opts,
                               [&](const TokenSeq& x) { return bleu(x, ref, eval_cfg).score; });
}

}  // namespace bleubound
