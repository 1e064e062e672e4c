#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bleubound/bleu.hpp"
#include "bleubound/rng.hpp"
#include "bleubound/text.hpp"

namespace bleubound {

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample_std / sqrt(samples)
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

struct ExactExpectation {
  double value = 0.0;
  std::uint64_t outcomes = 0;  // v^len, the number of candidate sequences enumerated
};

struct OracleOptions {
  // Candidate length is fixed by the shape of p, so BP is a constant factor;
  // it is left out unless requested.
  bool include_bp = false;
  unsigned threads = 1;  // 0 = all cores; results do not depend on this
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
};

// Inverse-CDF sampler over the rows of a probability matrix. Zero-probability
// entries are never drawn.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(const Matrix& probs);

  std::size_t rows() const noexcept { return rows_; }
  void sample_into(Rng& rng, TokenSeq& out) const;
  TokenSeq sample(Rng& rng) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> cdf_;
  std::vector<TokenId> last_nonzero_;
};

// One candidate with position t drawn independently from row t of p.
TokenSeq sample_candidate(const DistMatrix& p, Rng& rng);

// Mean of bleu(x_s, ref) over `samples` draws. Sample s uses the stream
// derive_seed(seed, s), so the estimate is reproducible for any thread count.
// Throws InvalidConfig when samples == 0.
McEstimate mc_expected_bleu(const DistMatrix& p, const TokenSeq& ref, const BleuConfig& cfg,
                            std::size_t samples, std::uint64_t seed,
                            const OracleOptions& opts = {});

// Number of candidate sequences v^len, or InstanceTooLarge past `cap`.
std::uint64_t count_outcomes(std::size_t len, std::size_t vocab_size, std::uint64_t cap);

// Exact E[O_n] by enumerating every candidate sequence. Throws InstanceTooLarge.
ExactExpectation exhaustive_expected_overlap(const DistMatrix& p, const TokenSeq& ref,
                                             std::size_t n, const OracleOptions& opts = {});

// Exact E[BLEU]. Throws InstanceTooLarge.
ExactExpectation exhaustive_expected_bleu(const DistMatrix& p, const TokenSeq& ref,
                                          const BleuConfig& cfg, const OracleOptions& opts = {});

}  // namespace bleubound
