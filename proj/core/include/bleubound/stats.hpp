#pragma once

#include <cstddef>
#include <span>

namespace bleubound {

// Welford accumulator for mean and unbiased variance.
class RunningStats {
 public:
  void push(double x) noexcept;
  void merge(const RunningStats& other) noexcept;

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  // Unbiased sample variance; 0 when fewer than two observations.
  double variance() const noexcept;
  // Standard error of the mean, sample_std / sqrt(n).
  double std_error() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Pairwise summation; result depends only on the input order.
double pairwise_sum(std::span<const double> values) noexcept;

// Pearson correlation. Returns NaN when either series has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

// Cosine similarity. Returns 0 when either vector is all zeros.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace bleubound
