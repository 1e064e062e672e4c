// Built with relaxed floating-point flags where the compiler supports a
// vector exp. Keep non-finite handling out of this file.
#include <algorithm>
#include <cmath>

#include "detail/kernels.hpp"

namespace bleubound::detail {

BLEUBOUND_VECTOR_CLONES
void softmax_row(const double* in, double* out, std::size_t n) {
  double max = in[0];
#pragma omp simd reduction(max : max)
  for (std::size_t i = 1; i < n; ++i) max = std::max(max, in[i]);
  double sum = 0.0;
#pragma omp simd reduction(+ : sum)
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - max);
    sum += out[i];
  }
  const double inv = 1.0 / sum;
  for (std::size_t i = 0; i < n; ++i) out[i] *= inv;
}

}  // namespace bleubound::detail
