#pragma once

#include <cstddef>

// Extra AVX2 builds of hot loops, picked at load time. Results may differ in
// the last bits between the two builds.
#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__) && defined(__linux__)
#define BLEUBOUND_VECTOR_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define BLEUBOUND_VECTOR_CLONES
#endif

namespace bleubound::detail {

// Softmax of one row of n >= 1 finite values.
void softmax_row(const double* in, double* out, std::size_t n);

}  // namespace bleubound::detail
