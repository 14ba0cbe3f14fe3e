// Built with -mavx2 (and no -mfma) when the compiler targets x86-64; the
// dispatcher only calls into here after a CPUID check.
#include "ecodiv/kernels.hpp"

#if defined(ECODIV_HAVE_AVX2)
#include <immintrin.h>
#endif

namespace ecodiv::kernels::avx2 {

#if defined(ECODIV_HAVE_AVX2)

bool compiled() { return true; }

void smoothed_fill(std::span<const double> counts, double alpha, double denom, std::span<double> out) {
  const std::size_t n = counts.size();
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vd = _mm256_set1_pd(denom);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d c = _mm256_loadu_pd(counts.data() + i);
    _mm256_storeu_pd(out.data() + i, _mm256_div_pd(_mm256_add_pd(c, va), vd));
  }
  for (; i < n; ++i) out[i] = (counts[i] + alpha) / denom;
}

void scale(std::span<const double> src, double factor, std::span<double> out) {
  const std::size_t n = src.size();
  const __m256d vf = _mm256_set1_pd(factor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(_mm256_loadu_pd(src.data() + i), vf));
  }
  for (; i < n; ++i) out[i] = src[i] * factor;
}

std::size_t count_not_greater(std::span<const double> edges, double x) {
  const std::size_t n = edges.size();
  const __m256d vx = _mm256_set1_pd(x);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // _CMP_LE_OQ: false for NaN, same as the scalar `e <= x`.
    const __m256d le = _mm256_cmp_pd(_mm256_loadu_pd(edges.data() + i), vx, _CMP_LE_OQ);
    count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(le))));
  }
  for (; i < n; ++i) count += (edges[i] <= x) ? 1 : 0;
  return count;
}

#else

bool compiled() { return false; }

void smoothed_fill(std::span<const double> counts, double alpha, double denom, std::span<double> out) {
  scalar::smoothed_fill(counts, alpha, denom, out);
}

void scale(std::span<const double> src, double factor, std::span<double> out) {
  scalar::scale(src, factor, out);
}

std::size_t count_not_greater(std::span<const double> edges, double x) {
  return scalar::count_not_greater(edges, x);
}

#endif

}  // namespace ecodiv::kernels::avx2
