#include "ecodiv/kernels.hpp"

namespace ecodiv::kernels::scalar {

void smoothed_fill(std::span<const double> counts, double alpha, double denom, std::span<double> out) {
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = (counts[i] + alpha) / denom;
}

void scale(std::span<const double> src, double factor, std::span<double> out) {
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i] * factor;
}

std::size_t count_not_greater(std::span<const double> edges, double x) {
  std::size_t n = 0;
  for (double e : edges) n += (e <= x) ? 1 : 0;
  return n;
}

}  // namespace ecodiv::kernels::scalar
