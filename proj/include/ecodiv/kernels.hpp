#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense inner loops with a scalar reference and an AVX2 variant chosen at
// runtime. Every variant must be bit-identical to the scalar one: only
// lane-wise IEEE add/mul/div and exact comparisons are used, never FMA or
// reordered reductions.
namespace ecodiv::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa);

/// Best ISA supported by the running CPU (and compiled in).
Isa detected_isa();

/// ISA used by the dispatching entry points below. Defaults to
/// detected_isa(); ECODIV_FORCE_SCALAR=1 in the environment pins scalar.
Isa active_isa();

/// Overrides the dispatch target; requesting an unsupported ISA falls back
/// to scalar. Returns the ISA actually selected.
Isa set_active_isa(Isa isa);

/// out[i] = (counts[i] + alpha) / denom
void smoothed_fill(std::span<const double> counts, double alpha, double denom, std::span<double> out);

/// out[i] = src[i] * factor
void scale(std::span<const double> src, double factor, std::span<double> out);

/// Number of entries of `edges` that are <= x. `edges` need not be sorted.
std::size_t count_not_greater(std::span<const double> edges, double x);

namespace scalar {
void smoothed_fill(std::span<const double> counts, double alpha, double denom, std::span<double> out);
void scale(std::span<const double> src, double factor, std::span<double> out);
std::size_t count_not_greater(std::span<const double> edges, double x);
}  // namespace scalar

namespace avx2 {
bool compiled();
void smoothed_fill(std::span<const double> counts, double alpha, double denom, std::span<double> out);
void scale(std::span<const double> src, double factor, std::span<double> out);
std::size_t count_not_greater(std::span<const double> edges, double x);
}  // namespace avx2

}  // namespace ecodiv::kernels
