#include <atomic>
#include <cstdlib>
#include <string>

#include "ecodiv/error.hpp"
#include "ecodiv/kernels.hpp"

namespace ecodiv::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa initial_isa() {
  const char* force = std::getenv("ECODIV_FORCE_SCALAR");
  if (force != nullptr && std::string(force) == "1") return Isa::kScalar;
  return detected_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw Error(Errc::kInvalidArgument, "kernel input/output size mismatch");
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
  static const Isa isa = (avx2::compiled() && cpu_has_avx2()) ? Isa::kAvx2 : Isa::kScalar;
  return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

Isa set_active_isa(Isa isa) {
  if (isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2) isa = Isa::kScalar;
  active().store(isa, std::memory_order_relaxed);
  return isa;
}

void smoothed_fill(std::span<const double> counts, double alpha, double denom, std::span<double> out) {
  require_same_size(counts.size(), out.size());
  if (active_isa() == Isa::kAvx2) {
    avx2::smoothed_fill(counts, alpha, denom, out);
  } else {
    scalar::smoothed_fill(counts, alpha, denom, out);
  }
}

void scale(std::span<const double> src, double factor, std::span<double> out) {
  require_same_size(src.size(), out.size());
  if (active_isa() == Isa::kAvx2) {
    avx2::scale(src, factor, out);
  } else {
    scalar::scale(src, factor, out);
  }
}

std::size_t count_not_greater(std::span<const double> edges, double x) {
  return active_isa() == Isa::kAvx2 ? avx2::count_not_greater(edges, x)
                                    : scalar::count_not_greater(edges, x);
}

}  // namespace ecodiv::kernels
