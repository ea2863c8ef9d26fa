#include <atomic>
#include <cassert>

#include "nncert/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace nncert::kernels {

namespace {

#if defined(__aarch64__)
// NEON is baseline on aarch64, so this path needs no runtime check.
double neon_dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((vgetq_lane_f64(acc0, 0) + vgetq_lane_f64(acc1, 0)) +
          (vgetq_lane_f64(acc0, 1) + vgetq_lane_f64(acc1, 1))) +
         tail;
}
void neon_quad_forms(const double* P, std::size_t n, const double* xs, std::size_t count,
                     double* out) {
  for (std::size_t k = 0; k < count; ++k) {
    const double* x = xs + k * n;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += x[j] * neon_dot(P + j * n, x, n);
    out[k] = total;
  }
}
void neon_axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}
#endif

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*quad_forms)(const double*, std::size_t, const double*, std::size_t, double*);
  void (*axpy)(double, const double*, double*, std::size_t);
};

Table table_for(Isa isa) {
  switch (isa) {
    case Isa::Avx2:
      return {avx2::dot, avx2::quad_forms, avx2::axpy};
#if defined(__aarch64__)
    case Isa::Neon:
      return {neon_dot, neon_quad_forms, neon_axpy};
#endif
    default:
      return {scalar::dot, scalar::quad_forms, scalar::axpy};
  }
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{detected_isa()};
  return slot;
}

Table& active_table() {
  static Table table = table_for(active_slot().load());
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
    case Isa::Scalar:
      break;
  }
  return "scalar";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return avx2::compiled() && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detected_isa() {
  if (isa_supported(Isa::Avx2)) return Isa::Avx2;
  if (isa_supported(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

Isa active_isa() { return active_slot().load(); }

Isa set_active_isa(Isa isa) {
  if (!isa_supported(isa)) isa = Isa::Scalar;
  active_slot().store(isa);
  active_table() = table_for(isa);
  return isa;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active_table().dot(a.data(), b.data(), a.size());
}

void quad_forms(std::span<const double> P, std::size_t n, std::span<const double> xs,
                std::span<double> out) {
  assert(P.size() == n * n);
  assert(n == 0 || xs.size() == n * out.size());
  active_table().quad_forms(P.data(), n, xs.data(), out.size(), out.data());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active_table().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace nncert::kernels
