#include "nncert/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define NNCERT_HAVE_AVX2_PATH 1
#endif

namespace nncert::kernels::avx2 {

#ifdef NNCERT_HAVE_AVX2_PATH

bool compiled() { return true; }

__attribute__((target("avx2,fma"))) double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + tail;
}

__attribute__((target("avx2,fma"))) void quad_forms(const double* P, std::size_t n,
                                                    const double* xs, std::size_t count,
                                                    double* out) {
  for (std::size_t k = 0; k < count; ++k) {
    const double* x = xs + k * n;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += x[j] * dot(P + j * n, x, n);
    out[k] = total;
  }
}

__attribute__((target("avx2,fma"))) void axpy(double alpha, const double* x, double* y,
                                              std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

#else

bool compiled() { return false; }
double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
void quad_forms(const double* P, std::size_t n, const double* xs, std::size_t count, double* out) {
  scalar::quad_forms(P, n, xs, count, out);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }

#endif

}  // namespace nncert::kernels::avx2
