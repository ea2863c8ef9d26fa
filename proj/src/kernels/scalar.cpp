#include "nncert/kernels.hpp"

namespace nncert::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  // Four independent accumulators, same association order as the vector paths.
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += a[i] * b[i];
    acc[1] += a[i + 1] * b[i + 1];
    acc[2] += a[i + 2] * b[i + 2];
    acc[3] += a[i + 3] * b[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

void quad_forms(const double* P, std::size_t n, const double* xs, std::size_t count, double* out) {
  for (std::size_t k = 0; k < count; ++k) {
    const double* x = xs + k * n;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      total += x[j] * dot(P + j * n, x, n);
    }
    out[k] = total;
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace nncert::kernels::scalar
