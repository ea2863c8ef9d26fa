#pragma once

// Random small systems for the conversion oracles: a scalar or planar plant
// with a synthetic tanh controller and small interval radii. Not every draw is
// certifiable; callers keep the ones a relaxation certifies.

#include <cmath>
#include <random>

#include "nncert/examples.hpp"
#include "nncert/lmi_certificates.hpp"

namespace nncert::testing {

inline UncertainNNCS random_small_system(std::mt19937_64& rng, int index) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  const int n = index % 2 == 0 ? 1 : 2;
  for (;;) {
    Matrix a0(n, n), b0(n, 1), k(1, n);
    if (n == 1) {
      a0(0, 0) = in(0.2, 1.1);
      b0(0, 0) = in(0.5, 1.5);
      k(0, 0) = -in(0.3, 0.9) * a0(0, 0) / b0(0, 0);
    } else {
      const double rho = in(0.5, 1.05), th = in(0.0, 1.2);
      a0 << rho * std::cos(th), -rho * std::sin(th), rho * std::sin(th), rho * std::cos(th);
      b0 << in(-1.0, 1.0), in(0.5, 1.5);
      // shrink the closed loop along B
      k = -in(0.3, 0.9) * (b0.transpose() * a0) / b0.squaredNorm();
    }
    Matrix ar = Matrix::NullaryExpr(n, n, [&] { return u(rng) < 0.7 ? in(0.0, 0.03) : 0.0; });
    Matrix br = Matrix::NullaryExpr(n, 1, [&] { return u(rng) < 0.7 ? in(0.0, 0.03) : 0.0; });
    const int n1 = n == 1 ? 1 + index % 4 / 2 : 2 * (1 + index % 4 / 2);
    const double h = in(0.2, 1.0);
    UncertainNNCS sys{IntervalMatrix(a0 - ar, a0 + ar),
                      IntervalMatrix(b0 - br, b0 + br),
                      examples::make_synthetic_controller(k, n1, in(0.5, 2.0)),
                      Vector::Constant(n1, -h),
                      Vector::Constant(n1, h),
                      Vector::Zero(n),
                      std::nullopt};
    if (examples::worst_vertex_spectral_radius(sys, k) < 0.95) return sys;
  }
}

}  // namespace nncert::testing
