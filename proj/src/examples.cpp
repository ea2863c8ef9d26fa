#include "nncert/examples.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace nncert::examples {

FeedforwardNetwork make_synthetic_controller(const Matrix& K, int n1, double r) {
  const auto m = static_cast<int>(K.rows());
  if (m <= 0 || K.cols() <= 0) throw DimensionError("gain matrix is empty");
  if (!(r > 0.0)) throw PreconditionError("linear-range scale must be positive");
  if (n1 <= 0 || n1 % m != 0) {
    throw PreconditionError("hidden width " + std::to_string(n1) +
                            " is not a multiple of the input count " + std::to_string(m));
  }
  const int per_group = n1 / m;
  Matrix W1(n1, K.cols());
  Matrix W2 = Matrix::Zero(m, n1);
  for (int g = 0; g < per_group; ++g) {
    W1.middleRows(g * m, m) = K / r;
    for (int i = 0; i < m; ++i) W2(i, g * m + i) = r / per_group;
  }
  return FeedforwardNetwork({{W1, Vector::Zero(n1)}, {W2, Vector::Zero(m)}}, Activation::tanh());
}

namespace {

// Entrywise hull of two matrices.
IntervalMatrix hull(const Matrix& a, const Matrix& b) {
  return IntervalMatrix(a.cwiseMin(b), a.cwiseMax(b));
}

}  // namespace

std::pair<Matrix, Matrix> pendulum_matrices(const PendulumParams& p, double length) {
  const double ml2 = p.mass * length * length;
  Matrix Ac(2, 2);
  Ac << 0.0, 1.0, kGravity / length, -p.friction / ml2;
  Matrix Bc(2, 1);
  Bc << 0.0, 1.0 / ml2;
  return {Matrix::Identity(2, 2) + p.dt * Ac, p.dt * Bc};
}

Matrix pendulum_gain(const PendulumParams& p) {
  // Ackermann placement of both closed-loop poles at 0.9 for the nominal length.
  const auto [A, B] = pendulum_matrices(p, p.length);
  Matrix C(2, 2);
  C << B, A * B;
  const double z = 0.9;
  const Matrix pa = A * A - 2.0 * z * A + z * z * Matrix::Identity(2, 2);
  Matrix e(1, 2);
  e << 0.0, 1.0;
  return -e * C.inverse() * pa;
}

UncertainNNCS pendulum(const PendulumParams& p) {
  if (p.delta < 0.0 || p.delta >= p.length) throw PreconditionError("pendulum delta out of range");
  const auto [Alo, Blo] = pendulum_matrices(p, p.length - p.delta);
  const auto [Ahi, Bhi] = pendulum_matrices(p, p.length + p.delta);
  const Matrix K = pendulum_gain(p);
  FeedforwardNetwork net = make_synthetic_controller(K, p.n1, 1.0);
  return {hull(Alo, Ahi),
          hull(Blo, Bhi),
          net,
          Vector::Constant(p.n1, -p.box),
          Vector::Constant(p.n1, p.box),
          Vector::Zero(2),
          Saturation{-p.saturation, p.saturation}};
}

int msd_default_width(int carts) {
  if (carts <= 2) return 8;
  return (16 + carts - 1) / carts * carts;
}

Matrix chain_matrix(const Vector& coeff) {
  const auto nc = coeff.size();
  Matrix K = Matrix::Zero(nc, nc);
  for (Eigen::Index i = 0; i < nc; ++i) {
    K(i, i) = coeff(i) + (i + 1 < nc ? coeff(i + 1) : 0.0);
    if (i + 1 < nc) {
      K(i, i + 1) = -coeff(i + 1);
      K(i + 1, i) = -coeff(i + 1);
    }
  }
  return K;
}

Matrix msd_gain(const MsdParams& p) {
  // u = (K - 4I) x + (C - 4I) v leaves a double discrete pole at 1 - 2 dt per cart.
  const int nc = p.carts;
  const Matrix Kn = chain_matrix(Vector::Constant(nc, p.k));
  const Matrix Cn = chain_matrix(Vector::Constant(nc, p.c));
  Matrix G(nc, 2 * nc);
  G << Kn - 4.0 * Matrix::Identity(nc, nc), Cn - 4.0 * Matrix::Identity(nc, nc);
  return G;
}

UncertainNNCS msd(const MsdParams& p) {
  const int nc = p.carts;
  if (nc < 1) throw PreconditionError("need at least one cart");
  if (p.delta_k < 0.0 || p.delta_c < 0.0) throw PreconditionError("negative uncertainty level");
  const Matrix Klo = chain_matrix(Vector::Constant(nc, p.k - p.delta_k));
  const Matrix Khi = chain_matrix(Vector::Constant(nc, p.k + p.delta_k));
  const Matrix Clo = chain_matrix(Vector::Constant(nc, p.c - p.delta_c));
  const Matrix Chi = chain_matrix(Vector::Constant(nc, p.c + p.delta_c));
  const Matrix I = Matrix::Identity(nc, nc);
  auto discrete = [&](const Matrix& K, const Matrix& C) {
    Matrix A(2 * nc, 2 * nc);
    A << I, p.dt * I, -p.dt * K, I - p.dt * C;
    return A;
  };
  Matrix B = Matrix::Zero(2 * nc, nc);
  B.bottomRows(nc) = p.dt * I;
  const int n1 = p.n1 > 0 ? p.n1 : msd_default_width(nc);
  return {hull(discrete(Klo, Clo), discrete(Khi, Chi)),
          IntervalMatrix::point(B),
          make_synthetic_controller(msd_gain(p), n1, 1.0),
          Vector::Constant(n1, -p.box),
          Vector::Constant(n1, p.box),
          Vector::Zero(2 * nc),
          std::nullopt};
}

UncertainNNCS scalar(ScalarVariant v) {
  auto one = [](double x) { return Matrix::Constant(1, 1, x); };
  IntervalMatrix A, B;
  double gain = -0.6;
  switch (v) {
    case ScalarVariant::Nominal:
      A = IntervalMatrix::point(one(0.5));
      B = IntervalMatrix::point(one(1.0));
      break;
    case ScalarVariant::Robust:
      A = IntervalMatrix(one(0.9), one(1.0));
      B = IntervalMatrix(one(0.95), one(1.05));
      break;
    case ScalarVariant::Vertex:
      A = IntervalMatrix(one(0.45), one(0.55));
      B = IntervalMatrix::point(one(1.0));
      break;
    case ScalarVariant::Unstable:
      A = IntervalMatrix::point(one(2.0));
      B = IntervalMatrix::point(one(1.0));
      gain = 0.0;
      break;
  }
  FeedforwardNetwork net({{one(1.0), Vector::Zero(1)}, {one(gain), Vector::Zero(1)}},
                         Activation::tanh());
  return {A, B, net, Vector::Constant(1, -0.5), Vector::Constant(1, 0.5), Vector::Zero(1),
          std::nullopt};
}

double worst_vertex_spectral_radius(const UncertainNNCS& sys, const Matrix& K) {
  double worst = 0.0;
  for (const Matrix& a : enumerate_vertices(sys.A)) {
    for (const Matrix& b : enumerate_vertices(sys.B)) {
      const Matrix cl = a + b * K;
      worst = std::max(worst, Eigen::EigenSolver<Matrix>(cl, false).eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace nncert::examples
