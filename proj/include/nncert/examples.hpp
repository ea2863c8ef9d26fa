#pragma once

// Built-in benchmark systems with deterministic synthetic controllers.

#include "nncert/lmi_certificates.hpp"

namespace nncert::examples {

inline constexpr double kGravity = 9.81;

/// One-hidden-layer tanh network whose Jacobian at the origin is exactly K
/// (m x n): W1 = (1/r) T K with T stacking n1/m copies of I_m, W2 = (r m/n1)
/// times the group sum, zero biases. Throws PreconditionError if m does not
/// divide n1 or r <= 0.
FeedforwardNetwork make_synthetic_controller(const Matrix& K, int n1, double r);

struct PendulumParams {
  double delta = 0.0;  // length interval half-width
  double mass = 0.15;
  double friction = 0.05;
  double length = 0.5;
  double dt = 0.02;
  int n1 = 32;
  double box = 0.1;  // first-layer half-width
  double saturation = 0.7;
};

/// Continuous matrices at a given length, Euler-discretized.
std::pair<Matrix, Matrix> pendulum_matrices(const PendulumParams& p, double length);
Matrix pendulum_gain(const PendulumParams& p = {});
UncertainNNCS pendulum(const PendulumParams& p = {});

struct MsdParams {
  int carts = 1;
  double delta_k = 0.05;
  double delta_c = 0.005;
  double k = 1.0;
  double c = 0.1;
  double dt = 0.1;
  double box = 0.2;
  int n1 = 0;  // 0 picks msd_default_width(carts)
};

/// 8 for one or two carts, otherwise the smallest multiple of the cart count >= 16.
int msd_default_width(int carts);
/// Stiffness-like chain matrix for per-cart coefficients (cart 1 tied to the wall).
Matrix chain_matrix(const Vector& coeff);
Matrix msd_gain(const MsdParams& p);
UncertainNNCS msd(const MsdParams& p);

enum class ScalarVariant {
  Nominal,  // x+ = 0.5 x + u
  Robust,   // a in [0.9, 1.0], b in [0.95, 1.05]
  Vertex,   // a in [0.45, 0.55], b = 1
  Unstable  // x+ = 2 x with a zero controller
};

/// Scalar plant with u = -0.6 tanh(x) and first-layer box [-0.5, 0.5].
UncertainNNCS scalar(ScalarVariant v);

/// Spectral radius of A + B K over every vertex pair.
double worst_vertex_spectral_radius(const UncertainNNCS& sys, const Matrix& K);

}  // namespace nncert::examples
