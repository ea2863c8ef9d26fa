#pragma once

// Independent checks of emitted certificates and executable forms of the
// equivalence constructions between the relaxed certificates.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nncert/lmi_certificates.hpp"

namespace nncert {

struct Trajectory {
  std::vector<Vector> states;
  Matrix A;
  Matrix B;
  bool saturated = false;  // the limits clipped at least one input
  bool diverged = false;   // a state stopped being finite; states stop there
};

/// x(t+1) = A x(t) + B clamp(net(x(t))); clamping only when saturation is given.
Trajectory simulate(const Matrix& A, const Matrix& B, const FeedforwardNetwork& net,
                    const Vector& x0, int steps, std::optional<Saturation> saturation = {});

/// Points with (x-c)' P (x-c) = 1, directions uniform on the sphere.
std::vector<Vector> boundary_samples(const Ellipsoid& e, int count, std::uint64_t seed);

/// Points inside the ellipsoid: half on the boundary, half uniform in volume.
std::vector<Vector> ellipsoid_samples(const Ellipsoid& e, int count, std::uint64_t seed);

/// Realizations to test against: every vertex pair when there are at most
/// `count`, padded with uniform interior draws; otherwise half random vertices
/// and half interior draws.
std::vector<std::pair<Matrix, Matrix>> realization_samples(const IntervalMatrix& A,
                                                           const IntervalMatrix& B, int count,
                                                           std::uint64_t seed);

struct LyapunovReport {
  long long pairs = 0;
  long long violations = 0;
  /// max over samples of (V(x+) - V(x)) / V(x); negative when V decreases everywhere.
  double worst_relative_change = 0.0;
  /// Pairs where the actuator limits, had they been applied, would have clipped.
  long long saturation_engaged = 0;
  bool pass() const { return pairs > 0 && violations == 0; }
};

/// Samples states in the certified ellipsoid (never x* itself) against
/// realizations of (A, B) and checks V(x+) < V(x) for V = (x-x*)' P (x-x*).
LyapunovReport lyapunov_decrease_check(const UncertainNNCS& sys, const Certificate& cert,
                                       int n_state_samples, int n_uncertainty_samples,
                                       std::uint64_t seed);

struct ContainmentReport {
  long long samples = 0;
  long long violations = 0;
  double worst_excess = 0.0;  // largest amount by which a v^1 entry left its box
  bool blocks_psd = true;     // every [[h_i^2, W_i], [W_i', P]] block
  double min_block_eigenvalue = 0.0;
  bool pass() const { return samples > 0 && violations == 0 && blocks_psd; }
};

/// Checks W^1 x + b^1 against the first-layer box for points of the
/// ellipsoid, and the containment blocks directly.
ContainmentReport containment_check(const Ellipsoid& e, const FeedforwardNetwork& net,
                                    const Vector& v1_lower, const Vector& v1_upper, int n_samples,
                                    std::uint64_t seed, double block_tol = 1e-9);

struct ConvergenceReport {
  int runs = 0;
  int converged = 0;
  int diverged = 0;
  int saturated = 0;
  double worst_final_distance = 0.0;
  std::vector<Trajectory> kept;  // the first few, for plotting
  bool pass() const { return runs > 0 && converged == runs; }
};

/// Simulates from boundary points of the certified ellipsoid under several
/// realizations and checks ||x(steps) - x*|| <= tol.
ConvergenceReport trajectory_convergence(const UncertainNNCS& sys, const Ellipsoid& e,
                                         int n_starts, int n_realizations, int steps, double tol,
                                         std::uint64_t seed, bool saturate, int keep = 0);

// Conversions between the two relaxations. Both work on the raw matrices: Z = Z(lambda, P)
// (n_hat x n_hat), P (n x n) and D (n_hat x n), with P entering through the
// last n rows of Z.

/// [[Z + diag_i(sum_j gamma_ij D_ij^2), U], [U', -V]] with V = diag(gamma).
Matrix relaxation1_block(const Matrix& Z, const Matrix& P, const Matrix& D, const Matrix& gamma);
/// [[Z + T, [0 P]'], [[0 P], -S]] for diagonal T, S.
Matrix relaxation2_block(const Matrix& Z, const Matrix& P, const Vector& t, const Vector& s);

struct IiToIResult {
  Matrix gamma;
  double epsilon = 0.0;
  bool row_bounds_hold = false;      // sum_j gamma_ij D_ij^2 <= t_i
  double column_sum_error = 0.0;     // max_j |s_j sum_i 1/gamma_ij - 1|
  double lmi1_max_eigenvalue = 0.0;  // of relaxation1_block
  bool success() const {
    return row_bounds_hold && column_sum_error <= 1e-9 && lmi1_max_eigenvalue < 0.0;
  }
};

/// LMI-II solution (t, s) to LMI-I multipliers gamma. Throws PreconditionError
/// when (t, s) do not satisfy LMI-II and InternalError if a cofactor of G is
/// not positive.
IiToIResult convert_ii_to_i(const Matrix& Z, const Matrix& P, const Matrix& D, const Vector& t,
                            const Vector& s, double epsilon_prime = 1.0);

struct IToIiResult {
  Vector t;
  Vector s;
  double epsilon = 0.0;
  double lmi2_max_eigenvalue = 0.0;    // of relaxation2_block
  double bound_min_eigenvalue = 0.0;   // of T - D S D'
  double tstar_min_eigenvalue = 0.0;   // of T* - D S D' (>= 0 up to rounding)
  bool success() const {
    return lmi2_max_eigenvalue < 0.0 && bound_min_eigenvalue > 0.0 &&
           tstar_min_eigenvalue >= -1e-9 * (1.0 + t.cwiseAbs().maxCoeff());
  }
};

/// LMI-I multipliers gamma to an LMI-II pair (T, S). Throws PreconditionError
/// when gamma does not satisfy LMI-I.
IToIiResult convert_i_to_ii(const Matrix& Z, const Matrix& P, const Matrix& D,
                            const Matrix& gamma, double epsilon_prime = 1.0);

// Matrix facts behind the relaxations, as executable checks.

/// A F B + B' F' A' <= gamma A A' + B' B / gamma, up to an eigenvalue residual
/// of -1e-10. Throws PreconditionError unless F'F <= I + 1e-12 and gamma > 0.
bool petersen_bound_check(const Matrix& A, const Matrix& B, const Matrix& F, double gamma);

enum class CofactorMethod { Auto, Minors, Adjugate };

/// C(i, j) = (-1)^(i+j) det(A without row i and column j). Auto uses minors up
/// to size 8 and |A| A^{-1}' above.
Matrix cofactors(const Matrix& A, CofactorMethod method = CofactorMethod::Auto);

/// True when all cofactors are positive. Throws PreconditionError unless A is
/// symmetric positive definite with positive diagonal and negative off-diagonal.
bool cofactor_positivity_check(const Matrix& A);

/// Row expansions equal |A| and alien expansions vanish, to 1e-9 relative.
bool laplace_identity_check(const Matrix& A);

}  // namespace nncert
