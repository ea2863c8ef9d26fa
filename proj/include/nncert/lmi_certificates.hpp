#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nncert/error.hpp"
#include "nncert/interval_matrix.hpp"
#include "nncert/neural_controller.hpp"
#include "nncert/qc_abstraction.hpp"
#include "nncert/sdp.hpp"

namespace nncert {

/// Entrywise actuator limits, applied in simulation only.
struct Saturation {
  double lo = 0.0;
  double hi = 0.0;
};

/// x+ = A x + B net(x) with A, B ranging over interval matrices.
struct UncertainNNCS {
  IntervalMatrix A;
  IntervalMatrix B;
  FeedforwardNetwork net;
  Vector v1_lower;
  Vector v1_upper;
  Vector x_star;  // empty means the origin
  std::optional<Saturation> saturation;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
  Vector equilibrium() const;
};

/// Checks shapes and that x_star is a fixed point for sampled vertex
/// realizations (all vertices when there are at most 1024). Throws
/// DimensionError or PreconditionError.
void validate_system(const UncertainNNCS& sys, double tol = 1e-9);

struct TildeB {
  Matrix b0;
  Matrix br;  // entrywise >= 0
};

/// Center/radius of the interval product B N_uw.
TildeB build_tilde_b(const IntervalMatrix& B, const IsolationMatrices& iso);

/// D = [A_r  B~_r  0_{n x n}]', of size (2n + n_phi) x n.
Matrix build_d(const Matrix& A_r, const TildeB& tb);

enum class CertificateMethod { Nominal, Vertex, LmiI, LmiII, LmiIII };

std::string method_name(CertificateMethod m);
/// Accepts "nominal", "vertex", "lmi1", "lmi2", "lmi3".
CertificateMethod parse_method(const std::string& s);

/// Everything the assemblers need, derived once from the system.
struct CertificationContext {
  int n = 0;
  int m = 0;
  int n_phi = 0;
  int n1 = 0;
  int n_hat = 0;
  Vector x_star;
  IsolationMatrices iso;
  EquilibriumTuple eq;
  PreActivationBounds bounds;
  SectorVectors sectors;
  std::vector<QcGenerator> generators;
  CenterRadius a_cr;
  TildeB tb;
  Matrix D;
  Matrix W1;
  /// Half-width of the first-layer box on the tighter side of v*.
  Vector h;
  IntervalMatrix A;
  IntervalMatrix B;
};

CertificationContext prepare(const UncertainNNCS& sys);

/// Index of every scalar decision variable inside the assembled program.
/// Symmetric matrices store one index per unordered pair.
struct VariableLayout {
  std::vector<int> P;       // n x n, row-major, symmetric
  std::vector<int> lambda;  // n_phi
  std::vector<int> gamma;   // n_hat x n, index i * n + j
  std::vector<int> t;       // n_hat
  std::vector<int> s;       // n
  std::vector<int> Y;       // n_hat x n_hat, row-major, symmetric
  int n = 0;
  int n_hat = 0;
};

struct AssembledProgram {
  CertificateMethod method = CertificateMethod::Nominal;
  sdp::ConicProgram program;
  VariableLayout layout;
};

AssembledProgram assemble_nominal(const CertificationContext& ctx, double margin);
AssembledProgram assemble_vertex(const CertificationContext& ctx, double margin,
                                 std::size_t cap_log2 = kDefaultVertexCapLog2);
AssembledProgram assemble_lmi1(const CertificationContext& ctx, double margin);
AssembledProgram assemble_lmi2(const CertificationContext& ctx, double margin);
AssembledProgram assemble_lmi3(const CertificationContext& ctx, double margin);
AssembledProgram assemble(const CertificationContext& ctx, CertificateMethod method, double margin,
                          std::size_t cap_log2 = kDefaultVertexCapLog2);

/// Number of vertex blocks assemble_vertex would create (2^(q_A + q_B)), as log2.
std::size_t vertex_count_log2(const CertificationContext& ctx);

struct ProblemStats {
  long long num_decision_vars = 0;
  long long lmi_total_size = 0;
};

/// Closed-form counts for the three relaxations. Throws PreconditionError for
/// Nominal and Vertex.
ProblemStats problem_stats(CertificateMethod method, long long n, long long n1, long long n_phi);

/// Counts measured on an assembled program: all scalar variables, and the sum
/// of block sizes except the P >= margin I block.
ProblemStats introspect(const sdp::ConicProgram& program);

// Numeric evaluation of the certificate matrices, shared with the validators.

/// Z(lambda, P) of size n_hat.
Matrix z_matrix(const CertificationContext& ctx, const Matrix& P, const Vector& lambda);
/// Left-hand side of the robust Lyapunov inequality in Schur form for a single
/// realization [A, B N_uw]; negative definite for a valid certificate.
Matrix schur_lyapunov_matrix(const CertificationContext& ctx, const Matrix& A, const Matrix& B,
                             const Matrix& P, const Vector& lambda);
/// R_V' [[A'PA - P, A'PB], [B'PA, B'PB]] R_V + X(lambda) for one realization.
Matrix lyapunov_matrix(const CertificationContext& ctx, const Matrix& A, const Matrix& B,
                       const Matrix& P, const Vector& lambda);
/// Block of LMI-I for a gamma grid (n_hat x n).
Matrix lmi1_matrix(const CertificationContext& ctx, const Matrix& P, const Vector& lambda,
                   const Matrix& gamma);
/// Block of LMI-II (Z + T with the S coupling) for diagonal T, S.
Matrix lmi2_matrix(const CertificationContext& ctx, const Matrix& P, const Vector& lambda,
                   const Vector& t, const Vector& s);

struct Ellipsoid {
  Matrix P;
  Vector center;

  bool contains(const Vector& x, double tol = 0.0) const;
};

/// Lebesgue volume of {x : (x-c)' P (x-c) <= 1}. Throws PreconditionError if P
/// is not positive definite.
double ellipsoid_volume(const Ellipsoid& e);

struct SolverStats {
  sdp::SolveStatus status = sdp::SolveStatus::Failed;
  double wall_time = 0.0;
  int iterations = 0;
  double objective = 0.0;
  std::string message;
};

struct Certificate {
  CertificateMethod method = CertificateMethod::Nominal;
  Matrix P;
  Vector lambda;
  Matrix gamma;  // LmiI and LmiIII
  Vector t;      // LmiII: diagonal of T
  Vector s;      // LmiII: diagonal of S
  Matrix Y;      // LmiIII
  Ellipsoid ellipsoid;
  SolverStats stats;
  sdp::VerificationReport residuals;
  /// Worst largest eigenvalue of the unreduced Lyapunov matrix over the
  /// sampled realizations.
  double worst_sampled_lyapunov = 0.0;
  int sampled_realizations = 0;

  double trace() const { return P.trace(); }
  double volume() const { return ellipsoid_volume(ellipsoid); }
};

/// Reads the certificate variables back out of a solution vector.
Certificate extract_certificate(const AssembledProgram& ap, const Vector& y,
                                const Vector& x_star);

struct CertifyOutcome {
  enum class Kind { Certified, Infeasible, Failed };
  Kind kind = Kind::Failed;
  CertificateMethod method = CertificateMethod::Nominal;
  std::optional<Certificate> certificate;
  SolverStats stats;
  ProblemStats size;
  sdp::VerificationReport residuals;  // filled whenever the solver returned a point
  std::string message;
};

std::string kind_name(CertifyOutcome::Kind k);

/// The solver reported an optimum that independent checks reject.
class VerificationFailure : public Error {
 public:
  VerificationFailure(const std::string& what, sdp::VerificationReport report)
      : Error(what), report_(std::move(report)) {}
  const sdp::VerificationReport& report() const noexcept { return report_; }

 private:
  sdp::VerificationReport report_;
};

struct CertifyOptions {
  sdp::SolverConfig solver;
  std::size_t vertex_cap_log2 = kDefaultVertexCapLog2;
  int lyapunov_samples = 1000;
  std::uint64_t seed = 1;
};

/// Runs the full pipeline (bounds, sectors, assembly, solve, verification).
/// Infeasibility is reported through the outcome, never thrown.
CertifyOutcome certify(const UncertainNNCS& sys, CertificateMethod method,
                       const CertifyOptions& options = {});
CertifyOutcome certify(const CertificationContext& ctx, CertificateMethod method,
                       const CertifyOptions& options = {});

}  // namespace nncert
