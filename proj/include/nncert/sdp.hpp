#pragma once

// Linear matrix inequality programs in the standard form
//
//   minimize    c' y
//   subject to  F0_b + sum_k y_k F_k_b  >= 0  (PSD) for every block b
//               y_k >= 0                       for k in nonneg_vars
//
// together with a primal-dual interior-point solver and an independent
// eigenvalue-based verifier.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nncert/types.hpp"

namespace nncert::sdp {

/// Upper-triangle entry (row <= col) of a symmetric matrix. The value is placed
/// at both (row, col) and (col, row).
struct SymEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct VarTerm {
  int var = 0;
  std::vector<SymEntry> coeff;
};

enum class BlockRole {
  Generic,
  Lyapunov,          // the stability inequality of a certificate
  UncertaintyBound,  // auxiliary inequality bounding the uncertainty (D S D' < T, Y < -Z)
  Containment,       // first-layer box containment blocks
  Definiteness,      // P >= margin I
};

std::string role_name(BlockRole role);

struct LmiBlock {
  std::string label;
  BlockRole role = BlockRole::Generic;
  int size = 0;
  /// Margin already folded into the constant (F0 contains -margin * I) when the
  /// block encodes a strict inequality; zero otherwise.
  double strict_margin = 0.0;
  std::vector<SymEntry> constant;
  std::vector<VarTerm> terms;  // sorted by var, one entry per var

  Matrix evaluate(const Vector& y) const;
  std::size_t nnz() const;
};

/// Accumulates an affine symmetric block entry by entry. Duplicate positions
/// are summed when the block is built.
class BlockBuilder {
 public:
  BlockBuilder(int size, std::string label, BlockRole role = BlockRole::Generic);

  /// Multiplies every subsequent contribution (constant and variable) by sign.
  void set_sign(double sign) { sign_ = sign; }

  void add_constant(int i, int j, double value);
  void add(int var, int i, int j, double value);

  /// Shifts the constant by -margin * I and records the margin; turns
  /// "expression > 0" into "expression - margin I >= 0".
  void add_margin(double margin);

  int size() const { return size_; }
  LmiBlock build() &&;

 private:
  struct Raw {
    int var;  // -1 for the constant
    int row;
    int col;
    double value;
  };
  int size_;
  std::string label_;
  BlockRole role_;
  double sign_ = 1.0;
  double margin_ = 0.0;
  std::vector<Raw> raw_;
};

class ConicProgram {
 public:
  int add_variable(std::string label, double objective = 0.0, bool nonneg = false);

  int num_vars() const { return static_cast<int>(objective_.size()); }
  const std::vector<double>& objective() const noexcept { return objective_; }
  const std::vector<std::string>& var_labels() const noexcept { return labels_; }
  const std::vector<int>& nonneg_vars() const noexcept { return nonneg_; }
  const std::vector<LmiBlock>& blocks() const noexcept { return blocks_; }

  void set_objective(int var, double c);
  void mark_nonneg(int var);

  /// Appends F0 + sum y_k F_k >= 0 from dense symmetric matrices. Throws
  /// PreconditionError when any input is asymmetric beyond 1e-12 and
  /// DimensionError on size or index mismatch.
  void add_psd_block(const Matrix& F0, const std::vector<std::pair<int, Matrix>>& coefficients,
                     std::string label = {}, BlockRole role = BlockRole::Generic);

  void add_block(LmiBlock block);

  /// Sum of block sizes, optionally skipping one role.
  std::size_t total_block_size() const;

  /// Sparse triplet dump: header lines starting with '#', "var" and "block"
  /// records, then one "<block> <row> <col> <variable> <coefficient>" line per
  /// stored upper-triangle entry (1-based; variable 0 is the constant term).
  void write_triplets(std::ostream& os) const;
  static ConicProgram read_triplets(std::istream& is);

 private:
  std::vector<double> objective_;
  std::vector<std::string> labels_;
  std::vector<int> nonneg_;
  std::vector<char> is_nonneg_;
  std::vector<LmiBlock> blocks_;
};

struct SolverConfig {
  double strict_margin = 1e-7;
  double feasibility_tol = 1e-8;
  /// Residual of the dual equalities F_k . X = c_k. Only affects the
  /// optimality claim; feasibility of y is governed by feasibility_tol.
  double dual_feasibility_tol = 1e-6;
  double verification_tol = 1e-6;
  double gap_tol = 1e-8;
  int max_iterations = 200;
  double time_limit = 300.0;  // seconds
  /// Drop variables whose optimum is at +inf before solving, then restore
  /// finite values for them from the reduced solution.
  bool presolve = true;
};

enum class SolveStatus { Optimal, Infeasible, Inaccurate, Failed };

std::string status_name(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::Failed;
  Vector y;  // empty unless Optimal or Inaccurate
  double objective_value = 0.0;
  double dual_objective = 0.0;
  double wall_time = 0.0;
  int iterations = 0;
  double primal_infeasibility = 0.0;  // relative residual of the LMIs in y
  double dual_infeasibility = 0.0;    // relative residual of F_k . X = c_k
  double relative_gap = 0.0;
  int eliminated = 0;  // variables removed by presolve
  std::string message;

  bool has_solution() const {
    return status == SolveStatus::Optimal || status == SolveStatus::Inaccurate;
  }
};

SolveResult solve(const ConicProgram& program, const SolverConfig& config);

struct BlockResidual {
  int index = 0;
  std::string label;
  BlockRole role = BlockRole::Generic;
  int size = 0;
  double min_eigenvalue = 0.0;  // of F0 + sum y F (margin included)
  double strict_margin = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::vector<BlockResidual> blocks;
  double min_nonneg = 0.0;  // smallest nonneg-constrained variable (0 when none)
  bool pass = true;
  int first_failure = -1;  // block index, or -2 for a nonneg variable

  /// Smallest min_eigenvalue over all blocks (+inf when empty).
  double worst_eigenvalue() const;
};

/// Checks every block of the program at y with a symmetric eigensolver that
/// shares no code with the optimizer. A block passes when its smallest
/// eigenvalue is >= -tol; strict blocks additionally need the underlying
/// strict inequality to hold with half its margin (min eig >= -margin / 2).
VerificationReport verify_solution(const ConicProgram& program, const Vector& y, double tol);

/// Eigenvalues (ascending) of a dense symmetric matrix via LAPACK dsyev.
Vector symmetric_eigenvalues(const Matrix& a);

/// Smallest eigenvalue of a symmetric matrix. Starts from dsyev and, when the
/// answer is within dsyev's error bound of zero, refines it through a shifted
/// Cholesky factor and a one-sided Jacobi SVD so that graded matrices (a few
/// very large diagonal entries) are still resolved near zero.
double smallest_eigenvalue(const Matrix& a);

}  // namespace nncert::sdp
