#include <algorithm>
#include <cmath>
#include <limits>

#include <lapacke.h>

#include "nncert/error.hpp"
#include "nncert/sdp.hpp"

namespace nncert::sdp {

Vector symmetric_eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("eigenvalues of a non-square matrix");
  const auto n = static_cast<lapack_int>(a.rows());
  Vector w(n);
  if (n == 0) return w;
  Matrix work = a;
  const lapack_int info = LAPACKE_dsyev(LAPACK_COL_MAJOR, 'N', 'U', n, work.data(), n, w.data());
  if (info != 0) throw Error("dsyev failed with info " + std::to_string(info));
  return w;
}

double smallest_eigenvalue(const Matrix& a) {
  const Vector w = symmetric_eigenvalues(a);
  if (w.size() == 0) return std::numeric_limits<double>::infinity();
  const double est = w(0);
  // dsyev is accurate to about n eps ||A||. Blocks holding a few huge diagonal
  // entries next to a tiny margin need better: factor A + tau I (positive
  // definite by the bound) and take singular values of the Cholesky factor by
  // one-sided Jacobi, which keeps relative accuracy on graded matrices.
  const auto n = static_cast<lapack_int>(a.rows());
  const double norm = std::max(std::abs(w(0)), std::abs(w(n - 1)));
  const double err = 8.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon() * norm;
  if (std::abs(est) > 64.0 * err) return est;
  const double tau = std::max(0.0, -est) + 4.0 * err;
  Matrix l = a;
  l.diagonal().array() += tau;
  if (LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, l.data(), n) != 0) return est;
  l.triangularView<Eigen::StrictlyUpper>().setZero();
  Vector sva(n);
  double stat[6] = {0, 0, 0, 0, 0, 0};
  double vdummy = 0.0;
  if (LAPACKE_dgesvj(LAPACK_COL_MAJOR, 'L', 'N', 'N', n, n, l.data(), n, sva.data(), 0, &vdummy, 1,
                     stat) != 0) {
    return est;
  }
  const double smin = sva.minCoeff() * stat[0];
  return smin * smin - tau;
}

double VerificationReport::worst_eigenvalue() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const BlockResidual& b : blocks) worst = std::min(worst, b.min_eigenvalue);
  return worst;
}

VerificationReport verify_solution(const ConicProgram& program, const Vector& y, double tol) {
  if (y.size() != program.num_vars()) {
    throw DimensionError("solution has " + std::to_string(y.size()) + " entries, program has " +
                         std::to_string(program.num_vars()) + " variables");
  }
  VerificationReport rep;
  const auto& blocks = program.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const LmiBlock& blk = blocks[b];
    BlockResidual r;
    r.index = static_cast<int>(b);
    r.label = blk.label;
    r.role = blk.role;
    r.size = blk.size;
    r.strict_margin = blk.strict_margin;
    r.min_eigenvalue = smallest_eigenvalue(blk.evaluate(y));
    r.pass = r.min_eigenvalue >= -tol;
    if (blk.strict_margin > 0.0) r.pass = r.pass && r.min_eigenvalue >= -0.5 * blk.strict_margin;
    if (!r.pass && rep.pass) {
      rep.pass = false;
      rep.first_failure = r.index;
    }
    rep.blocks.push_back(std::move(r));
  }
  rep.min_nonneg = 0.0;
  bool first = true;
  for (int k : program.nonneg_vars()) {
    rep.min_nonneg = first ? y(k) : std::min(rep.min_nonneg, y(k));
    first = false;
  }
  if (rep.min_nonneg < -tol && rep.pass) {
    rep.pass = false;
    rep.first_failure = -2;
  }
  return rep;
}

}  // namespace nncert::sdp
