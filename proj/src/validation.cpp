#include "nncert/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "nncert/kernels.hpp"

namespace nncert {

Trajectory simulate(const Matrix& A, const Matrix& B, const FeedforwardNetwork& net,
                    const Vector& x0, int steps, std::optional<Saturation> saturation) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || x0.size() != n || net.input_dim() != n ||
      net.output_dim() != B.cols()) {
    throw DimensionError("simulate: A, B, network and x0 do not fit together");
  }
  if (steps < 0) throw PreconditionError("simulate: negative step count");
  Trajectory tr;
  tr.A = A;
  tr.B = B;
  tr.states.reserve(static_cast<std::size_t>(steps) + 1);
  tr.states.push_back(x0);
  Vector x = x0;
  for (int k = 0; k < steps; ++k) {
    Vector u = net.forward(x);
    if (saturation) {
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double c = std::clamp(u(i), saturation->lo, saturation->hi);
        if (c != u(i)) tr.saturated = true;
        u(i) = c;
      }
    }
    x = A * x + B * u;
    if (!x.allFinite()) {
      tr.diverged = true;
      break;
    }
    tr.states.push_back(x);
  }
  return tr;
}

namespace {

// Upper factor R with R'R = P, so x = c + R^{-1} w has quadratic form |w|^2.
Matrix upper_factor(const Matrix& P) {
  Eigen::LLT<Matrix> llt(P);
  if (P.rows() == 0 || llt.info() != Eigen::Success) {
    throw PreconditionError("ellipsoid matrix is not positive definite");
  }
  return llt.matrixU();
}

Vector unit_direction(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector u(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) u(i) = g(rng);
  } while (u.norm() == 0.0);
  return u / u.norm();
}

}  // namespace

std::vector<Vector> boundary_samples(const Ellipsoid& e, int count, std::uint64_t seed) {
  std::vector<Vector> out;
  if (count <= 0) return out;
  const Matrix R = upper_factor(e.P);
  std::mt19937_64 rng(seed);
  const auto solver = R.triangularView<Eigen::Upper>();
  for (int k = 0; k < count; ++k) {
    Vector d = solver.solve(unit_direction(e.P.rows(), rng));
    // One correction step pins the quadratic form to 1 despite rounding.
    d /= std::sqrt(d.dot(e.P * d));
    out.push_back(e.center + d);
  }
  return out;
}

std::vector<Vector> ellipsoid_samples(const Ellipsoid& e, int count, std::uint64_t seed) {
  std::vector<Vector> out;
  if (count <= 0) return out;
  const int on_boundary = count / 2;
  out = boundary_samples(e, on_boundary, seed);
  const Matrix R = upper_factor(e.P);
  const auto solver = R.triangularView<Eigen::Upper>();
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double inv_n = 1.0 / static_cast<double>(e.P.rows());
  while (static_cast<int>(out.size()) < count) {
    const double r = std::pow(uni(rng), inv_n);
    if (r == 0.0) continue;
    out.push_back(e.center + solver.solve(r * unit_direction(e.P.rows(), rng)));
  }
  return out;
}

std::vector<std::pair<Matrix, Matrix>> realization_samples(const IntervalMatrix& A,
                                                           const IntervalMatrix& B, int count,
                                                           std::uint64_t seed) {
  std::vector<std::pair<Matrix, Matrix>> out;
  if (count <= 0) return out;
  std::mt19937_64 rng(seed);
  const std::size_t q = A.free_entries() + B.free_entries();
  if (q < 62 && (std::size_t{1} << q) <= static_cast<std::size_t>(count)) {
    for (const Matrix& a : enumerate_vertices(A)) {
      for (const Matrix& b : enumerate_vertices(B)) out.emplace_back(a, b);
    }
  } else {
    for (int k = 0; k < count / 2; ++k) out.emplace_back(sample_vertex(A, rng), sample_vertex(B, rng));
  }
  while (static_cast<int>(out.size()) < count) out.emplace_back(sample(A, rng), sample(B, rng));
  return out;
}

LyapunovReport lyapunov_decrease_check(const UncertainNNCS& sys, const Certificate& cert,
                                       int n_state_samples, int n_uncertainty_samples,
                                       std::uint64_t seed) {
  const Eigen::Index n = sys.state_dim();
  if (cert.P.rows() != n || cert.P.cols() != n) {
    throw DimensionError("certificate P does not match the state dimension");
  }
  const Vector xs = sys.equilibrium();
  const Ellipsoid e{cert.P, xs};
  std::vector<Vector> states;
  for (Vector& x : ellipsoid_samples(e, n_state_samples, seed)) {
    if ((x - xs).squaredNorm() > 0.0) states.push_back(std::move(x));
  }
  const auto count = static_cast<Eigen::Index>(states.size());
  Matrix dev(n, count);
  Matrix inputs(sys.input_dim(), count);
  LyapunovReport rep;
  for (Eigen::Index k = 0; k < count; ++k) {
    dev.col(k) = states[static_cast<std::size_t>(k)] - xs;
    inputs.col(k) = sys.net.forward(states[static_cast<std::size_t>(k)]);
  }
  if (sys.saturation) {
    for (Eigen::Index k = 0; k < count; ++k) {
      if ((inputs.col(k).array() < sys.saturation->lo).any() ||
          (inputs.col(k).array() > sys.saturation->hi).any()) {
        ++rep.saturation_engaged;
      }
    }
  }
  const Matrix Pc = cert.P;  // column-major copy for the kernel
  Vector v_now(count), v_next(count);
  kernels::quad_forms({Pc.data(), static_cast<std::size_t>(Pc.size())}, static_cast<std::size_t>(n),
                      {dev.data(), static_cast<std::size_t>(dev.size())},
                      {v_now.data(), static_cast<std::size_t>(count)});
  rep.worst_relative_change = -std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : realization_samples(sys.A, sys.B, n_uncertainty_samples, seed + 1)) {
    // x+ - x* = A x + B u - x*, written per column.
    Matrix next = a * (dev.colwise() + xs) + b * inputs;
    next.colwise() -= xs;
    kernels::quad_forms({Pc.data(), static_cast<std::size_t>(Pc.size())},
                        static_cast<std::size_t>(n),
                        {next.data(), static_cast<std::size_t>(next.size())},
                        {v_next.data(), static_cast<std::size_t>(count)});
    for (Eigen::Index k = 0; k < count; ++k) {
      ++rep.pairs;
      if (!(v_next(k) < v_now(k))) ++rep.violations;
      rep.worst_relative_change =
          std::max(rep.worst_relative_change, (v_next(k) - v_now(k)) / v_now(k));
    }
  }
  return rep;
}

ContainmentReport containment_check(const Ellipsoid& e, const FeedforwardNetwork& net,
                                    const Vector& v1_lower, const Vector& v1_upper, int n_samples,
                                    std::uint64_t seed, double block_tol) {
  const Layer& first = net.layers().front();
  const Eigen::Index n1 = first.weight.rows();
  if (v1_lower.size() != n1 || v1_upper.size() != n1 || e.P.rows() != first.weight.cols()) {
    throw DimensionError("containment_check: box or ellipsoid does not match the network");
  }
  ContainmentReport rep;
  for (const Vector& x : ellipsoid_samples(e, n_samples, seed)) {
    const Vector v = first.weight * x + first.bias;
    ++rep.samples;
    bool bad = false;
    for (Eigen::Index i = 0; i < n1; ++i) {
      const double excess = std::max(v(i) - v1_upper(i), v1_lower(i) - v(i));
      rep.worst_excess = std::max(rep.worst_excess, excess);
      const double slack = 1e-9 * std::max({1.0, std::abs(v1_lower(i)), std::abs(v1_upper(i))});
      if (excess > slack) bad = true;
    }
    if (bad) ++rep.violations;
  }
  const Vector vs = first.weight * e.center + first.bias;
  const Eigen::Index n = e.P.rows();
  rep.min_block_eigenvalue = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n1; ++i) {
    const double h = std::min(v1_upper(i) - vs(i), vs(i) - v1_lower(i));
    Matrix blk(n + 1, n + 1);
    blk(0, 0) = h * h;
    blk.block(0, 1, 1, n) = first.weight.row(i);
    blk.block(1, 0, n, 1) = first.weight.row(i).transpose();
    blk.bottomRightCorner(n, n) = e.P;
    const double lam = sdp::smallest_eigenvalue(blk);
    rep.min_block_eigenvalue = std::min(rep.min_block_eigenvalue, lam);
    if (!(h > 0.0) || lam < -block_tol * (1.0 + blk.cwiseAbs().maxCoeff())) rep.blocks_psd = false;
  }
  return rep;
}

ConvergenceReport trajectory_convergence(const UncertainNNCS& sys, const Ellipsoid& e,
                                         int n_starts, int n_realizations, int steps, double tol,
                                         std::uint64_t seed, bool saturate, int keep) {
  ConvergenceReport rep;
  const Vector xs = sys.equilibrium();
  const auto starts = boundary_samples(e, n_starts, seed);
  const auto real = realization_samples(sys.A, sys.B, n_realizations, seed + 1);
  const std::optional<Saturation> sat = saturate ? sys.saturation : std::nullopt;
  for (const auto& [a, b] : real) {
    for (const Vector& x0 : starts) {
      Trajectory tr = simulate(a, b, sys.net, x0, steps, sat);
      ++rep.runs;
      if (tr.saturated) ++rep.saturated;
      if (tr.diverged) {
        ++rep.diverged;
        rep.worst_final_distance = std::numeric_limits<double>::infinity();
      } else {
        const double d = (tr.states.back() - xs).norm();
        rep.worst_final_distance = std::max(rep.worst_final_distance, d);
        if (d <= tol) ++rep.converged;
      }
      if (static_cast<int>(rep.kept.size()) < keep) rep.kept.push_back(std::move(tr));
    }
  }
  return rep;
}

Matrix relaxation1_block(const Matrix& Z, const Matrix& P, const Matrix& D, const Matrix& gamma) {
  const Eigen::Index nh = Z.rows(), n = P.rows(), o = nh - n;
  if (Z.cols() != nh || D.rows() != nh || D.cols() != n || gamma.rows() != nh ||
      gamma.cols() != n || o < 0) {
    throw DimensionError("relaxation1_block: shapes do not match");
  }
  Matrix M = Matrix::Zero(nh + nh * n, nh + nh * n);
  M.topLeftCorner(nh, nh) = Z;
  for (Eigen::Index i = 0; i < nh; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      M(i, i) += gamma(i, j) * D(i, j) * D(i, j);
      M(nh + i * n + j, nh + i * n + j) = -gamma(i, j);
    }
    M.block(o, nh + i * n, n, n) = P;
    M.block(nh + i * n, o, n, n) = P;
  }
  return M;
}

Matrix relaxation2_block(const Matrix& Z, const Matrix& P, const Vector& t, const Vector& s) {
  const Eigen::Index nh = Z.rows(), n = P.rows(), o = nh - n;
  if (Z.cols() != nh || t.size() != nh || s.size() != n || o < 0) {
    throw DimensionError("relaxation2_block: shapes do not match");
  }
  Matrix M = Matrix::Zero(nh + n, nh + n);
  M.topLeftCorner(nh, nh) = Z;
  M.topLeftCorner(nh, nh).diagonal() += t;
  M.block(nh, o, n, n) = P;
  M.block(o, nh, n, n) = P;
  M.bottomRightCorner(n, n).diagonal() = -s;
  return M;
}

namespace {

double largest_eigenvalue(const Matrix& m) { return -sdp::smallest_eigenvalue(-m); }

// Largest eps in (0, hi] with ok(eps), by bisection from a known-good 0.
template <class Ok>
double bisect_largest(double hi, Ok ok) {
  if (ok(hi)) return hi;
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

IiToIResult convert_ii_to_i(const Matrix& Z, const Matrix& P, const Matrix& D, const Vector& t,
                            const Vector& s, double epsilon_prime) {
  const Eigen::Index nh = Z.rows(), n = P.rows();
  if (D.rows() != nh || D.cols() != n) throw DimensionError("convert_ii_to_i: D has the wrong shape");
  if ((D.array() < 0.0).any()) throw PreconditionError("convert_ii_to_i: D must be entrywise >= 0");
  if (!(epsilon_prime > 0.0)) throw PreconditionError("convert_ii_to_i: epsilon' must be positive");
  const double lmi2 = largest_eigenvalue(relaxation2_block(Z, P, t, s));
  const Matrix S = s.asDiagonal();
  auto gap = [&](const Matrix& Dt) {
    Matrix G = -Dt * S * Dt.transpose();
    G.diagonal() += t;
    return G;
  };
  const double base = sdp::smallest_eigenvalue(gap(D));
  if (!(lmi2 < 0.0) || !(base > 0.0)) {
    throw PreconditionError("convert_ii_to_i: (T, S) do not satisfy the LMI-II inequalities");
  }
  // Keep half of the slack of T - D S D' so that G stays well conditioned.
  const Matrix ones = Matrix::Ones(nh, n);
  IiToIResult res;
  res.epsilon = bisect_largest(epsilon_prime, [&](double e) {
    return sdp::smallest_eigenvalue(gap(D + e * ones)) >= 0.5 * base;
  });
  if (!(res.epsilon > 0.0)) throw InternalError("convert_ii_to_i: no admissible epsilon found");
  const Matrix Dt = D + res.epsilon * ones;
  const Matrix G = gap(Dt);
  Vector c;
  if (nh <= 8) {
    c = cofactors(G, CofactorMethod::Minors).col(0);
  } else {
    // C(i, 1) = |G| (G^{-1})(i, 1) and |G| > 0, so the positive multiple
    // G^{-1} e_1 gives the same gamma.
    c = G.llt().solve(Vector::Unit(nh, 0));
  }
  if (!(c.array() > 0.0).all()) {
    throw InternalError("convert_ii_to_i: a first-column cofactor of G is not positive");
  }
  res.gamma.resize(nh, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double num = s(j) * Dt.col(j).dot(c);
    for (Eigen::Index i = 0; i < nh; ++i) res.gamma(i, j) = num / (Dt(i, j) * c(i));
  }
  res.row_bounds_hold = true;
  for (Eigen::Index i = 0; i < nh; ++i) {
    const double lhs = res.gamma.row(i).dot(D.row(i).cwiseAbs2());
    if (lhs > t(i) * (1.0 + 1e-12)) res.row_bounds_hold = false;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double sum = res.gamma.col(j).cwiseInverse().sum();
    res.column_sum_error = std::max(res.column_sum_error, std::abs(s(j) * sum - 1.0));
  }
  res.lmi1_max_eigenvalue = largest_eigenvalue(relaxation1_block(Z, P, D, res.gamma));
  return res;
}

IToIiResult convert_i_to_ii(const Matrix& Z, const Matrix& P, const Matrix& D,
                            const Matrix& gamma, double epsilon_prime) {
  const Eigen::Index nh = Z.rows(), n = P.rows();
  if (!(epsilon_prime > 0.0)) throw PreconditionError("convert_i_to_ii: epsilon' must be positive");
  if (gamma.rows() != nh || gamma.cols() != n) throw DimensionError("convert_i_to_ii: gamma has the wrong shape");
  if (!(gamma.array() > 0.0).all() ||
      !(largest_eigenvalue(relaxation1_block(Z, P, D, gamma)) < 0.0)) {
    throw PreconditionError("convert_i_to_ii: gamma does not satisfy the LMI-I inequality");
  }
  IToIiResult res;
  Vector tstar(nh);
  for (Eigen::Index i = 0; i < nh; ++i) tstar(i) = gamma.row(i).dot(D.row(i).cwiseAbs2());
  res.s.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) res.s(j) = 1.0 / gamma.col(j).cwiseInverse().sum();
  auto lmi2 = [&](double e) {
    return largest_eigenvalue(relaxation2_block(Z, P, tstar.array() + e, res.s));
  };
  const double base = lmi2(0.0);
  if (!(base < 0.0)) throw InternalError("convert_i_to_ii: T* does not satisfy the LMI-II block");
  res.epsilon = bisect_largest(epsilon_prime, [&](double e) { return lmi2(e) <= 0.5 * base; });
  if (!(res.epsilon > 0.0)) throw InternalError("convert_i_to_ii: no admissible epsilon found");
  res.t = tstar.array() + res.epsilon;
  res.lmi2_max_eigenvalue = lmi2(res.epsilon);
  const Matrix dsd = D * res.s.asDiagonal() * D.transpose();
  res.bound_min_eigenvalue = sdp::smallest_eigenvalue(Matrix(res.t.asDiagonal()) - dsd);
  res.tstar_min_eigenvalue = sdp::smallest_eigenvalue(Matrix(tstar.asDiagonal()) - dsd);
  return res;
}

bool petersen_bound_check(const Matrix& A, const Matrix& B, const Matrix& F, double gamma) {
  if (A.cols() != F.rows() || F.cols() != B.rows() || B.cols() != A.rows()) {
    throw DimensionError("petersen_bound_check: A F B must be square");
  }
  if (!(gamma > 0.0)) throw PreconditionError("petersen_bound_check: gamma must be positive");
  if (F.size() > 0 && sdp::symmetric_eigenvalues(F.transpose() * F).maxCoeff() > 1.0 + 1e-12) {
    throw PreconditionError("petersen_bound_check: F'F exceeds I");
  }
  const Matrix afb = A * F * B;
  const Matrix bound = gamma * A * A.transpose() + B.transpose() * B / gamma;
  const Matrix r = bound - afb - afb.transpose();
  if (r.size() == 0) return true;
  return sdp::symmetric_eigenvalues(r).minCoeff() >= -1e-10 * std::max(1.0, bound.norm());
}

namespace {

double minor_det(const Matrix& A, Eigen::Index skip_r, Eigen::Index skip_c) {
  const Eigen::Index n = A.rows();
  if (n == 1) return 1.0;
  Matrix m(n - 1, n - 1);
  for (Eigen::Index i = 0, r = 0; i < n; ++i) {
    if (i == skip_r) continue;
    for (Eigen::Index j = 0, c = 0; j < n; ++j) {
      if (j == skip_c) continue;
      m(r, c++) = A(i, j);
    }
    ++r;
  }
  return m.partialPivLu().determinant();
}

}  // namespace

Matrix cofactors(const Matrix& A, CofactorMethod method) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw DimensionError("cofactors of a non-square matrix");
  if (method == CofactorMethod::Auto) method = n <= 8 ? CofactorMethod::Minors : CofactorMethod::Adjugate;
  if (method == CofactorMethod::Adjugate && n > 0) {
    Eigen::PartialPivLU<Matrix> lu(A);
    const double det = lu.determinant();
    if (det != 0.0 && std::isfinite(det)) return det * lu.inverse().transpose();
  }
  Matrix C(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      C(i, j) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * minor_det(A, i, j);
    }
  }
  return C;
}

bool cofactor_positivity_check(const Matrix& A) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || n == 0) throw PreconditionError("cofactor_positivity_check: need a square matrix");
  const double scale = A.cwiseAbs().maxCoeff();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw PreconditionError("cofactor_positivity_check: matrix is not symmetric");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j ? !(A(i, j) > 0.0) : !(A(i, j) < 0.0)) {
        throw PreconditionError(
            "cofactor_positivity_check: need a positive diagonal and a strictly negative off-diagonal");
      }
    }
  }
  if (A.llt().info() != Eigen::Success) {
    throw PreconditionError("cofactor_positivity_check: matrix is not positive definite");
  }
  return (cofactors(A).array() > 0.0).all();
}

bool laplace_identity_check(const Matrix& A) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw DimensionError("laplace_identity_check: need a square matrix");
  if (n == 0) return true;
  const Matrix C = cofactors(A);
  const double det = A.partialPivLu().determinant();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double sum = A.row(k).dot(C.row(i));
      const double mag = A.row(k).cwiseAbs().dot(C.row(i).cwiseAbs());
      const double want = k == i ? det : 0.0;
      if (std::abs(sum - want) > 1e-9 * std::max({mag, std::abs(det), 1e-300})) return false;
    }
  }
  return true;
}

}  // namespace nncert
