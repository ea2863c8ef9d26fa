#include "nncert/lmi_certificates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace nncert {

using sdp::BlockBuilder;
using sdp::BlockRole;

Vector UncertainNNCS::equilibrium() const {
  return x_star.size() == 0 ? Vector::Zero(A.rows()) : x_star;
}

void validate_system(const UncertainNNCS& sys, double tol) {
  const Eigen::Index n = sys.A.rows();
  if (sys.A.cols() != n) throw DimensionError("A must be square");
  if (sys.B.rows() != n) throw DimensionError("B must have as many rows as A");
  if (sys.net.input_dim() != n) throw DimensionError("network input size differs from state size");
  if (sys.net.output_dim() != sys.B.cols()) {
    throw DimensionError("network output size differs from the number of inputs");
  }
  const Eigen::Index n1 = sys.net.hidden_width(0);
  if (sys.v1_lower.size() != n1 || sys.v1_upper.size() != n1) {
    throw DimensionError("first-layer box must have " + std::to_string(n1) + " entries");
  }
  const Vector xs = sys.equilibrium();
  if (xs.size() != n) throw DimensionError("x_star has the wrong size");
  const Vector u = sys.net.forward(xs);
  auto residual = [&](const Matrix& A, const Matrix& B) {
    return (A * xs + B * u - xs).lpNorm<Eigen::Infinity>();
  };
  std::vector<std::pair<Matrix, Matrix>> checks;
  const std::size_t q = sys.A.free_entries() + sys.B.free_entries();
  if (q <= 10) {
    for (const Matrix& a : enumerate_vertices(sys.A)) {
      for (const Matrix& b : enumerate_vertices(sys.B)) checks.emplace_back(a, b);
    }
  } else {
    std::mt19937_64 rng(0x5eed);
    for (int k = 0; k < 1024; ++k) checks.emplace_back(sample_vertex(sys.A, rng), sample_vertex(sys.B, rng));
  }
  for (const auto& [a, b] : checks) {
    const double r = residual(a, b);
    if (!(r <= tol)) {
      throw PreconditionError("x_star is not an equilibrium of every realization (residual " +
                              std::to_string(r) + ")");
    }
  }
}

TildeB build_tilde_b(const IntervalMatrix& B, const IsolationMatrices& iso) {
  if (B.cols() != iso.N_uw.rows()) {
    throw DimensionError("B has " + std::to_string(B.cols()) + " columns but N_uw has " +
                         std::to_string(iso.N_uw.rows()) + " rows");
  }
  const CenterRadius cr = center_radius(mul_interval_const(B, iso.N_uw));
  return {cr.center, cr.radius};
}

Matrix build_d(const Matrix& A_r, const TildeB& tb) {
  const Eigen::Index n = A_r.rows();
  if (A_r.cols() != n || tb.br.rows() != n) throw DimensionError("build_d: shape mismatch");
  if ((A_r.array() < 0.0).any() || (tb.br.array() < 0.0).any()) {
    throw PreconditionError("build_d: radius entries must be nonnegative");
  }
  const Eigen::Index nphi = tb.br.cols();
  Matrix D = Matrix::Zero(2 * n + nphi, n);
  D.topRows(n) = A_r.transpose();
  D.middleRows(n, nphi) = tb.br.transpose();
  return D;
}

std::string method_name(CertificateMethod m) {
  switch (m) {
    case CertificateMethod::Nominal:
      return "nominal";
    case CertificateMethod::Vertex:
      return "vertex";
    case CertificateMethod::LmiI:
      return "lmi1";
    case CertificateMethod::LmiII:
      return "lmi2";
    case CertificateMethod::LmiIII:
      return "lmi3";
  }
  return "?";
}

CertificateMethod parse_method(const std::string& s) {
  for (auto m : {CertificateMethod::Nominal, CertificateMethod::Vertex, CertificateMethod::LmiI,
                 CertificateMethod::LmiII, CertificateMethod::LmiIII}) {
    if (method_name(m) == s) return m;
  }
  throw SchemaError("unknown method '" + s + "' (expected nominal, vertex, lmi1, lmi2 or lmi3)");
}

std::string kind_name(CertifyOutcome::Kind k) {
  switch (k) {
    case CertifyOutcome::Kind::Certified:
      return "certified";
    case CertifyOutcome::Kind::Infeasible:
      return "infeasible";
    case CertifyOutcome::Kind::Failed:
      break;
  }
  return "failed";
}

CertificationContext prepare(const UncertainNNCS& sys) {
  validate_system(sys);
  CertificationContext ctx;
  ctx.n = static_cast<int>(sys.state_dim());
  ctx.m = static_cast<int>(sys.input_dim());
  ctx.n_phi = static_cast<int>(sys.net.n_phi());
  ctx.n1 = static_cast<int>(sys.net.hidden_width(0));
  ctx.n_hat = 2 * ctx.n + ctx.n_phi;
  ctx.x_star = sys.equilibrium();
  ctx.iso = assemble_isolation(sys.net);
  if (ctx.iso.N_ux.cwiseAbs().maxCoeff() != 0.0) {
    throw PreconditionError("isolation produced a nonzero N_ux");
  }
  ctx.eq = propagate_equilibrium(sys.net, ctx.x_star);
  ctx.bounds = propagate_bounds(sys.net, sys.v1_lower, sys.v1_upper, ctx.eq);
  ctx.sectors = compute_sectors(sys.net, ctx.bounds, ctx.eq);
  ctx.generators = qc_generators(ctx.sectors, ctx.iso);
  ctx.a_cr = center_radius(sys.A);
  ctx.tb = build_tilde_b(sys.B, ctx.iso);
  ctx.D = build_d(ctx.a_cr.radius, ctx.tb);
  ctx.W1 = sys.net.layers().front().weight;
  ctx.h.resize(ctx.n1);
  for (int i = 0; i < ctx.n1; ++i) {
    const double vs = ctx.eq.v_star(i);
    ctx.h(i) = std::min(sys.v1_upper(i) - vs, vs - sys.v1_lower(i));
    if (!(ctx.h(i) > 0.0)) {
      throw PreconditionError("first-layer box of neuron " + std::to_string(i) +
                              " has no room around the equilibrium");
    }
  }
  ctx.A = sys.A;
  ctx.B = sys.B;
  return ctx;
}

namespace {

int& sym_at(std::vector<int>& v, int dim, int i, int j) {
  return v[static_cast<std::size_t>(i * dim + j)];
}
int sym_at(const std::vector<int>& v, int dim, int i, int j) {
  return v[static_cast<std::size_t>(i * dim + j)];
}

std::vector<int> add_symmetric(sdp::ConicProgram& p, const std::string& name, int dim,
                               bool trace_objective) {
  std::vector<int> idx(static_cast<std::size_t>(dim * dim), -1);
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      const int k = p.add_variable(name + "(" + std::to_string(i + 1) + "," +
                                       std::to_string(j + 1) + ")",
                                   trace_objective && i == j ? 1.0 : 0.0);
      sym_at(idx, dim, i, j) = k;
      sym_at(idx, dim, j, i) = k;
    }
  }
  return idx;
}

// Adds the symmetric variable matrix (basis e_p e_q' + e_q e_p') at offset
// (r0, c0). When the target lies on the diagonal of the block only the upper
// triangle is written, otherwise the full rectangle is.
void put_symmetric(BlockBuilder& b, const std::vector<int>& idx, int dim, int r0, int c0,
                   double scale) {
  for (int p = 0; p < dim; ++p) {
    for (int q = p; q < dim; ++q) {
      const int var = sym_at(idx, dim, p, q);
      b.add(var, r0 + p, c0 + q, scale);
      if (r0 != c0 && p != q) b.add(var, r0 + q, c0 + p, scale);
    }
  }
}

VariableLayout base_layout(sdp::ConicProgram& p, const CertificationContext& ctx) {
  VariableLayout lay;
  lay.n = ctx.n;
  lay.n_hat = ctx.n_hat;
  lay.P = add_symmetric(p, "P", ctx.n, true);
  for (int i = 0; i < ctx.n_phi; ++i) {
    lay.lambda.push_back(p.add_variable("lambda" + std::to_string(i + 1), 0.0, true));
  }
  return lay;
}

// Z(lambda, P) with the bottom-left block P [A  BN] for a given realization.
void put_z(BlockBuilder& b, const VariableLayout& lay, const CertificationContext& ctx,
           const Matrix& AB) {
  const int n = ctx.n;
  const int o = ctx.n + ctx.n_phi;
  for (int p = 0; p < n; ++p) {
    for (int q = p; q < n; ++q) {
      const int var = sym_at(lay.P, n, p, q);
      b.add(var, p, q, -1.0);
      b.add(var, o + p, o + q, -1.0);
      for (int c = 0; c < o; ++c) {
        b.add(var, o + p, c, AB(q, c));
        if (p != q) b.add(var, o + q, c, AB(p, c));
      }
    }
  }
  for (int i = 0; i < ctx.n_phi; ++i) {
    const QcGenerator& g = ctx.generators[static_cast<std::size_t>(i)];
    const int var = lay.lambda[static_cast<std::size_t>(i)];
    for (int c = 0; c < o; ++c) {
      for (int r = 0; r <= c; ++r) b.add(var, r, c, g.a(r) * g.b(c) + g.b(r) * g.a(c));
    }
  }
}

// U: P repeated in the last n rows of every column group i.
void put_u(BlockBuilder& b, const VariableLayout& lay, const CertificationContext& ctx) {
  const int n = ctx.n;
  const int o = ctx.n + ctx.n_phi;
  for (int i = 0; i < ctx.n_hat; ++i) put_symmetric(b, lay.P, n, o, ctx.n_hat + i * n, 1.0);
}

void add_common(sdp::ConicProgram& p, const VariableLayout& lay, const CertificationContext& ctx,
                double margin) {
  const int n = ctx.n;
  for (int i = 0; i < ctx.n1; ++i) {
    BlockBuilder b(n + 1, "containment" + std::to_string(i + 1), BlockRole::Containment);
    b.add_constant(0, 0, ctx.h(i) * ctx.h(i));
    for (int c = 0; c < n; ++c) b.add_constant(0, 1 + c, ctx.W1(i, c));
    put_symmetric(b, lay.P, n, 1, 1, 1.0);
    p.add_block(std::move(b).build());
  }
  BlockBuilder d(n, "P_definite", BlockRole::Definiteness);
  put_symmetric(d, lay.P, n, 0, 0, 1.0);
  d.add_margin(margin);
  p.add_block(std::move(d).build());
}

Matrix nominal_ab(const CertificationContext& ctx, const Matrix& A, const Matrix& B) {
  Matrix ab(ctx.n, ctx.n + ctx.n_phi);
  ab << A, B * ctx.iso.N_uw;
  return ab;
}

Matrix center_ab(const CertificationContext& ctx) {
  Matrix ab(ctx.n, ctx.n + ctx.n_phi);
  ab << ctx.a_cr.center, ctx.tb.b0;
  return ab;
}

void add_schur_block(sdp::ConicProgram& p, const VariableLayout& lay,
                     const CertificationContext& ctx, const Matrix& AB, double margin,
                     std::string label) {
  BlockBuilder b(ctx.n_hat, std::move(label), BlockRole::Lyapunov);
  b.set_sign(-1.0);
  put_z(b, lay, ctx, AB);
  b.add_margin(margin);
  p.add_block(std::move(b).build());
}

Matrix sym_value(const std::vector<int>& idx, int dim, const Vector& y) {
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = y(sym_at(idx, dim, i, j));
  }
  return m;
}

}  // namespace

AssembledProgram assemble_nominal(const CertificationContext& ctx, double margin) {
  if (!ctx.A.is_degenerate() || !ctx.B.is_degenerate()) {
    throw PreconditionError("the nominal certificate needs zero-radius A and B; use vertex or lmi1-3");
  }
  AssembledProgram ap;
  ap.method = CertificateMethod::Nominal;
  ap.layout = base_layout(ap.program, ctx);
  add_schur_block(ap.program, ap.layout, ctx, nominal_ab(ctx, ctx.A.lower(), ctx.B.lower()),
                  margin, "lyapunov");
  add_common(ap.program, ap.layout, ctx, margin);
  return ap;
}

std::size_t vertex_count_log2(const CertificationContext& ctx) {
  return ctx.A.free_entries() + ctx.B.free_entries();
}

AssembledProgram assemble_vertex(const CertificationContext& ctx, double margin,
                                 std::size_t cap_log2) {
  const std::size_t q = vertex_count_log2(ctx);
  if (q > cap_log2) {
    throw CapacityError("vertex certificate needs 2^" + std::to_string(q) +
                            " LMI blocks, above the cap of 2^" + std::to_string(cap_log2),
                        q);
  }
  const std::vector<Matrix> av = enumerate_vertices(ctx.A, cap_log2);
  const std::vector<Matrix> bv = enumerate_vertices(ctx.B, cap_log2);
  AssembledProgram ap;
  ap.method = CertificateMethod::Vertex;
  ap.layout = base_layout(ap.program, ctx);
  for (std::size_t i = 0; i < av.size(); ++i) {
    for (std::size_t j = 0; j < bv.size(); ++j) {
      add_schur_block(ap.program, ap.layout, ctx, nominal_ab(ctx, av[i], bv[j]), margin,
                      "vertex" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
    }
  }
  add_common(ap.program, ap.layout, ctx, margin);
  return ap;
}

AssembledProgram assemble_lmi1(const CertificationContext& ctx, double margin) {
  AssembledProgram ap;
  ap.method = CertificateMethod::LmiI;
  ap.layout = base_layout(ap.program, ctx);
  VariableLayout& lay = ap.layout;
  const int n = ctx.n, nh = ctx.n_hat;
  for (int i = 0; i < nh; ++i) {
    for (int j = 0; j < n; ++j) {
      lay.gamma.push_back(ap.program.add_variable(
          "gamma(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")"));
    }
  }
  BlockBuilder b(nh + nh * n, "lmi1", BlockRole::Lyapunov);
  b.set_sign(-1.0);
  put_z(b, lay, ctx, center_ab(ctx));
  for (int i = 0; i < nh; ++i) {
    for (int j = 0; j < n; ++j) {
      const int var = lay.gamma[static_cast<std::size_t>(i * n + j)];
      b.add(var, i, i, ctx.D(i, j) * ctx.D(i, j));
      b.add(var, nh + i * n + j, nh + i * n + j, -1.0);
    }
  }
  put_u(b, lay, ctx);
  b.add_margin(margin);
  ap.program.add_block(std::move(b).build());
  add_common(ap.program, lay, ctx, margin);
  return ap;
}

AssembledProgram assemble_lmi2(const CertificationContext& ctx, double margin) {
  AssembledProgram ap;
  ap.method = CertificateMethod::LmiII;
  ap.layout = base_layout(ap.program, ctx);
  VariableLayout& lay = ap.layout;
  const int n = ctx.n, nh = ctx.n_hat, o = ctx.n + ctx.n_phi;
  for (int i = 0; i < nh; ++i) lay.t.push_back(ap.program.add_variable("t" + std::to_string(i + 1)));
  for (int j = 0; j < n; ++j) lay.s.push_back(ap.program.add_variable("s" + std::to_string(j + 1)));

  BlockBuilder a(nh + n, "lmi2_lyapunov", BlockRole::Lyapunov);
  a.set_sign(-1.0);
  put_z(a, lay, ctx, center_ab(ctx));
  for (int i = 0; i < nh; ++i) a.add(lay.t[static_cast<std::size_t>(i)], i, i, 1.0);
  put_symmetric(a, lay.P, n, nh, o, 1.0);
  for (int j = 0; j < n; ++j) a.add(lay.s[static_cast<std::size_t>(j)], nh + j, nh + j, -1.0);
  // The two strict inequalities chain into a single bound on Z, so each takes
  // half the margin. That way the implied margin matches lmi1 and vertex.
  a.add_margin(0.5 * margin);
  ap.program.add_block(std::move(a).build());

  BlockBuilder b(nh, "lmi2_uncertainty", BlockRole::UncertaintyBound);
  for (int i = 0; i < nh; ++i) b.add(lay.t[static_cast<std::size_t>(i)], i, i, 1.0);
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < nh; ++c) {
      for (int r = 0; r <= c; ++r) b.add(lay.s[static_cast<std::size_t>(j)], r, c, -ctx.D(r, j) * ctx.D(c, j));
    }
  }
  b.add_margin(0.5 * margin);
  ap.program.add_block(std::move(b).build());
  add_common(ap.program, lay, ctx, margin);
  return ap;
}

AssembledProgram assemble_lmi3(const CertificationContext& ctx, double margin) {
  AssembledProgram ap;
  ap.method = CertificateMethod::LmiIII;
  ap.layout = base_layout(ap.program, ctx);
  VariableLayout& lay = ap.layout;
  const int n = ctx.n, nh = ctx.n_hat;
  for (int i = 0; i < nh; ++i) {
    for (int j = 0; j < n; ++j) {
      lay.gamma.push_back(ap.program.add_variable(
          "gamma(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")"));
    }
  }
  lay.Y = add_symmetric(ap.program, "Y", nh, false);

  BlockBuilder a(nh + nh * n, "lmi3_uncertainty", BlockRole::UncertaintyBound);
  put_symmetric(a, lay.Y, nh, 0, 0, 1.0);
  for (int i = 0; i < nh; ++i) {
    for (int j = 0; j < n; ++j) {
      const int var = lay.gamma[static_cast<std::size_t>(i * n + j)];
      a.add(var, i, i, -ctx.D(i, j) * ctx.D(i, j));
      a.add(var, nh + i * n + j, nh + i * n + j, 1.0);
    }
  }
  put_u(a, lay, ctx);
  a.add_margin(0.5 * margin);  // chained with the block below, as in lmi2
  ap.program.add_block(std::move(a).build());

  BlockBuilder b(nh, "lmi3_lyapunov", BlockRole::Lyapunov);
  b.set_sign(-1.0);
  put_z(b, lay, ctx, center_ab(ctx));
  put_symmetric(b, lay.Y, nh, 0, 0, 1.0);
  b.add_margin(0.5 * margin);
  ap.program.add_block(std::move(b).build());
  add_common(ap.program, lay, ctx, margin);
  return ap;
}

AssembledProgram assemble(const CertificationContext& ctx, CertificateMethod method, double margin,
                          std::size_t cap_log2) {
  switch (method) {
    case CertificateMethod::Nominal:
      return assemble_nominal(ctx, margin);
    case CertificateMethod::Vertex:
      return assemble_vertex(ctx, margin, cap_log2);
    case CertificateMethod::LmiI:
      return assemble_lmi1(ctx, margin);
    case CertificateMethod::LmiII:
      return assemble_lmi2(ctx, margin);
    case CertificateMethod::LmiIII:
      return assemble_lmi3(ctx, margin);
  }
  throw PreconditionError("unknown method");
}

ProblemStats problem_stats(CertificateMethod method, long long n, long long n1, long long n_phi) {
  if (n <= 0 || n1 <= 0 || n_phi <= 0) throw PreconditionError("dimensions must be positive");
  const long long nh = 2 * n + n_phi;
  switch (method) {
    case CertificateMethod::LmiI:
      return {n * (n + 2 * nh + 1) / 2 + n_phi, (nh + n1) * (n + 1)};
    case CertificateMethod::LmiII:
      return {n * (n + 3) / 2 + nh + n_phi, n + 2 * nh + n1 * (n + 1)};
    case CertificateMethod::LmiIII:
      return {(n + nh) * (n + nh + 1) / 2 + n_phi, (nh + n1) * (n + 1) + nh};
    default:
      break;
  }
  throw PreconditionError("no closed-form size for method " + method_name(method));
}

ProblemStats introspect(const sdp::ConicProgram& program) {
  ProblemStats st;
  st.num_decision_vars = program.num_vars();
  for (const sdp::LmiBlock& b : program.blocks()) {
    if (b.role != BlockRole::Definiteness) st.lmi_total_size += b.size;
  }
  return st;
}

namespace {

Matrix x_of_lambda(const CertificationContext& ctx, const Vector& lambda) {
  const int o = ctx.n + ctx.n_phi;
  Matrix X = Matrix::Zero(o, o);
  for (int i = 0; i < ctx.n_phi; ++i) {
    const QcGenerator& g = ctx.generators[static_cast<std::size_t>(i)];
    X += lambda(i) * (g.a * g.b.transpose() + g.b * g.a.transpose());
  }
  return X;
}

Matrix z_with(const CertificationContext& ctx, const Matrix& AB, const Matrix& P,
              const Vector& lambda) {
  const int n = ctx.n, o = ctx.n + ctx.n_phi;
  Matrix Z = Matrix::Zero(ctx.n_hat, ctx.n_hat);
  Z.topLeftCorner(o, o) = x_of_lambda(ctx, lambda);
  Z.topLeftCorner(n, n) -= P;
  Z.bottomLeftCorner(n, o) = P * AB;
  Z.topRightCorner(o, n) = (P * AB).transpose();
  Z.bottomRightCorner(n, n) = -P;
  return Z;
}

}  // namespace

Matrix z_matrix(const CertificationContext& ctx, const Matrix& P, const Vector& lambda) {
  return z_with(ctx, center_ab(ctx), P, lambda);
}

Matrix schur_lyapunov_matrix(const CertificationContext& ctx, const Matrix& A, const Matrix& B,
                             const Matrix& P, const Vector& lambda) {
  return z_with(ctx, nominal_ab(ctx, A, B), P, lambda);
}

Matrix lyapunov_matrix(const CertificationContext& ctx, const Matrix& A, const Matrix& B,
                       const Matrix& P, const Vector& lambda) {
  const int n = ctx.n;
  Matrix AB(n, n + ctx.m);
  AB << A, B;
  const Matrix Q = AB * ctx.iso.R_V;
  const Matrix J = ctx.iso.R_V.topRows(n);
  Matrix M = Q.transpose() * P * Q - J.transpose() * P * J + x_of_lambda(ctx, lambda);
  return 0.5 * (M + M.transpose());
}

Matrix lmi1_matrix(const CertificationContext& ctx, const Matrix& P, const Vector& lambda,
                   const Matrix& gamma) {
  const int n = ctx.n, nh = ctx.n_hat, o = ctx.n + ctx.n_phi;
  Matrix M = Matrix::Zero(nh + nh * n, nh + nh * n);
  M.topLeftCorner(nh, nh) = z_matrix(ctx, P, lambda);
  for (int i = 0; i < nh; ++i) {
    for (int j = 0; j < n; ++j) {
      M(i, i) += gamma(i, j) * ctx.D(i, j) * ctx.D(i, j);
      M(nh + i * n + j, nh + i * n + j) = -gamma(i, j);
    }
    M.block(o, nh + i * n, n, n) = P;
    M.block(nh + i * n, o, n, n) = P;
  }
  return M;
}

Matrix lmi2_matrix(const CertificationContext& ctx, const Matrix& P, const Vector& lambda,
                   const Vector& t, const Vector& s) {
  const int n = ctx.n, nh = ctx.n_hat, o = ctx.n + ctx.n_phi;
  Matrix M = Matrix::Zero(nh + n, nh + n);
  M.topLeftCorner(nh, nh) = z_matrix(ctx, P, lambda);
  M.topLeftCorner(nh, nh).diagonal() += t;
  M.block(nh, o, n, n) = P;
  M.block(o, nh, n, n) = P;
  M.bottomRightCorner(n, n).diagonal() = -s;
  return M;
}

bool Ellipsoid::contains(const Vector& x, double tol) const {
  const Vector d = x - center;
  return d.dot(P * d) <= 1.0 + tol;
}

double ellipsoid_volume(const Ellipsoid& e) {
  const Eigen::Index n = e.P.rows();
  Eigen::LLT<Matrix> llt(e.P);
  if (n == 0 || e.P.cols() != n || llt.info() != Eigen::Success) {
    throw PreconditionError("ellipsoid matrix is not positive definite");
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
  const double half = 0.5 * static_cast<double>(n);
  const double ball = std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
  return ball * std::exp(-0.5 * log_det);
}

Certificate extract_certificate(const AssembledProgram& ap, const Vector& y, const Vector& x_star) {
  const VariableLayout& lay = ap.layout;
  Certificate c;
  c.method = ap.method;
  c.P = sym_value(lay.P, lay.n, y);
  c.lambda.resize(static_cast<Eigen::Index>(lay.lambda.size()));
  for (std::size_t i = 0; i < lay.lambda.size(); ++i) c.lambda(static_cast<Eigen::Index>(i)) = y(lay.lambda[i]);
  if (!lay.gamma.empty()) {
    c.gamma.resize(lay.n_hat, lay.n);
    for (int i = 0; i < lay.n_hat; ++i) {
      for (int j = 0; j < lay.n; ++j) c.gamma(i, j) = y(lay.gamma[static_cast<std::size_t>(i * lay.n + j)]);
    }
  }
  if (!lay.t.empty()) {
    c.t.resize(lay.n_hat);
    c.s.resize(lay.n);
    for (int i = 0; i < lay.n_hat; ++i) c.t(i) = y(lay.t[static_cast<std::size_t>(i)]);
    for (int j = 0; j < lay.n; ++j) c.s(j) = y(lay.s[static_cast<std::size_t>(j)]);
  }
  if (!lay.Y.empty()) c.Y = sym_value(lay.Y, lay.n_hat, y);
  c.ellipsoid = {c.P, x_star};
  return c;
}

namespace {

// Largest eigenvalue of the unreduced Lyapunov matrix over realizations:
// every vertex pair when there are at most 256, topped up with interior draws.
std::pair<double, int> sampled_lyapunov(const CertificationContext& ctx, const Certificate& c,
                                        int samples, std::uint64_t seed) {
  std::vector<std::pair<Matrix, Matrix>> real;
  std::mt19937_64 rng(seed);
  const std::size_t q = vertex_count_log2(ctx);
  if (q <= 8) {
    for (const Matrix& a : enumerate_vertices(ctx.A)) {
      for (const Matrix& b : enumerate_vertices(ctx.B)) real.emplace_back(a, b);
    }
  } else {
    for (int k = 0; k < samples / 2; ++k) real.emplace_back(sample_vertex(ctx.A, rng), sample_vertex(ctx.B, rng));
  }
  while (static_cast<int>(real.size()) < samples) real.emplace_back(sample(ctx.A, rng), sample(ctx.B, rng));
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : real) {
    const Matrix M = lyapunov_matrix(ctx, a, b, c.P, c.lambda);
    worst = std::max(worst, sdp::symmetric_eigenvalues(M).maxCoeff());
  }
  return {worst, static_cast<int>(real.size())};
}

}  // namespace

CertifyOutcome certify(const UncertainNNCS& sys, CertificateMethod method,
                       const CertifyOptions& options) {
  return certify(prepare(sys), method, options);
}

CertifyOutcome certify(const CertificationContext& ctx, CertificateMethod method,
                       const CertifyOptions& options) {
  CertifyOutcome out;
  out.method = method;
  const double margin = options.solver.strict_margin;
  const AssembledProgram ap = assemble(ctx, method, margin, options.vertex_cap_log2);
  out.size = introspect(ap.program);
  const sdp::SolveResult res = sdp::solve(ap.program, options.solver);
  out.stats = {res.status, res.wall_time, res.iterations, res.objective_value, res.message};
  if (res.status == sdp::SolveStatus::Infeasible) {
    out.kind = CertifyOutcome::Kind::Infeasible;
    out.message =
        "no certificate: the LMIs are infeasible (a sufficient condition failed; this does not "
        "prove instability)";
    return out;
  }
  if (!res.has_solution()) {
    out.kind = CertifyOutcome::Kind::Failed;
    out.message = "solver failed: " + res.message;
    return out;
  }
  out.residuals = sdp::verify_solution(ap.program, res.y, options.solver.verification_tol);
  Certificate cert = extract_certificate(ap, res.y, ctx.x_star);
  cert.stats = out.stats;
  cert.residuals = out.residuals;

  std::string problem;
  if (!out.residuals.pass) {
    const int f = out.residuals.first_failure;
    problem = f == -2 ? "a nonnegative multiplier is negative"
                      : "block '" + out.residuals.blocks[static_cast<std::size_t>(f)].label +
                            "' has eigenvalue " +
                            std::to_string(out.residuals.blocks[static_cast<std::size_t>(f)].min_eigenvalue);
  } else {
    const double pmin = sdp::symmetric_eigenvalues(cert.P).minCoeff();
    if (pmin < 0.5 * margin) {
      problem = "smallest eigenvalue of P is " + std::to_string(pmin) + ", below half the margin";
    } else {
      auto [worst, count] = sampled_lyapunov(ctx, cert, options.lyapunov_samples, options.seed);
      cert.worst_sampled_lyapunov = worst;
      cert.sampled_realizations = count;
      if (worst > -0.5 * margin) {
        problem = "sampled Lyapunov matrix has eigenvalue " + std::to_string(worst);
      }
    }
  }
  if (!problem.empty()) {
    if (res.status == sdp::SolveStatus::Optimal) {
      throw VerificationFailure("solver reported an optimum that fails verification: " + problem,
                                out.residuals);
    }
    out.kind = CertifyOutcome::Kind::Failed;
    out.message = "inaccurate solution rejected: " + problem;
    return out;
  }
  out.kind = CertifyOutcome::Kind::Certified;
  out.message = "certified";
  out.certificate = std::move(cert);
  return out;
}

}  // namespace nncert
