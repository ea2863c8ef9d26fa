#include "nncert/qc_abstraction.hpp"

#include "nncert/error.hpp"

namespace nncert {

namespace {

void check_sectors(const SectorVectors& s) {
  if (s.alpha.size() != s.beta.size()) throw DimensionError("sector vectors differ in length");
  if ((s.alpha.array() > s.beta.array()).any()) {
    throw PreconditionError("sector with alpha > beta");
  }
}

}  // namespace

SectorVectors compute_sectors(const FeedforwardNetwork& net, const PreActivationBounds& bounds,
                              const EquilibriumTuple& eq) {
  const Eigen::Index nphi = net.n_phi();
  SectorVectors s{Vector(nphi), Vector(nphi)};
  for (Eigen::Index i = 0; i < nphi; ++i) {
    const Sector sec =
        sector_bounds(net.activation(), bounds.v_lower(i), bounds.v_upper(i), eq.v_star(i));
    s.alpha(i) = sec.alpha;
    s.beta(i) = sec.beta;
  }
  return s;
}

Matrix build_psi(const SectorVectors& s) {
  check_sectors(s);
  const Eigen::Index k = s.alpha.size();
  Matrix psi = Matrix::Zero(2 * k, 2 * k);
  psi.topLeftCorner(k, k) = s.beta.asDiagonal();
  psi.topRightCorner(k, k) = -Matrix::Identity(k, k);
  psi.bottomLeftCorner(k, k) = -Matrix(s.alpha.asDiagonal());
  psi.bottomRightCorner(k, k).setIdentity();
  return psi;
}

Matrix build_m(const Multiplier& lam) {
  if ((lam.lambda.array() < 0.0).any()) throw PreconditionError("negative QC multiplier");
  const Eigen::Index k = lam.lambda.size();
  Matrix m = Matrix::Zero(2 * k, 2 * k);
  m.topRightCorner(k, k) = lam.lambda.asDiagonal();
  m.bottomLeftCorner(k, k) = lam.lambda.asDiagonal();
  return m;
}

Matrix build_x(const Multiplier& lam, const SectorVectors& s, const IsolationMatrices& iso) {
  if (lam.lambda.size() != s.alpha.size() || 2 * s.alpha.size() != iso.R_phi.rows()) {
    throw DimensionError("build_x: multiplier, sectors and R_phi disagree on n_phi");
  }
  const Matrix psi_r = build_psi(s) * iso.R_phi;
  Matrix x = psi_r.transpose() * build_m(lam) * psi_r;
  return 0.5 * (x + x.transpose());
}

std::vector<QcGenerator> qc_generators(const SectorVectors& s, const IsolationMatrices& iso) {
  check_sectors(s);
  const Eigen::Index nphi = s.alpha.size();
  const Eigen::Index n = iso.N_vx.cols();
  std::vector<QcGenerator> out;
  out.reserve(static_cast<std::size_t>(nphi));
  for (Eigen::Index i = 0; i < nphi; ++i) {
    Vector row(n + nphi);
    row.head(n) = iso.N_vx.row(i).transpose();
    row.tail(nphi) = iso.N_vw.row(i).transpose();
    QcGenerator g{s.beta(i) * row, -s.alpha(i) * row};
    g.a(n + i) -= 1.0;
    g.b(n + i) += 1.0;
    out.push_back(std::move(g));
  }
  return out;
}

double qc_form(const Vector& v_phi, const EquilibriumTuple& eq, const SectorVectors& s,
               const Multiplier& lam, const FeedforwardNetwork& net) {
  const Eigen::Index k = v_phi.size();
  if (k != eq.v_star.size() || k != s.alpha.size() || k != lam.lambda.size()) {
    throw DimensionError("qc_form: inconsistent neuron counts");
  }
  Vector z(2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    z(i) = v_phi(i) - eq.v_star(i);
    z(k + i) = net.activation()(v_phi(i)) - eq.w_star(i);
  }
  const Vector pz = build_psi(s) * z;
  return pz.dot(build_m(lam) * pz);
}

bool qc_satisfied(const Vector& v_phi, const EquilibriumTuple& eq, const SectorVectors& s,
                  const Multiplier& lam, const FeedforwardNetwork& net) {
  return qc_form(v_phi, eq, s, lam, net) >= -1e-12;
}

}  // namespace nncert
