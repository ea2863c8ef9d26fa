// Infeasible-start primal-dual interior-point method for
//
//   min c'y  s.t.  Z = F0 + sum_k y_k F_k >= 0          (one Z per block)
//   max -F0.X  s.t.  F_k.X (+ x_k for nonneg k) = c_k,  X >= 0
//
// with the HKM search direction and Mehrotra predictor-corrector steps.
// Nonnegative variables form a diagonal block whose slack is y_k itself.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "nncert/kernels.hpp"
#include "nncert/sdp.hpp"

namespace nncert::sdp {

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Inaccurate:
      return "inaccurate";
    case SolveStatus::Failed:
      break;
  }
  return "failed";
}

namespace {

using Clock = std::chrono::steady_clock;

class TimeLimit : public std::exception {};

struct BlockState {
  const LmiBlock* blk = nullptr;
  int s = 0;
  Matrix X, Z, Zinv, Rd;
  Matrix dX, dZ, corr;  // corr = dXa dZa Zinv from the predictor
  std::vector<int> order;                    // term indices by nnz, descending
  std::vector<std::vector<int>> rows;        // distinct rows touched per term
  std::vector<std::size_t> tail_nnz;         // sum of nnz over order[a..]
};

// sum_{ij} F_ij A_ij for symmetric F given by its upper triangle, A arbitrary.
double inner(const std::vector<SymEntry>& f, const Matrix& a) {
  double acc = 0.0;
  for (const SymEntry& e : f) {
    acc += e.row == e.col ? e.value * a(e.row, e.col)
                          : e.value * (a(e.row, e.col) + a(e.col, e.row));
  }
  return acc;
}

void scatter(Matrix& out, const std::vector<SymEntry>& f, double scale) {
  for (const SymEntry& e : f) {
    out(e.row, e.col) += scale * e.value;
    if (e.row != e.col) out(e.col, e.row) += scale * e.value;
  }
}

double frob2(const std::vector<SymEntry>& f) {
  double acc = 0.0;
  for (const SymEntry& e : f) acc += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
  return acc;
}

// Largest a with X + a dX >= 0 (infinity if dX >= 0 on the cone).
double max_step(const Matrix& X, const Matrix& dX) {
  Eigen::LLT<Matrix> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  Matrix W = llt.matrixL().solve(dX);
  W = llt.matrixL().solve(W.transpose()).transpose();
  W = 0.5 * (W + W.transpose());
  const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(W, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

class Ipm {
 public:
  Ipm(const ConicProgram& p, const SolverConfig& cfg) : p_(p), cfg_(cfg) {}

  SolveResult run();

 private:
  void setup();
  void check_time() const {
    if (std::chrono::duration<double>(Clock::now() - start_).count() > cfg_.time_limit) {
      throw TimeLimit{};
    }
  }
  bool update_inverses();
  void residuals();
  void assemble_schur();
  Vector rhs(double sigma_mu, bool with_corr) const;
  Vector apply_schur(const Vector& dy) const;
  void directions(const Vector& dy, double sigma_mu, bool with_corr);
  std::pair<double, double> step_bounds() const;
  double backtrack(double step, bool primal) const;

  const ConicProgram& p_;
  SolverConfig cfg_;
  Clock::time_point start_;
  int m_ = 0;
  std::vector<BlockState> blocks_;
  std::vector<int> lp_var_;
  Vector c_, y_, lp_x_, lp_z_, lp_rd_, lp_dx_, lp_dz_, lp_corr_;
  Vector rp_;
  Matrix M_;
  double pobj_ = 0.0, dobj_ = 0.0, mu_ = 0.0, pinf_ = 0.0, dinf_ = 0.0, gap_ = 0.0;
  double norm_f0_ = 0.0, norm_c_ = 0.0;
  double farkas_ = std::numeric_limits<double>::infinity();
  int cone_dim_ = 0;
  bool trace_ = std::getenv("NNCERT_SOLVER_TRACE") != nullptr;
};

void Ipm::setup() {
  m_ = p_.num_vars();
  c_ = Eigen::Map<const Vector>(p_.objective().data(), m_);
  y_ = Vector::Zero(m_);
  norm_c_ = c_.norm();
  lp_var_ = p_.nonneg_vars();
  std::vector<double> var_norm2(static_cast<std::size_t>(m_), 0.0);
  blocks_.resize(p_.blocks().size());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    BlockState& st = blocks_[b];
    const LmiBlock& blk = p_.blocks()[b];
    st.blk = &blk;
    st.s = blk.size;
    cone_dim_ += st.s;
    norm_f0_ += frob2(blk.constant);
    st.order.resize(blk.terms.size());
    std::iota(st.order.begin(), st.order.end(), 0);
    std::stable_sort(st.order.begin(), st.order.end(), [&](int a, int c) {
      return blk.terms[static_cast<std::size_t>(a)].coeff.size() >
             blk.terms[static_cast<std::size_t>(c)].coeff.size();
    });
    st.rows.resize(blk.terms.size());
    std::vector<char> seen(static_cast<std::size_t>(st.s));
    for (std::size_t t = 0; t < blk.terms.size(); ++t) {
      std::fill(seen.begin(), seen.end(), 0);
      for (const SymEntry& e : blk.terms[t].coeff) {
        seen[static_cast<std::size_t>(e.row)] = 1;
        seen[static_cast<std::size_t>(e.col)] = 1;
      }
      for (int i = 0; i < st.s; ++i) {
        if (seen[static_cast<std::size_t>(i)]) st.rows[t].push_back(i);
      }
      var_norm2[static_cast<std::size_t>(blk.terms[t].var)] += frob2(blk.terms[t].coeff);
    }
    st.tail_nnz.assign(st.order.size() + 1, 0);
    for (std::size_t a = st.order.size(); a-- > 0;) {
      st.tail_nnz[a] =
          st.tail_nnz[a + 1] + blk.terms[static_cast<std::size_t>(st.order[a])].coeff.size();
    }
  }
  norm_f0_ = std::sqrt(norm_f0_);
  for (int k : lp_var_) var_norm2[static_cast<std::size_t>(k)] += 1.0;

  // Starting point scaled to the data in the style of SDPT3.
  for (BlockState& st : blocks_) {
    const double rs = std::sqrt(static_cast<double>(st.s));
    double xi = std::max(10.0, rs);
    double eta = std::max({10.0, rs, std::sqrt(frob2(st.blk->constant))});
    for (const VarTerm& t : st.blk->terms) {
      const double nf = std::sqrt(frob2(t.coeff));
      xi = std::max(xi, rs * (1.0 + std::abs(c_(t.var))) / (1.0 + nf));
      eta = std::max(eta, nf);
    }
    st.X = xi * Matrix::Identity(st.s, st.s);
    st.Z = eta * Matrix::Identity(st.s, st.s);
  }
  const auto nlp = static_cast<Eigen::Index>(lp_var_.size());
  lp_x_ = Vector::Constant(nlp, 10.0);
  lp_z_ = Vector::Constant(nlp, 10.0);
  for (Eigen::Index i = 0; i < nlp; ++i) {
    const double ck = std::abs(c_(lp_var_[static_cast<std::size_t>(i)]));
    lp_x_(i) = std::max(10.0, 1.0 + ck);
  }
  cone_dim_ += static_cast<int>(nlp);
}

bool Ipm::update_inverses() {
  for (BlockState& st : blocks_) {
    Eigen::LLT<Matrix> llt(st.Z);
    if (llt.info() != Eigen::Success) return false;
    st.Zinv = llt.solve(Matrix::Identity(st.s, st.s));
    st.Zinv = 0.5 * (st.Zinv + st.Zinv.transpose());
  }
  return true;
}

void Ipm::residuals() {
  rp_ = c_;
  double rd2 = 0.0, xz = 0.0;
  dobj_ = 0.0;
  for (BlockState& st : blocks_) {
    st.Rd = st.blk->evaluate(y_) - st.Z;
    rd2 += st.Rd.squaredNorm();
    xz += st.X.cwiseProduct(st.Z).sum();
    dobj_ -= inner(st.blk->constant, st.X);
    for (const VarTerm& t : st.blk->terms) rp_(t.var) -= inner(t.coeff, st.X);
  }
  lp_rd_.resize(static_cast<Eigen::Index>(lp_var_.size()));
  for (std::size_t i = 0; i < lp_var_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    lp_rd_(ii) = y_(lp_var_[i]) - lp_z_(ii);
    rd2 += lp_rd_(ii) * lp_rd_(ii);
    xz += lp_x_(ii) * lp_z_(ii);
    rp_(lp_var_[i]) -= lp_x_(ii);
  }
  pobj_ = c_.dot(y_);
  mu_ = cone_dim_ > 0 ? xz / cone_dim_ : 0.0;
  pinf_ = std::sqrt(rd2) / (1.0 + norm_f0_);
  dinf_ = rp_.norm() / (1.0 + norm_c_);
  // Complementarity rather than pobj - dobj: near an optimum whose dual
  // multiplier is large, a tiny dual residual still moves dobj visibly.
  gap_ = xz / (1.0 + std::abs(pobj_) + std::abs(dobj_));
  // Farkas ratio: an X with F_k.X ~ 0 and F0.X < 0 proves the LMIs infeasible.
  farkas_ = dobj_ > 0.0 ? (c_ - rp_).norm() / dobj_ : std::numeric_limits<double>::infinity();
}

void Ipm::assemble_schur() {
  M_.setZero(m_, m_);
  std::vector<int> pos;
  Matrix H, G, Xg;
  std::size_t counter = 0;
  for (BlockState& st : blocks_) {
    if ((++counter & 255u) == 0) check_time();
    const LmiBlock& blk = *st.blk;
    const int s = st.s;
    pos.assign(static_cast<std::size_t>(s), -1);
    for (std::size_t a = 0; a < st.order.size(); ++a) {
      const auto ta = static_cast<std::size_t>(st.order[a]);
      const VarTerm& fk = blk.terms[ta];
      const std::vector<int>& rows = st.rows[ta];
      const int r = static_cast<int>(rows.size());
      for (int q = 0; q < r; ++q) pos[static_cast<std::size_t>(rows[static_cast<std::size_t>(q)])] = q;
      // H = F_k(rows, :) Zinv
      H.setZero(r, s);
      for (const SymEntry& e : fk.coeff) {
        H.row(pos[static_cast<std::size_t>(e.row)]) += e.value * st.Zinv.row(e.col);
        if (e.row != e.col) H.row(pos[static_cast<std::size_t>(e.col)]) += e.value * st.Zinv.row(e.row);
      }
      const double dense_cost = static_cast<double>(s) * s * r;
      const double sparse_cost = 2.0 * static_cast<double>(st.tail_nnz[a]) * r;
      if (dense_cost <= sparse_cost) {
        // G = X(:, rows) H, i.e. G = X F_k Zinv.
        Xg.resize(s, r);
        for (int q = 0; q < r; ++q) Xg.col(q) = st.X.col(rows[static_cast<std::size_t>(q)]);
        G.noalias() = Xg * H;
        for (std::size_t b = a; b < st.order.size(); ++b) {
          const VarTerm& fj = blk.terms[static_cast<std::size_t>(st.order[b])];
          const double v = inner(fj.coeff, G);
          M_(fk.var, fj.var) += v;
          if (b != a) M_(fj.var, fk.var) += v;
        }
      } else {
        // Only the entries of G = X F_k Zinv that later terms touch.
        Xg.resize(r, s);
        for (int q = 0; q < r; ++q) Xg.row(q) = st.X.row(rows[static_cast<std::size_t>(q)]);
        auto g = [&](int t, int i) {
          return kernels::dot(std::span<const double>(Xg.col(t).data(), static_cast<std::size_t>(r)),
                              std::span<const double>(H.col(i).data(), static_cast<std::size_t>(r)));
        };
        for (std::size_t b = a; b < st.order.size(); ++b) {
          const VarTerm& fj = blk.terms[static_cast<std::size_t>(st.order[b])];
          double v = 0.0;
          for (const SymEntry& e : fj.coeff) {
            v += e.row == e.col ? e.value * g(e.row, e.row)
                                : e.value * (g(e.col, e.row) + g(e.row, e.col));
          }
          M_(fk.var, fj.var) += v;
          if (b != a) M_(fj.var, fk.var) += v;
        }
      }
      for (int q = 0; q < r; ++q) pos[static_cast<std::size_t>(rows[static_cast<std::size_t>(q)])] = -1;
    }
  }
  for (std::size_t i = 0; i < lp_var_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    M_(lp_var_[i], lp_var_[i]) += lp_x_(ii) / lp_z_(ii);
  }
}

// r_k = F_k.(sigma mu Zinv - X Rd Zinv - corr) - c_k, summed over blocks.
Vector Ipm::rhs(double sigma_mu, bool with_corr) const {
  Vector r = -c_;
  for (const BlockState& st : blocks_) {
    Matrix R = sigma_mu * st.Zinv;
    R.noalias() -= st.X * st.Rd * st.Zinv;
    if (with_corr) R -= st.corr;
    for (const VarTerm& t : st.blk->terms) r(t.var) += inner(t.coeff, R);
  }
  for (std::size_t i = 0; i < lp_var_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double v = (sigma_mu - lp_x_(ii) * lp_rd_(ii)) / lp_z_(ii);
    if (with_corr) v -= lp_corr_(ii);
    r(lp_var_[i]) += v;
  }
  return r;
}

// F_k.(X F(dy) Zinv) without forming M.
Vector Ipm::apply_schur(const Vector& dy) const {
  Vector out = Vector::Zero(m_);
  Matrix dZ, G;
  for (const BlockState& st : blocks_) {
    dZ.setZero(st.s, st.s);
    for (const VarTerm& t : st.blk->terms) {
      if (dy(t.var) != 0.0) scatter(dZ, t.coeff, dy(t.var));
    }
    G.noalias() = st.X * dZ * st.Zinv;
    for (const VarTerm& t : st.blk->terms) out(t.var) += inner(t.coeff, G);
  }
  for (std::size_t i = 0; i < lp_var_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out(lp_var_[i]) += lp_x_(ii) / lp_z_(ii) * dy(lp_var_[i]);
  }
  return out;
}

void Ipm::directions(const Vector& dy, double sigma_mu, bool with_corr) {
  for (BlockState& st : blocks_) {
    st.dZ = st.Rd;
    for (const VarTerm& t : st.blk->terms) {
      if (dy(t.var) != 0.0) scatter(st.dZ, t.coeff, dy(t.var));
    }
    Matrix dX = sigma_mu * st.Zinv - st.X;
    dX.noalias() -= st.X * st.dZ * st.Zinv;
    if (with_corr) dX -= st.corr;
    st.dX = 0.5 * (dX + dX.transpose());
  }
  const auto nlp = static_cast<Eigen::Index>(lp_var_.size());
  lp_dz_.resize(nlp);
  lp_dx_.resize(nlp);
  for (Eigen::Index i = 0; i < nlp; ++i) {
    lp_dz_(i) = lp_rd_(i) + dy(lp_var_[static_cast<std::size_t>(i)]);
    lp_dx_(i) = sigma_mu / lp_z_(i) - lp_x_(i) - lp_x_(i) * lp_dz_(i) / lp_z_(i);
    if (with_corr) lp_dx_(i) -= lp_corr_(i);
  }
}

std::pair<double, double> Ipm::step_bounds() const {
  double ap = std::numeric_limits<double>::infinity();
  double ad = ap;
  for (const BlockState& st : blocks_) {
    ap = std::min(ap, max_step(st.X, st.dX));
    ad = std::min(ad, max_step(st.Z, st.dZ));
  }
  for (Eigen::Index i = 0; i < lp_x_.size(); ++i) {
    if (lp_dx_(i) < 0.0) ap = std::min(ap, -lp_x_(i) / lp_dx_(i));
    if (lp_dz_(i) < 0.0) ad = std::min(ad, -lp_z_(i) / lp_dz_(i));
  }
  return {ap, ad};
}

// Shrinks a step until every updated block still has a Cholesky factor;
// the eigenvalue bound alone can be defeated by rounding.
double Ipm::backtrack(double step, bool primal) const {
  for (int tries = 0; tries < 30 && step > 0.0; ++tries) {
    bool ok = true;
    for (const BlockState& st : blocks_) {
      const Matrix trial = primal ? Matrix(st.X + step * st.dX) : Matrix(st.Z + step * st.dZ);
      if (Eigen::LLT<Matrix>(trial).info() != Eigen::Success) {
        ok = false;
        break;
      }
    }
    if (ok) {
      const Vector& v = primal ? lp_x_ : lp_z_;
      const Vector& dv = primal ? lp_dx_ : lp_dz_;
      ok = ((v + step * dv).array() > 0.0).all();
    }
    if (ok) return step;
    step *= 0.8;
  }
  return 0.0;
}

SolveResult Ipm::run() {
  start_ = Clock::now();
  SolveResult res;
  auto finish = [&](SolveStatus status, std::string msg) {
    if (trace_) {
      for (const BlockState& st : blocks_) {
        std::fprintf(stderr, "  block %-20s |X| %.3e |Z| %.3e\n", st.blk->label.c_str(), st.X.norm(),
                     st.Z.norm());
      }
      std::vector<int> idx(static_cast<std::size_t>(m_));
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(rp_(a)) > std::abs(rp_(b)); });
      for (std::size_t k = 0; k < std::min<std::size_t>(8, idx.size()); ++k) {
        std::fprintf(stderr, "  rd %-14s %.3e  y %.6e\n", p_.var_labels()[static_cast<std::size_t>(idx[k])].c_str(), rp_(idx[k]), y_(idx[k]));
      }
    }
    res.status = status;
    res.message = std::move(msg);
    res.objective_value = pobj_;
    res.dual_objective = dobj_;
    res.primal_infeasibility = pinf_;
    res.dual_infeasibility = dinf_;
    res.relative_gap = gap_;
    if (res.has_solution()) {
      res.y = y_;
    } else {
      res.y.resize(0);
    }
    res.wall_time = std::chrono::duration<double>(Clock::now() - start_).count();
    return res;
  };

  // Best iterate seen that is primal feasible and nearly optimal.
  Vector best_y;
  double best_pobj = 0.0, best_dobj = 0.0, best_pinf = 0.0, best_dinf = 0.0, best_gap = 0.0;
  auto fallback = [&](const std::string& why) {
    if (best_y.size() == 0) return finish(SolveStatus::Failed, why);
    y_ = best_y;
    pobj_ = best_pobj;
    dobj_ = best_dobj;
    pinf_ = best_pinf;
    dinf_ = best_dinf;
    gap_ = best_gap;
    return finish(SolveStatus::Inaccurate, why + "; returning the best near-optimal iterate");
  };

  setup();
  if (m_ == 0 && blocks_.empty()) {
    return finish(SolveStatus::Optimal, "empty program");
  }
  int stalls = 0;
  try {
    for (int it = 0;; ++it) {
      res.iterations = it;
      if (!update_inverses()) return fallback("slack lost definiteness");
      residuals();
      if (!std::isfinite(pobj_) || !std::isfinite(dobj_) || !std::isfinite(pinf_) ||
          !std::isfinite(dinf_)) {
        return fallback("numerical breakdown");
      }
      if (pinf_ <= 1e-6 && dinf_ <= 1e-4 && gap_ <= 1e-5 &&
          (best_y.size() == 0 || gap_ + dinf_ < best_gap + best_dinf)) {
        best_y = y_;
        best_pobj = pobj_;
        best_dobj = dobj_;
        best_pinf = pinf_;
        best_dinf = dinf_;
        best_gap = gap_;
      }
      if (pinf_ <= cfg_.feasibility_tol && dinf_ <= cfg_.dual_feasibility_tol && gap_ <= cfg_.gap_tol) {
        return finish(SolveStatus::Optimal, "converged");
      }
      if (farkas_ < 1e-8) {
        return finish(SolveStatus::Infeasible, "infeasibility certificate found");
      }
      if (pobj_ < -1e12 && pinf_ <= 1e-6) {
        return finish(SolveStatus::Failed, "objective unbounded below");
      }
      if (it >= cfg_.max_iterations || stalls >= 3) {
        return fallback(stalls >= 3 ? "step length collapsed" : "iteration limit reached");
      }
      if (trace_) {
        std::fprintf(stderr, "%3d pobj %+.10e dobj %+.10e pinf %.2e dinf %.2e gap %.2e mu %.2e\n", it,
                     pobj_, dobj_, pinf_, dinf_, gap_, mu_);
      }
      check_time();

      assemble_schur();
      Eigen::LLT<Matrix> chol(M_);
      if (chol.info() != Eigen::Success) {
        const double reg = 1e-13 * std::max(1.0, M_.diagonal().cwiseAbs().maxCoeff());
        chol.compute(M_ + reg * Matrix::Identity(m_, m_));
        if (chol.info() != Eigen::Success) {
          return fallback("Schur complement lost definiteness");
        }
      }
      // Refinement measures the residual with the operator that later turns
      // dy into dX, not with the rounded M.
      auto solve_schur = [&](const Vector& r) {
        Vector x = chol.solve(r);
        for (int k = 0; k < 2; ++k) x += chol.solve(r - apply_schur(x));
        return x;
      };

      // Predictor.
      Vector dy = solve_schur(rhs(0.0, false));
      directions(dy, 0.0, false);
      auto [ap_a, ad_a] = step_bounds();
      ap_a = std::min(1.0, ap_a);
      ad_a = std::min(1.0, ad_a);
      double xz_aff = 0.0;
      for (BlockState& st : blocks_) {
        xz_aff += (st.X + ap_a * st.dX).cwiseProduct(st.Z + ad_a * st.dZ).sum();
        st.corr.noalias() = st.dX * st.dZ * st.Zinv;
      }
      lp_corr_.resize(lp_x_.size());
      for (Eigen::Index i = 0; i < lp_x_.size(); ++i) {
        xz_aff += (lp_x_(i) + ap_a * lp_dx_(i)) * (lp_z_(i) + ad_a * lp_dz_(i));
        lp_corr_(i) = lp_dx_(i) * lp_dz_(i) / lp_z_(i);
      }
      const double mu_aff = xz_aff / cone_dim_;
      // Exponent as in SDPT3: short predictor steps mean poor centrality, so
      // center harder.
      const double reach = std::max(ap_a, ad_a);
      const double expon = mu_ > 1e-6 ? std::max(1.0, 3.0 * reach * reach)
                                      : std::max(1.0, std::min(3.0, 3.0 * reach * reach));
      // mu_aff can round slightly below zero when the predictor reaches the boundary
      const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu_, expon), 0.0, 1.0);

      // Corrector.
      dy = solve_schur(rhs(sigma * mu_, true));
      directions(dy, sigma * mu_, true);
      auto [ap, ad] = step_bounds();
      ap = std::min(1.0, 0.95 * ap);
      ad = std::min(1.0, 0.95 * ad);
      ap = backtrack(ap, true);
      ad = backtrack(ad, false);
      stalls = (ap < 1e-8 && ad < 1e-8) ? stalls + 1 : 0;
      if (trace_) std::fprintf(stderr, "    sigma %.2e ap %.3e ad %.3e\n", sigma, ap, ad);

      for (BlockState& st : blocks_) {
        st.X += ap * st.dX;
        st.Z += ad * st.dZ;
      }
      lp_x_ += ap * lp_dx_;
      lp_z_ += ad * lp_dz_;
      y_ += ad * dy;
    }
  } catch (const TimeLimit&) {
    // A partial answer is no use to a time-budgeted caller.
    return finish(SolveStatus::Failed, "time limit reached");
  }
}

// Presolve. A variable with zero cost whose only occurrence is one positive
// diagonal entry can always be raised, and raising it only ever helps, so the
// optimum sits at +inf. Its row drops out of the block in the limit. Solving
// the limit problem and then choosing a finite value afterwards avoids
// chasing that variable to infinity inside the interior-point loop.
struct Elimination {
  int var = 0;
  int block = 0;
  int row = 0;  // in the original block
  double coef = 0.0;
};

struct Reduction {
  ConicProgram reduced;
  std::vector<int> kept;  // reduced index -> original index
  std::vector<Elimination> order;
};

Reduction reduce(const ConicProgram& prog) {
  const int nv = prog.num_vars();
  const auto& blocks = prog.blocks();
  std::vector<std::vector<char>> alive(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) alive[b].assign(blocks[b].size, 1);
  std::vector<char> removed(static_cast<std::size_t>(nv), 0);
  std::vector<char> nonneg(static_cast<std::size_t>(nv), 0);
  for (int k : prog.nonneg_vars()) nonneg[static_cast<std::size_t>(k)] = 1;

  Reduction red;
  for (bool changed = true; changed;) {
    changed = false;
    // Live occurrences per variable: count, and the last one seen.
    std::vector<int> count(static_cast<std::size_t>(nv), 0);
    std::vector<Elimination> last(static_cast<std::size_t>(nv));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (const VarTerm& t : blocks[b].terms) {
        for (const SymEntry& e : t.coeff) {
          if (!alive[b][static_cast<std::size_t>(e.row)] || !alive[b][static_cast<std::size_t>(e.col)]) continue;
          const auto k = static_cast<std::size_t>(t.var);
          ++count[k];
          last[k] = {t.var, static_cast<int>(b), e.row == e.col ? e.row : -1, e.value};
        }
      }
    }
    for (int k = 0; k < nv; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      const Elimination& el = last[uk];
      if (removed[uk] || nonneg[uk] || prog.objective()[uk] != 0.0) continue;
      if (count[uk] != 1 || el.row < 0 || !(el.coef > 0.0)) continue;
      auto& rows = alive[static_cast<std::size_t>(el.block)];
      if (!rows[static_cast<std::size_t>(el.row)]) continue;  // row already taken this round
      rows[static_cast<std::size_t>(el.row)] = 0;
      removed[uk] = 1;
      red.order.push_back(el);
      changed = true;
    }
  }

  std::vector<int> new_index(static_cast<std::size_t>(nv), -1);
  for (int k = 0; k < nv; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    if (removed[uk]) continue;
    new_index[uk] = red.reduced.add_variable(prog.var_labels()[uk], prog.objective()[uk],
                                             nonneg[uk] != 0);
    red.kept.push_back(k);
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const LmiBlock& src = blocks[b];
    std::vector<int> row_map(static_cast<std::size_t>(src.size), -1);
    int size = 0;
    for (int r = 0; r < src.size; ++r) {
      if (alive[b][static_cast<std::size_t>(r)]) row_map[static_cast<std::size_t>(r)] = size++;
    }
    if (size == 0) continue;
    LmiBlock dst;
    dst.label = src.label;
    dst.role = src.role;
    dst.size = size;
    dst.strict_margin = src.strict_margin;
    auto remap = [&](const std::vector<SymEntry>& in) {
      std::vector<SymEntry> out;
      for (const SymEntry& e : in) {
        const int r = row_map[static_cast<std::size_t>(e.row)];
        const int c = row_map[static_cast<std::size_t>(e.col)];
        if (r >= 0 && c >= 0) out.push_back({r, c, e.value});
      }
      return out;
    };
    dst.constant = remap(src.constant);
    for (const VarTerm& t : src.terms) {
      const int k = new_index[static_cast<std::size_t>(t.var)];
      if (k < 0) continue;
      VarTerm nt{k, remap(t.coeff)};
      if (!nt.coeff.empty()) dst.terms.push_back(std::move(nt));
    }
    red.reduced.add_block(std::move(dst));
  }
  return red;
}

// Gives each eliminated variable, last eliminated first, the smallest value
// that keeps its block PSD after adding alpha I, where alpha grows from a
// quarter to half of the slack the verifier allows. Returns false when the
// reduced solution is too far outside the cone for that to work.
bool recover(const ConicProgram& prog, const Reduction& red, Vector& y, double tol) {
  std::vector<std::vector<char>> alive(prog.blocks().size());
  for (std::size_t b = 0; b < alive.size(); ++b) alive[b].assign(prog.blocks()[b].size, 1);
  for (const Elimination& el : red.order) alive[static_cast<std::size_t>(el.block)][static_cast<std::size_t>(el.row)] = 0;
  const double steps = static_cast<double>(red.order.size());
  double done = 0.0;
  for (auto it = red.order.rbegin(); it != red.order.rend(); ++it, done += 1.0) {
    const LmiBlock& blk = prog.blocks()[static_cast<std::size_t>(it->block)];
    const double budget = blk.strict_margin > 0.0 ? std::min(tol, 0.5 * blk.strict_margin) : tol;
    const double alpha = budget * (0.25 + 0.25 * done / steps);
    y(it->var) = 0.0;
    const Matrix full = blk.evaluate(y);
    auto& rows = alive[static_cast<std::size_t>(it->block)];
    std::vector<Eigen::Index> idx;
    for (int r = 0; r < blk.size; ++r) {
      if (rows[static_cast<std::size_t>(r)]) idx.push_back(r);
    }
    const auto nr = static_cast<Eigen::Index>(idx.size());
    Matrix m(nr, nr);
    Vector bcol(nr);
    for (Eigen::Index i = 0; i < nr; ++i) {
      bcol(i) = full(idx[static_cast<std::size_t>(i)], it->row);
      for (Eigen::Index j = 0; j < nr; ++j) m(i, j) = full(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    double need = 0.0;
    if (nr > 0) {
      m.diagonal().array() += alpha;
      Eigen::LLT<Matrix> llt(m);
      if (llt.info() != Eigen::Success) return false;
      need = bcol.dot(llt.solve(bcol));
    }
    // (r, r) entry plus alpha must cover b' (M + alpha I)^-1 b.
    const double target = need * (1.0 + 1e-6) - alpha - full(it->row, it->row);
    y(it->var) = std::max(0.0, target) / it->coef;
    rows[static_cast<std::size_t>(it->row)] = 1;
  }
  return true;
}

}  // namespace

SolveResult solve(const ConicProgram& program, const SolverConfig& config) {
  if (!config.presolve) {
    Ipm ipm(program, config);
    return ipm.run();
  }
  const Reduction red = reduce(program);
  if (red.order.empty()) {
    Ipm ipm(program, config);
    return ipm.run();
  }
  Ipm ipm(red.reduced, config);
  SolveResult res = ipm.run();
  res.eliminated = static_cast<int>(red.order.size());
  if (!res.has_solution()) return res;
  Vector y = Vector::Zero(program.num_vars());
  for (std::size_t i = 0; i < red.kept.size(); ++i) y(red.kept[i]) = res.y(static_cast<Eigen::Index>(i));
  if (!recover(program, red, y, config.verification_tol)) {
    res.status = SolveStatus::Inaccurate;
    res.message += "; could not restore eliminated variables";
  }
  res.y = std::move(y);
  return res;
}

}  // namespace nncert::sdp
