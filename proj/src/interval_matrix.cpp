#include "nncert/interval_matrix.hpp"

#include <string>

#include "nncert/error.hpp"

namespace nncert {

IntervalMatrix::IntervalMatrix(Matrix lower, Matrix upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.rows() != upper_.rows() || lower_.cols() != upper_.cols()) {
    throw InvalidInterval("interval bounds have different shapes: " +
                          std::to_string(lower_.rows()) + "x" + std::to_string(lower_.cols()) +
                          " vs " + std::to_string(upper_.rows()) + "x" +
                          std::to_string(upper_.cols()));
  }
  for (Eigen::Index j = 0; j < lower_.cols(); ++j) {
    for (Eigen::Index i = 0; i < lower_.rows(); ++i) {
      if (!(lower_(i, j) <= upper_(i, j))) {
        throw InvalidInterval("interval entry (" + std::to_string(i) + "," + std::to_string(j) +
                              ") has lower > upper or is not a number");
      }
    }
  }
}

IntervalMatrix IntervalMatrix::point(const Matrix& m) { return IntervalMatrix(m, m); }

IntervalMatrix IntervalMatrix::from_center_radius(const CenterRadius& cr) {
  if ((cr.radius.array() < 0.0).any()) throw InvalidInterval("negative radius entry");
  return IntervalMatrix(cr.center - cr.radius, cr.center + cr.radius);
}

std::size_t IntervalMatrix::free_entries() const {
  return static_cast<std::size_t>((lower_.array() < upper_.array()).count());
}

CenterRadius center_radius(const IntervalMatrix& m) {
  return {0.5 * (m.upper() + m.lower()), 0.5 * (m.upper() - m.lower())};
}

bool contains(const IntervalMatrix& m, const Matrix& candidate) {
  if (candidate.rows() != m.rows() || candidate.cols() != m.cols()) {
    throw DimensionError("contains: candidate shape does not match interval shape");
  }
  return (candidate.array() >= m.lower().array()).all() &&
         (candidate.array() <= m.upper().array()).all();
}

std::vector<Matrix> enumerate_vertices(const IntervalMatrix& m, std::size_t cap_log2) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> free;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m.lower()(i, j) < m.upper()(i, j)) free.emplace_back(i, j);
    }
  }
  const std::size_t q = free.size();
  if (q > cap_log2 || q >= 63) {
    throw CapacityError("vertex enumeration needs 2^" + std::to_string(q) +
                            " vertices, above the configured cap 2^" + std::to_string(cap_log2),
                        q);
  }
  const Matrix base = center_radius(m).center;
  const std::size_t count = std::size_t{1} << q;
  std::vector<Matrix> out;
  out.reserve(count);
  for (std::size_t v = 0; v < count; ++v) {
    Matrix vert = base;
    for (std::size_t k = 0; k < q; ++k) {
      const bool upper = (v >> (q - 1 - k)) & 1U;
      const auto [i, j] = free[k];
      vert(i, j) = upper ? m.upper()(i, j) : m.lower()(i, j);
    }
    out.push_back(std::move(vert));
  }
  return out;
}

IntervalMatrix mul_interval_const(const IntervalMatrix& m, const Matrix& n) {
  if (m.cols() != n.rows()) {
    throw DimensionError("mul_interval_const: inner dimensions differ (" +
                         std::to_string(m.cols()) + " vs " + std::to_string(n.rows()) + ")");
  }
  const CenterRadius cr = center_radius(m);
  const Matrix mid = cr.center * n;
  const Matrix spread = cr.radius * n.cwiseAbs();
  return IntervalMatrix(mid - spread, mid + spread);
}

Matrix sample(const IntervalMatrix& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double lo = m.lower()(i, j), hi = m.upper()(i, j);
      if (lo == hi) {
        out(i, j) = lo;
      } else {
        const double t = unit(rng);
        out(i, j) = std::min(hi, std::max(lo, lo + t * (hi - lo)));
      }
    }
  }
  return out;
}

Matrix sample_vertex(const IntervalMatrix& m, std::mt19937_64& rng) {
  Matrix out = m.lower();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m.lower()(i, j) != m.upper()(i, j) && (rng() & 1u)) out(i, j) = m.upper()(i, j);
    }
  }
  return out;
}

}  // namespace nncert
