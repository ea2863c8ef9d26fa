#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "nncert/types.hpp"

namespace nncert {

/// Default upper bound on the number of free (nonzero-radius) entries that
/// vertex enumeration accepts, i.e. at most 2^24 vertices.
inline constexpr std::size_t kDefaultVertexCapLog2 = 24;

struct CenterRadius {
  Matrix center;
  Matrix radius;  // entrywise >= 0
};

/// Closed entrywise interval [lower, upper] of real matrices.
class IntervalMatrix {
 public:
  IntervalMatrix() = default;
  /// Throws InvalidInterval on shape mismatch or lower(i,j) > upper(i,j).
  IntervalMatrix(Matrix lower, Matrix upper);

  /// Degenerate interval {m}.
  static IntervalMatrix point(const Matrix& m);
  static IntervalMatrix from_center_radius(const CenterRadius& cr);

  const Matrix& lower() const noexcept { return lower_; }
  const Matrix& upper() const noexcept { return upper_; }
  Eigen::Index rows() const noexcept { return lower_.rows(); }
  Eigen::Index cols() const noexcept { return lower_.cols(); }

  /// Number of entries with lower < upper.
  std::size_t free_entries() const;
  bool is_degenerate() const { return free_entries() == 0; }

 private:
  Matrix lower_;
  Matrix upper_;
};

CenterRadius center_radius(const IntervalMatrix& m);

/// True iff lower <= candidate <= upper entrywise. Throws DimensionError on shape mismatch.
bool contains(const IntervalMatrix& m, const Matrix& candidate);

/// All 2^q vertices, q = free_entries(m). Free entries are visited in row-major
/// order; the first free entry is the most significant choice and the lower
/// endpoint precedes the upper one. Throws CapacityError when q > cap_log2.
std::vector<Matrix> enumerate_vertices(const IntervalMatrix& m,
                                       std::size_t cap_log2 = kDefaultVertexCapLog2);

/// Exact interval image {A n : A in m} = [C n - R |n|, C n + R |n|].
IntervalMatrix mul_interval_const(const IntervalMatrix& m, const Matrix& n);

/// Uniform draw from the box; degenerate entries return the center exactly.
Matrix sample(const IntervalMatrix& m, std::mt19937_64& rng);

/// Vertex with each free entry at an endpoint chosen by a fair coin.
Matrix sample_vertex(const IntervalMatrix& m, std::mt19937_64& rng);

}  // namespace nncert
