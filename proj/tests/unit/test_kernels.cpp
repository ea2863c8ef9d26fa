#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nncert/kernels.hpp"

using namespace nncert::kernels;

namespace {

std::vector<double> draw(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Restores the dispatch choice made at startup.
struct IsaGuard {
  Isa saved = active_isa();
  ~IsaGuard() { set_active_isa(saved); }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("dispatch selects a supported instruction set") {
  IsaGuard g;
  CHECK(isa_supported(Isa::Scalar));
  CHECK(isa_supported(detected_isa()));
  CHECK(set_active_isa(Isa::Scalar) == Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  if (!isa_supported(Isa::Neon)) CHECK(set_active_isa(Isa::Neon) == Isa::Scalar);
  CHECK(isa_name(Isa::Avx2) == "avx2");
}

TEST_CASE("scalar reference by hand") {
  double a[] = {1, 2, 3}, b[] = {4, -5, 6};
  CHECK(scalar::dot(a, b, 3) == 12.0);
  double y[] = {1, 1, 1};
  scalar::axpy(2.0, a, y, 3);
  CHECK(y[2] == 7.0);
  double p[] = {2, 1, 1, 3};  // [[2,1],[1,3]]
  double xs[] = {1, 0, 1, 1};
  double out[2];
  scalar::quad_forms(p, 2, xs, 2, out);
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 7.0);
}

TEST_CASE("property: AVX2 kernels match the scalar reference") {
  if (!avx2::compiled() || !isa_supported(Isa::Avx2)) {
    MESSAGE("AVX2 unavailable; equivalence not exercised");
    return;
  }
  std::mt19937_64 rng(83);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 33u, 100u, 1001u}) {
    auto a = draw(rng, n), b = draw(rng, n);
    double ref = scalar::dot(a.data(), b.data(), n);
    double got = avx2::dot(a.data(), b.data(), n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
    CHECK(std::abs(got - ref) <= 1e-14 * (1.0 + scale));

    auto y1 = draw(rng, n);
    auto y2 = y1;
    scalar::axpy(0.37, a.data(), y1.data(), n);
    avx2::axpy(0.37, a.data(), y2.data(), n);
    // fused multiply-add rounds once instead of twice
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::abs(y1[i] - y2[i]) <= 2.3e-16 * (std::abs(y1[i]) + std::abs(0.37 * a[i])));
  }
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 8u, 9u, 36u}) {
    auto m = draw(rng, n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) m[i * n + j] = m[j * n + i];
    const std::size_t count = 37;
    auto xs = draw(rng, n * count);
    std::vector<double> r1(count), r2(count);
    scalar::quad_forms(m.data(), n, xs.data(), count, r1.data());
    avx2::quad_forms(m.data(), n, xs.data(), count, r2.data());
    for (std::size_t k = 0; k < count; ++k) {
      double scale = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          scale += std::abs(xs[k * n + i] * m[i * n + j] * xs[k * n + j]);
      CHECK(std::abs(r1[k] - r2[k]) <= 1e-13 * (1.0 + scale));
    }
  }
}

TEST_CASE("dispatching entry points follow the active instruction set") {
  IsaGuard g;
  std::mt19937_64 rng(89);
  auto a = draw(rng, 257), b = draw(rng, 257);
  set_active_isa(Isa::Scalar);
  double s = dot(a, b);
  CHECK(s == scalar::dot(a.data(), b.data(), a.size()));
  if (set_active_isa(Isa::Avx2) == Isa::Avx2) {
    CHECK(dot(a, b) == avx2::dot(a.data(), b.data(), a.size()));
    CHECK(dot(a, b) == doctest::Approx(s).epsilon(1e-12));
  }
  std::vector<double> y(257, 1.0);
  axpy(-1.0, a, y);
  CHECK(y[5] == 1.0 - a[5]);
}

}
