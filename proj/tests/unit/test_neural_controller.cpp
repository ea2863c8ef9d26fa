#include <cmath>
#include <random>

#include "doctest.h"
#include "nncert/error.hpp"
#include "nncert/neural_controller.hpp"

using namespace nncert;

namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }
Vector v1(double v) { return Vector::Constant(1, v); }

FeedforwardNetwork scalar_net(double w1, double b1, double w2, double b2,
                              Activation act = Activation::tanh()) {
  return FeedforwardNetwork({{m1(w1), v1(b1)}, {m1(w2), v1(b2)}}, act);
}

FeedforwardNetwork random_net(std::mt19937_64& rng, std::vector<int> dims, Activation act) {
  std::normal_distribution<double> n(0.0, 0.7);
  std::vector<Layer> layers;
  for (std::size_t i = 1; i < dims.size(); ++i) {
    Layer l{Matrix::NullaryExpr(dims[i], dims[i - 1], [&] { return n(rng); }),
            Vector::NullaryExpr(dims[i], [&] { return n(rng); })};
    layers.push_back(std::move(l));
  }
  return FeedforwardNetwork(std::move(layers), act);
}

// every chord slope from (v*, phi(v*)) over a dense grid
std::pair<double, double> chord_range(const Activation& act, double lo, double hi, double vs) {
  double mn = 1e300, mx = -1e300;
  for (int k = 0; k <= 20000; ++k) {
    double v = lo + (hi - lo) * k / 20000.0;
    if (std::abs(v - vs) < 1e-9) continue;
    double s = (act(v) - act(vs)) / (v - vs);
    mn = std::min(mn, s);
    mx = std::max(mx, s);
  }
  return {mn, mx};
}

}  // namespace

TEST_SUITE("neural_controller") {

TEST_CASE("forward pass by hand") {
  CHECK(scalar_net(1, 0, 2, 0).forward(v1(0))(0) == 0.0);
  auto net = scalar_net(1, 0.5, 2, -2 * std::tanh(0.5));
  double u = net.forward(v1(0.1))(0);
  CHECK(u == doctest::Approx(2 * std::tanh(0.6) - 2 * std::tanh(0.5)).epsilon(1e-14));
  CHECK(u == doctest::Approx(0.14986).epsilon(1e-4));
  auto relu = scalar_net(-1, 0, 1, 0, Activation::relu());
  CHECK(relu.forward(v1(1))(0) == 0.0);
}

TEST_CASE("layer dimensions must chain") {
  CHECK_THROWS_AS(FeedforwardNetwork({{Matrix::Ones(2, 1), Vector::Zero(2)},
                                      {Matrix::Ones(1, 3), Vector::Zero(1)}},
                                     Activation::tanh()),
                  DimensionError);
  CHECK_THROWS_AS(FeedforwardNetwork({{Matrix::Ones(1, 1), Vector::Zero(1)}}, Activation::tanh()),
                  DimensionError);
  CHECK_THROWS(scalar_net(1, 0, 1, 0).forward(Vector::Zero(2)));
}

TEST_CASE("isolation blocks for one and two hidden layers") {
  auto net = scalar_net(3, 0.1, 2, 0.2);
  auto iso = assemble_isolation(net);
  CHECK(iso.N_vx == m1(3));
  CHECK(iso.N_vw == m1(0));
  CHECK(iso.N_uw == m1(2));
  CHECK(iso.N_ux == m1(0));

  std::mt19937_64 rng(2);
  auto net2 = random_net(rng, {2, 3, 4, 1}, Activation::tanh());
  auto iso2 = assemble_isolation(net2);
  REQUIRE(iso2.N_vw.rows() == 7);
  CHECK(iso2.N_vw.block(3, 0, 4, 3) == net2.layers()[1].weight);
  CHECK(iso2.N_vw.block(0, 0, 3, 7).isZero());
  CHECK(iso2.N_vw.block(3, 3, 4, 4).isZero());
  CHECK(iso2.N_uw.leftCols(3).isZero());
  CHECK(iso2.N_uw.rightCols(4) == net2.layers()[2].weight);
  CHECK(iso2.N_vx.topRows(3) == net2.layers()[0].weight);
  CHECK(iso2.R_V.rows() == 3);
  CHECK(iso2.R_V.cols() == 9);
  CHECK(iso2.R_phi.rows() == 14);
}

TEST_CASE("property: N evaluation matches layer-by-layer evaluation") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto act : {Activation::tanh(), Activation::relu(), Activation::sigmoid(),
                   Activation::leaky_relu(0.1)}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto net = random_net(rng, {3, 4, 5, 2}, act);
      auto iso = assemble_isolation(net);
      Vector x = Vector::NullaryExpr(3, [&] { return n(rng); });
      Vector v = net.pre_activations(x);
      Vector w = v.unaryExpr([&](double s) { return act(s); });
      Vector vv = iso.N_vx * x + iso.N_vw * w + iso.N_vb;
      Vector uu = iso.N_ux * x + iso.N_uw * w + iso.N_ub;
      CHECK((vv - v).norm() < 1e-12);
      CHECK((uu - net.forward(x)).norm() < 1e-12);
      auto eq = propagate_equilibrium(net, x);
      CHECK(equilibrium_residual(net, iso, eq) < 1e-12);
    }
  }
}

TEST_CASE("equilibrium propagation") {
  auto zero = scalar_net(1, 0, 1, 0);
  auto e0 = propagate_equilibrium(zero, v1(0));
  CHECK(e0.v_star(0) == 0.0);
  CHECK(e0.u_star(0) == 0.0);
  auto net = scalar_net(1, 0.5, 2, -2 * std::tanh(0.5));
  auto e = propagate_equilibrium(net, v1(0));
  CHECK(e.v_star(0) == 0.5);
  CHECK(e.w_star(0) == doctest::Approx(std::tanh(0.5)));
  CHECK(std::abs(e.u_star(0)) < 1e-15);
  auto relu = scalar_net(1, -1, 1, 0, Activation::relu());
  CHECK(propagate_equilibrium(relu, v1(0)).w_star(0) == 0.0);
}

TEST_CASE("zero equilibrium enforcement") {
  auto ok = scalar_net(1, 0, 2, 0);
  auto r0 = enforce_zero_equilibrium(ok, 0.01);
  CHECK(r0.applied_shift(0) == 0.0);
  auto off = scalar_net(1, 0, 2, 0.001);
  auto r = enforce_zero_equilibrium(off, 0.01);
  CHECK(r.applied_shift(0) == doctest::Approx(-0.001));
  CHECK(r.net.forward(v1(0))(0) == 0.0);
  CHECK_THROWS_AS(enforce_zero_equilibrium(scalar_net(1, 0, 2, 0.5), 0.01), PreconditionError);
}

TEST_CASE("bound propagation by hand") {
  FeedforwardNetwork net({{m1(1), v1(0)}, {m1(2), v1(0)}, {m1(1), v1(0)}}, Activation::tanh());
  auto eq = propagate_equilibrium(net, v1(0));
  auto b = propagate_bounds(net, v1(-0.1), v1(0.1), eq);
  REQUIRE(b.v_lower.size() == 2);
  CHECK(b.v_lower(1) == doctest::Approx(-2 * std::tanh(0.1)));
  CHECK(b.v_upper(1) == doctest::Approx(0.19934).epsilon(1e-4));

  FeedforwardNetwork mixed({{Matrix::Ones(2, 1), Vector::Zero(2)},
                            {(Matrix(1, 2) << 1, -1).finished(), v1(0)},
                            {m1(1), v1(0)}},
                           Activation::tanh());
  auto em = propagate_equilibrium(mixed, v1(0));
  auto bm = propagate_bounds(mixed, Vector::Constant(2, -0.3), Vector::Constant(2, 0.3), em);
  CHECK(bm.v_upper(2) == doctest::Approx(2 * std::tanh(0.3)));
  CHECK(bm.v_lower(2) == doctest::Approx(-2 * std::tanh(0.3)));

  auto bz = propagate_bounds(net, v1(0), v1(0), eq);
  CHECK(bz.v_lower(1) == 0.0);
  CHECK(bz.v_upper(1) == 0.0);
  CHECK_THROWS_AS(propagate_bounds(net, v1(0.1), v1(0.2), eq), PreconditionError);
}

TEST_CASE("property: propagated bounds enclose sampled pre-activations") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    auto net = random_net(rng, {2, 4, 3, 1}, Activation::tanh());
    Vector xs = Vector::Zero(2);
    auto eq = propagate_equilibrium(net, xs);
    Vector lo = eq.v_star.head(4).array() - 0.3, hi = eq.v_star.head(4).array() + 0.3;
    auto b = propagate_bounds(net, lo, hi, eq);
    CHECK((b.v_lower.array() <= eq.v_star.array()).all());
    CHECK((b.v_upper.array() >= eq.v_star.array()).all());
    for (int k = 0; k < 200; ++k) {
      Vector v1s(4);
      for (int i = 0; i < 4; ++i) v1s(i) = lo(i) + (hi(i) - lo(i)) * u(rng);
      Vector w1 = v1s.unaryExpr([](double s) { return std::tanh(s); });
      Vector v2 = net.layers()[1].weight * w1 + net.layers()[1].bias;
      CHECK((v2.array() >= b.v_lower.tail(3).array() - 1e-12).all());
      CHECK((v2.array() <= b.v_upper.tail(3).array() + 1e-12).all());
    }
  }
}

TEST_CASE("sector bounds by hand") {
  auto s = sector_bounds(Activation::tanh(), -0.1, 0.1, 0.0);
  CHECK(s.alpha == doctest::Approx(std::tanh(0.1) / 0.1).epsilon(1e-12));
  CHECK(s.alpha == doctest::Approx(0.996680).epsilon(1e-6));
  CHECK(s.beta == doctest::Approx(1.0));
  auto r = sector_bounds(Activation::relu(), -0.4, 0.7, 0.0);
  CHECK(r.alpha == 0.0);
  CHECK(r.beta == 1.0);
  auto o = sector_bounds(Activation::tanh(), 0.3, 0.7, 0.5);
  CHECK(o.alpha == doctest::Approx(1 - std::pow(std::tanh(0.7), 2)));
  // 0.6352 is a rounded hand value; 1 - tanh(0.7)^2 = 0.63474
  CHECK(o.alpha == doctest::Approx(0.6352).epsilon(1e-3));
  CHECK(o.beta == doctest::Approx(0.9151).epsilon(1e-4));
  auto l = sector_bounds(Activation::leaky_relu(0.1), -1, 1, 0);
  CHECK(l.alpha == doctest::Approx(0.1));
  CHECK_THROWS(sector_bounds(Activation::tanh(), 0.2, 0.2, 0.2));
}

TEST_CASE("property: every chord lies inside the sector") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (auto act : {Activation::tanh(), Activation::sigmoid(), Activation::relu(),
                   Activation::leaky_relu(0.2)}) {
    for (int trial = 0; trial < 40; ++trial) {
      double a = u(rng), b = u(rng);
      if (std::abs(a - b) < 1e-3) continue;
      double lo = std::min(a, b), hi = std::max(a, b);
      double vs = lo + (hi - lo) * (u(rng) + 3.0) / 6.0;
      auto s = sector_bounds(act, lo, hi, vs);
      auto [mn, mx] = chord_range(act, lo, hi, vs);
      CHECK(s.alpha <= s.beta);
      CHECK(s.alpha <= mn + 1e-9);
      CHECK(s.beta >= mx - 1e-9);
    }
  }
}

}
