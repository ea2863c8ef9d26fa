#include <cmath>
#include <numbers>

#include "doctest.h"
#include "json.hpp"
#include "nncert/examples.hpp"
#include "nncert/model_io.hpp"

using namespace nncert;

TEST_SUITE("model_io") {

TEST_CASE("model files round-trip byte for byte") {
  std::vector<UncertainNNCS> models{examples::scalar(examples::ScalarVariant::Robust),
                                    examples::pendulum({.delta = 0.01}),
                                    examples::msd({.carts = 2})};
  for (const auto& m : models) {
    std::string text = io::format_model(m);
    auto back = io::parse_model(text);
    CHECK(io::format_model(back) == text);
    CHECK(back.A.lower() == m.A.lower());
    CHECK(back.B.upper() == m.B.upper());
    CHECK(back.net.layers()[0].weight == m.net.layers()[0].weight);
    CHECK(back.saturation.has_value() == m.saturation.has_value());
  }
}

TEST_CASE("schema errors name the field") {
  std::string text = io::format_model(examples::scalar(examples::ScalarVariant::Nominal));
  auto broken = text;
  broken.replace(broken.find("\"v1_upper\""), 10, "\"v1_upperX\"");
  try {
    io::parse_model(broken);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("v1_upper") != std::string::npos);
  }
  CHECK_THROWS_AS(io::parse_model("{\"state_dim\": 1,"), SchemaError);

  // a row of the wrong width inside the network
  auto pend = io::format_model(examples::msd({.carts = 1}));
  auto j = nlohmann::json::parse(pend);
  j["network"]["layers"][0]["W"][1].push_back(0.0);
  try {
    io::parse_model(j.dump());
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("network.layers[0].W[1]") != std::string::npos);
  }
  // inverted interval
  auto k = nlohmann::json::parse(pend);
  k["A_lower"][0][0] = 5.0;
  CHECK_THROWS_AS(io::parse_model(k.dump()), SchemaError);
}

TEST_CASE("certificates round-trip") {
  auto out = certify(examples::msd({.carts = 1}), CertificateMethod::LmiIII);
  REQUIRE(out.certificate.has_value());
  const auto& c = *out.certificate;
  auto back = io::parse_certificate(io::format_certificate(c));
  CHECK(back.method == c.method);
  CHECK(back.P == c.P);
  CHECK(back.lambda == c.lambda);
  CHECK(back.gamma == c.gamma);
  CHECK(back.Y == c.Y);
  CHECK(back.ellipsoid.center == c.ellipsoid.center);
}

TEST_CASE("report rows") {
  auto ok = certify(examples::scalar(examples::ScalarVariant::Robust), CertificateMethod::LmiII);
  auto row = io::make_row(ok);
  CHECK(row.status == "optimal");
  REQUIRE(row.volume.has_value());
  CHECK(*row.volume == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(row.num_vars == 6);
  CHECK(row.lmi_size == 9);
  CHECK(io::csv_header() ==
        "method,status,wall_time_s,trace_P,volume,min_verification_residual,num_vars,lmi_size");
  CHECK(io::csv_header({"model"}).rfind("model,method,", 0) == 0);
  auto line = io::csv_line(row, {"scalar"});
  CHECK(line.rfind("scalar,lmi2,optimal,", 0) == 0);

  auto bad = certify(examples::scalar(examples::ScalarVariant::Unstable), CertificateMethod::LmiII);
  auto brow = io::make_row(bad);
  CHECK(brow.status == "infeasible");
  CHECK(!brow.volume.has_value());
  CHECK(io::csv_line(brow).find("infeasible,") != std::string::npos);
}

TEST_CASE("ellipse polyline lies on the boundary") {
  Ellipsoid e{(Matrix(2, 2) << 4, 1, 1, 2).finished(), (Vector(2) << 0.5, -1).finished()};
  auto pts = io::ellipse_polyline(e, 256);
  REQUIRE(pts.size() == 256);
  for (auto [x, y] : pts) {
    Vector d(2);
    d << x - 0.5, y + 1;
    CHECK(d.dot(e.P * d) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("numbers use 17 significant digits") {
  CHECK(io::format_number(0.1) == "0.10000000000000001");
  CHECK(std::stod(io::format_number(std::numbers::pi)) == std::numbers::pi);
}

}
