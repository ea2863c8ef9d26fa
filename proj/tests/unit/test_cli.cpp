#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "nncert/commands.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nncert");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = nncert::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("nncert_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("example, certify, validate") {
  TempDir dir;
  auto model = dir / "scalar.json";
  REQUIRE(cli({"example", "scalar", "--variant", "robust", "--out", model}).code == 0);

  auto r = cli({"certify", model, "--method", "lmi2", "--csv", dir / "r.csv", "--out", dir / "c.json"});
  REQUIRE(r.code == 0);
  auto csv = slurp(dir / "r.csv");
  CHECK(count_lines(csv) == 2);
  auto line = csv.substr(csv.find('\n') + 1);
  CHECK(line.rfind("lmi2,optimal,", 0) == 0);
  // fifth column is the volume
  std::stringstream ss(line);
  std::string cell;
  for (int i = 0; i < 5; ++i) std::getline(ss, cell, ',');
  CHECK(std::stod(cell) == doctest::Approx(1.0).epsilon(1e-3));

  auto v = cli({"validate", model, dir / "c.json"});
  CHECK(v.code == 0);
  CHECK(v.out.find("result: pass") != std::string::npos);

  auto all = cli({"certify", model, "--method", "all", "--out", dir / "c.json"});
  REQUIRE(all.code == 0);
  CHECK(count_lines(all.out) == 5);
  for (auto m : {"vertex", "lmi1", "lmi2", "lmi3"}) CHECK(fs::exists(dir / ("c-" + std::string(m) + ".json")));
}

TEST_CASE("corrupted or mismatched certificates fail validation") {
  TempDir dir;
  auto model = dir / "scalar.json";
  REQUIRE(cli({"example", "scalar", "--variant", "robust", "--out", model}).code == 0);
  REQUIRE(cli({"certify", model, "--out", dir / "c.json"}).code == 0);
  auto j = nlohmann::json::parse(slurp(dir / "c.json"));
  j["P"][0][0] = j["P"][0][0].get<double>() * 0.01;
  std::ofstream(dir / "bad.json") << j.dump(2);
  auto v = cli({"validate", model, dir / "bad.json"});
  CHECK(v.code == 4);
  CHECK(v.out.find("containment: FAIL") != std::string::npos);

  auto other = dir / "msd.json";
  REQUIRE(cli({"example", "msd", "--carts", "1", "--out", other}).code == 0);
  CHECK(cli({"validate", other, dir / "c.json"}).code == 2);
}

TEST_CASE("input errors exit with 2 and name the problem") {
  TempDir dir;
  std::ofstream(dir / "bad.json") << "{\"state_dim\": 1,\n";
  auto r = cli({"certify", dir / "bad.json"});
  CHECK(r.code == 2);
  CHECK(r.err.find("line") != std::string::npos);
  CHECK(cli({"certify", dir / "missing.json"}).code == 2);
  CHECK(cli({"certify"}).code != 0);
}

TEST_CASE("infeasible is a successful run") {
  TempDir dir;
  auto model = dir / "u.json";
  REQUIRE(cli({"example", "scalar", "--variant", "unstable", "--out", model}).code == 0);
  auto r = cli({"certify", model, "--method", "lmi2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("lmi2,infeasible,") != std::string::npos);
}

TEST_CASE("sweep writes rows and plot data") {
  TempDir dir;
  auto r = cli({"sweep", "--example", "pendulum", "--values", "0.01,0.02", "--method", "lmi2",
                "--out", dir / "s.csv", "--plot", dir / "p.csv"});
  REQUIRE(r.code == 0);
  auto csv = slurp(dir / "s.csv");
  CHECK(count_lines(csv) == 3);
  CHECK(csv.rfind("delta,method,", 0) == 0);
  auto plot = slurp(dir / "p.csv");
  CHECK(plot.rfind("series,x,y", 0) == 0);
  CHECK(count_lines(plot) == 1 + 2 * 256);
}

TEST_CASE("bench reports medians and the ordering summary") {
  auto r = cli({"bench", "--carts", "1", "--method", "lmi1,lmi2,lmi3", "--repetitions", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("msd1,lmi2,optimal,") != std::string::npos);
  CHECK(r.out.find("# msd1: lmi2<=lmi1=") != std::string::npos);
}

}
