#include "nncert/commands.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "nncert/examples.hpp"
#include "nncert/kernels.hpp"
#include "nncert/model_io.hpp"
#include "nncert/validation.hpp"

namespace nncert {

namespace {

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerification = 4;

struct Common {
  std::string method = "lmi2";
  std::string out;
  std::uint64_t seed = 1;
  double margin = 1e-7;
  bool validate = false;
  double budget = 300.0;
};

void add_common(CLI::App* app, Common& c, bool with_validate = true) {
  app->add_option("--method", c.method,
                  "nominal, vertex, lmi1, lmi2, lmi3, all, or a comma-separated list")
      ->capture_default_str();
  app->add_option("--out", c.out, "output file");
  app->add_option("--seed", c.seed, "seed for every sampler")->capture_default_str();
  app->add_option("--margin", c.margin, "strictness margin of the LMIs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  if (with_validate) app->add_flag("--validate", c.validate, "run the sampling checks on each certificate");
  app->add_option("--time-budget", c.budget, "seconds allowed per solve")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

std::vector<CertificateMethod> parse_methods(const std::string& s) {
  if (s == "all") {
    return {CertificateMethod::Vertex, CertificateMethod::LmiI, CertificateMethod::LmiII,
            CertificateMethod::LmiIII};
  }
  std::vector<CertificateMethod> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      out.push_back(parse_method(tok));
    } catch (const Error& e) {
      throw SchemaError(std::string("--method: ") + e.what());
    }
  }
  if (out.empty()) throw SchemaError("--method: empty list");
  return out;
}

std::vector<double> parse_values(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw SchemaError(what + ": '" + tok + "' is not a number");
    }
  }
  if (out.empty()) throw SchemaError(what + ": empty list");
  return out;
}

struct Cell {
  CertifyOutcome outcome;
  io::ReportRow row;
  bool over_budget = false;
};

// One certification with end-to-end timing; capacity problems become a failed row.
Cell run_cell(const CertificationContext& ctx, CertificateMethod method, const Common& c) {
  CertifyOptions opt;
  opt.solver.strict_margin = c.margin;
  opt.solver.time_limit = c.budget;
  opt.seed = c.seed;
  Cell cell;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    cell.outcome = certify(ctx, method, opt);
  } catch (const CapacityError& e) {
    cell.outcome.method = method;
    cell.outcome.kind = CertifyOutcome::Kind::Failed;
    cell.outcome.message = e.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  cell.row = io::make_row(cell.outcome);
  cell.row.wall_time_s = wall;
  if (cell.outcome.kind == CertifyOutcome::Kind::Failed &&
      (cell.outcome.stats.message == "time limit reached" || wall > c.budget)) {
    cell.over_budget = true;
    cell.row.status = "-";
  }
  return cell;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "-" + suffix;
  return path.substr(0, dot) + "-" + suffix + path.substr(dot);
}

void write_polyline(std::ostream& os, const std::string& series, const Ellipsoid& e) {
  for (const auto& [x, y] : io::ellipse_polyline(e, 256)) {
    os << series << ',' << io::format_number(x) << ',' << io::format_number(y) << '\n';
  }
}

// Prints one line per check; true when all pass.
bool run_validation(const UncertainNNCS& sys, const Certificate& cert, std::uint64_t seed,
                    std::ostream& out, std::ostream* plot, int steps) {
  const LyapunovReport ly = lyapunov_decrease_check(sys, cert, 1000, 10, seed);
  out << "lyapunov_decrease: " << (ly.pass() ? "pass" : "FAIL") << " pairs=" << ly.pairs
      << " violations=" << ly.violations
      << " worst_relative_change=" << io::format_number(ly.worst_relative_change)
      << " would_saturate=" << ly.saturation_engaged << '\n';
  const ContainmentReport ct =
      containment_check(cert.ellipsoid, sys.net, sys.v1_lower, sys.v1_upper, 10000, seed + 7);
  out << "containment: " << (ct.pass() ? "pass" : "FAIL") << " samples=" << ct.samples
      << " violations=" << ct.violations << " worst_excess=" << io::format_number(ct.worst_excess)
      << " blocks_psd=" << (ct.blocks_psd ? "yes" : "no")
      << " min_block_eigenvalue=" << io::format_number(ct.min_block_eigenvalue) << '\n';
  const ConvergenceReport cv =
      trajectory_convergence(sys, cert.ellipsoid, 200, 5, steps, 1e-4, seed + 13, false, plot ? 20 : 0);
  out << "convergence: " << (cv.pass() ? "pass" : "FAIL") << " runs=" << cv.runs
      << " converged=" << cv.converged << " diverged=" << cv.diverged
      << " worst_final_distance=" << io::format_number(cv.worst_final_distance) << '\n';
  if (sys.saturation) {
    // Certificates ignore the actuator limits; report what the limits change.
    const ConvergenceReport sat =
        trajectory_convergence(sys, cert.ellipsoid, 200, 5, steps, 1e-4, seed + 13, true);
    out << "convergence_saturated: " << (sat.pass() ? "pass" : "FAIL") << " runs=" << sat.runs
        << " converged=" << sat.converged << " clipped_runs=" << sat.saturated << '\n';
  }
  if (plot && sys.state_dim() >= 2) {
    write_polyline(*plot, "ellipse", cert.ellipsoid);
    for (std::size_t k = 0; k < cv.kept.size(); ++k) {
      for (const Vector& x : cv.kept[k].states) {
        *plot << "trajectory" << k << ',' << io::format_number(x(0)) << ','
              << io::format_number(x(1)) << '\n';
      }
    }
  }
  return ly.pass() && ct.pass() && cv.pass();
}

int cmd_certify(const std::string& model_path, const Common& c, const std::string& csv_path,
                std::ostream& out) {
  const UncertainNNCS sys = io::load_model(model_path);
  const CertificationContext ctx = prepare(sys);
  const auto methods = parse_methods(c.method);
  std::ostringstream csv;
  csv << io::csv_header() << '\n';
  out << io::csv_header() << '\n';
  int code = 0;
  for (CertificateMethod m : methods) {
    const Cell cell = run_cell(ctx, m, c);
    out << io::csv_line(cell.row) << '\n';
    csv << io::csv_line(cell.row) << '\n';
    if (cell.outcome.kind == CertifyOutcome::Kind::Failed) {
      out << "# " << method_name(m) << ": " << cell.outcome.message << '\n';
      code = std::max(code, kExitSolver);
    }
    if (!cell.outcome.certificate) continue;
    if (!c.out.empty()) {
      io::write_file(methods.size() > 1 ? with_suffix(c.out, method_name(m)) : c.out,
                     io::format_certificate(*cell.outcome.certificate));
    }
    if (c.validate) {
      out << "# validation of " << method_name(m) << '\n';
      if (!run_validation(sys, *cell.outcome.certificate, c.seed, out, nullptr, 2000)) {
        code = kExitVerification;
      }
    }
  }
  if (!csv_path.empty()) io::write_file(csv_path, csv.str());
  return code;
}

UncertainNNCS scaled_model(const UncertainNNCS& base, double scale) {
  auto widen = [scale](const IntervalMatrix& m) {
    CenterRadius cr = center_radius(m);
    cr.radius *= scale;
    return IntervalMatrix::from_center_radius(cr);
  };
  UncertainNNCS s = base;
  s.A = widen(base.A);
  s.B = widen(base.B);
  return s;
}

int cmd_sweep(const std::string& example, const std::string& model_path, int carts,
              const std::string& values, const std::string& plot_path, const Common& c,
              std::ostream& out) {
  if (example.empty() == model_path.empty()) {
    throw SchemaError("sweep: give exactly one of --example or --model");
  }
  const auto deltas = parse_values(values, "--values");
  const auto methods = parse_methods(c.method);
  std::optional<UncertainNNCS> base;
  if (!model_path.empty()) base = io::load_model(model_path);
  std::ostringstream csv, plot;
  csv << io::csv_header({"delta"}) << '\n';
  plot << "series,x,y\n";
  int code = 0;
  for (double d : deltas) {
    if (d < 0.0) throw SchemaError("--values: negative uncertainty level");
    UncertainNNCS sys = base ? scaled_model(*base, d)
                      : example == "pendulum"
                          ? examples::pendulum({.delta = d})
                          : examples::msd({.carts = carts, .delta_k = d, .delta_c = d / 10.0});
    const CertificationContext ctx = prepare(sys);
    for (CertificateMethod m : methods) {
      const Cell cell = run_cell(ctx, m, c);
      csv << io::csv_line(cell.row, {io::format_number(d)}) << '\n';
      if (cell.outcome.kind == CertifyOutcome::Kind::Failed) code = kExitSolver;
      if (cell.outcome.certificate && sys.state_dim() >= 2) {
        write_polyline(plot, "delta=" + io::format_number(d) + ":" + method_name(m),
                       cell.outcome.certificate->ellipsoid);
      }
    }
  }
  out << csv.str();
  if (!c.out.empty()) io::write_file(c.out, csv.str());
  if (!plot_path.empty()) io::write_file(plot_path, plot.str());
  return code;
}

int cmd_example(const std::string& kind, double delta, int carts, double dk, double dc,
                const std::string& variant, const std::string& path, std::ostream& out) {
  UncertainNNCS sys = [&] {
    if (kind == "pendulum") return examples::pendulum({.delta = delta});
    if (kind == "msd") {
      if (carts < 1) throw SchemaError("--carts: need at least one cart");
      if (dk < 0.0 || dc < 0.0) throw SchemaError("--delta-k/--delta-c: must be nonnegative");
      return examples::msd({.carts = carts, .delta_k = dk, .delta_c = dc});
    }
    static const std::map<std::string, examples::ScalarVariant> variants{
        {"nominal", examples::ScalarVariant::Nominal},
        {"robust", examples::ScalarVariant::Robust},
        {"vertex", examples::ScalarVariant::Vertex},
        {"unstable", examples::ScalarVariant::Unstable}};
    auto it = variants.find(variant);
    if (it == variants.end()) throw SchemaError("--variant: unknown scalar variant '" + variant + "'");
    return examples::scalar(it->second);
  }();
  const std::string text = io::format_model(sys);
  if (path.empty()) {
    out << text;
  } else {
    io::write_file(path, text);
  }
  return 0;
}

int cmd_validate(const std::string& model_path, const std::string& cert_path,
                 const std::string& plot_path, int steps, const Common& c, std::ostream& out) {
  const UncertainNNCS sys = io::load_model(model_path);
  const Certificate cert = io::load_certificate(cert_path);
  if (cert.P.rows() != sys.state_dim()) {
    throw DimensionError("certificate is " + std::to_string(cert.P.rows()) +
                         "-dimensional but the model has " + std::to_string(sys.state_dim()) +
                         " states");
  }
  std::ostringstream plot;
  plot << "series,x,y\n";
  const bool ok = run_validation(sys, cert, c.seed, out, plot_path.empty() ? nullptr : &plot, steps);
  if (!plot_path.empty()) io::write_file(plot_path, plot.str());
  out << (ok ? "result: pass" : "result: FAIL") << '\n';
  return ok ? 0 : kExitVerification;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

int cmd_bench(const std::vector<std::string>& models, const std::string& carts, int reps,
              const Common& c, std::ostream& out) {
  if (reps < 1) throw SchemaError("--repetitions: must be at least 1");
  std::vector<std::pair<std::string, UncertainNNCS>> systems;
  for (const std::string& p : models) systems.emplace_back(p, io::load_model(p));
  if (!carts.empty()) {
    for (double nc : parse_values(carts, "--carts")) {
      const int k = static_cast<int>(nc);
      if (k < 1 || k != nc) throw SchemaError("--carts: expected positive integers");
      systems.emplace_back("msd" + std::to_string(k), examples::msd({.carts = k}));
    }
  }
  if (systems.empty()) throw SchemaError("bench: no models given");
  const auto methods = parse_methods(c.method);
  std::ostringstream csv;
  csv << io::csv_header({"model"}) << '\n';
  std::vector<std::string> summary;
  int code = 0;
  for (const auto& [name, sys] : systems) {
    const CertificationContext ctx = prepare(sys);
    std::map<CertificateMethod, std::pair<double, bool>> times;  // median, over budget
    for (CertificateMethod m : methods) {
      std::vector<double> walls;
      Cell last;
      for (int r = 0; r < reps; ++r) {
        last = run_cell(ctx, m, c);
        walls.push_back(last.row.wall_time_s);
        if (last.over_budget) break;  // no point repeating a cell that ran out of time
      }
      last.row.wall_time_s = median(walls);
      if (last.outcome.kind == CertifyOutcome::Kind::Failed && !last.over_budget) code = kExitSolver;
      times[m] = {last.row.wall_time_s, last.over_budget};
      csv << io::csv_line(last.row, {name}) << '\n';
    }
    auto has = [&](CertificateMethod m) { return times.count(m) > 0; };
    std::string line = "# " + name + ":";
    if (has(CertificateMethod::LmiII)) {
      const double t2 = times[CertificateMethod::LmiII].first;
      for (auto m : {CertificateMethod::LmiI, CertificateMethod::LmiIII}) {
        if (has(m)) {
          line += " lmi2<=" + method_name(m) + "=" + (t2 <= times[m].first ? "yes" : "no");
        }
      }
    }
    if (has(CertificateMethod::Vertex)) {
      bool slowest = times[CertificateMethod::Vertex].second;
      if (!slowest) {
        slowest = true;
        for (const auto& [m, t] : times) {
          if (m != CertificateMethod::Vertex && t.first > times[CertificateMethod::Vertex].first) {
            slowest = false;
          }
        }
      }
      line += std::string(" vertex_slowest_or_over_budget=") + (slowest ? "yes" : "no");
    }
    summary.push_back(line);
  }
  out << csv.str();
  for (const std::string& s : summary) out << s << '\n';
  if (!c.out.empty()) io::write_file(c.out, csv.str());
  return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust region-of-attraction certificates for neural network control systems"};
  app.require_subcommand(1);
  Common common, sweep_c, bench_c;
  bench_c.method = "lmi1,lmi2,lmi3";

  auto* certify_cmd = app.add_subcommand("certify", "certify a model file");
  std::string model_path, csv_path;
  certify_cmd->add_option("model", model_path, "model JSON")->required();
  certify_cmd->add_option("--csv", csv_path, "also write the report rows here");
  add_common(certify_cmd, common);

  auto* sweep_cmd = app.add_subcommand("sweep", "certify over a list of uncertainty levels");
  std::string sweep_example, sweep_model, values = "0,0.005,0.01,0.02", plot_path;
  int carts = 1;
  sweep_cmd->add_option("--example", sweep_example, "pendulum or msd")
      ->check(CLI::IsMember({"pendulum", "msd"}));
  sweep_cmd->add_option("--model", sweep_model,
                        "template model; each value scales its interval radii");
  sweep_cmd->add_option("--carts", carts, "carts for the msd example")->capture_default_str();
  sweep_cmd->add_option("--values", values, "comma-separated levels")->capture_default_str();
  sweep_cmd->add_option("--plot", plot_path, "ellipse polylines (series,x,y)");
  add_common(sweep_cmd, sweep_c, false);

  auto* example_cmd = app.add_subcommand("example", "write a built-in model");
  std::string kind, variant = "robust";
  double delta = 0.0, dk = 0.05, dc = 0.005;
  int ex_carts = 1;
  example_cmd->add_option("kind", kind, "pendulum, msd or scalar")
      ->required()
      ->check(CLI::IsMember({"pendulum", "msd", "scalar"}));
  example_cmd->add_option("--delta", delta, "pendulum length half-width")->capture_default_str();
  example_cmd->add_option("--carts", ex_carts, "msd cart count")->capture_default_str();
  example_cmd->add_option("--delta-k", dk, "msd spring half-width")->capture_default_str();
  example_cmd->add_option("--delta-c", dc, "msd damper half-width")->capture_default_str();
  example_cmd->add_option("--variant", variant, "scalar variant")->capture_default_str();
  example_cmd->add_option("--out", common.out, "output file (default stdout)");

  auto* validate_cmd = app.add_subcommand("validate", "check a certificate by sampling and simulation");
  std::string cert_path;
  int steps = 2000;
  validate_cmd->add_option("model", model_path, "model JSON")->required();
  validate_cmd->add_option("certificate", cert_path, "certificate JSON")->required();
  validate_cmd->add_option("--plot", plot_path, "trajectory polylines (series,x,y)");
  validate_cmd->add_option("--steps", steps, "simulation horizon")->capture_default_str();
  validate_cmd->add_option("--seed", common.seed, "seed for every sampler")->capture_default_str();

  auto* bench_cmd = app.add_subcommand("bench", "time the methods on several models");
  std::vector<std::string> models;
  std::string bench_carts;
  int reps = 3;
  bench_cmd->add_option("--model", models, "model files");
  bench_cmd->add_option("--carts", bench_carts, "msd examples, e.g. 1,2,3");
  bench_cmd->add_option("--repetitions", reps, "runs per cell; the median is reported")
      ->capture_default_str();
  add_common(bench_cmd, bench_c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : kExitInput;
  }
  try {
    if (certify_cmd->parsed()) return cmd_certify(model_path, common, csv_path, out);
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sweep_example, sweep_model, carts, values, plot_path, sweep_c, out);
    }
    if (example_cmd->parsed()) {
      return cmd_example(kind, delta, ex_carts, dk, dc, variant, common.out, out);
    }
    if (validate_cmd->parsed()) return cmd_validate(model_path, cert_path, plot_path, steps, common, out);
    if (bench_cmd->parsed()) return cmd_bench(models, bench_carts, reps, bench_c, out);
  } catch (const VerificationFailure& e) {
    err << "verification failure: " << e.what() << '\n';
    return kExitVerification;
  } catch (const SchemaError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InvalidInterval& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DimensionError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const PreconditionError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitInput;
}

}  // namespace nncert
