#include "nncert/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <json.hpp>

namespace nncert::io {

using nlohmann::json;

std::string format_number(double v) {
  if (!std::isfinite(v)) throw PreconditionError("cannot serialize a non-finite number");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot write file");
  out << text;
  if (!out) throw Error(path + ": write failed");
}

namespace {

// Small pretty printer; nlohmann would print shortest round-trip digits
// instead of the fixed 17.
class Writer {
 public:
  void key(const std::string& k) {
    sep();
    out_ << '"' << k << "\": ";
    fresh_ = true;
  }
  void open(char c) {
    sep();
    out_ << c;
    ++depth_;
    first_ = true;
  }
  void close(char c) {
    --depth_;
    out_ << '\n' << std::string(2 * static_cast<std::size_t>(depth_), ' ') << c;
    first_ = false;
  }
  void raw(const std::string& s) {
    sep();
    out_ << s;
  }
  void number(double v) { raw(format_number(v)); }
  void string(const std::string& s) { raw(json(s).dump()); }
  void vector(const Vector& v) {
    sep();
    out_ << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) out_ << (i ? ", " : "") << format_number(v(i));
    out_ << ']';
  }
  void matrix(const Matrix& m) {
    open('[');
    for (Eigen::Index r = 0; r < m.rows(); ++r) vector(m.row(r).transpose());
    close(']');
  }
  std::string str() { return out_.str() + "\n"; }

 private:
  void sep() {
    if (fresh_) {
      fresh_ = false;
      return;
    }
    if (depth_ > 0) {
      if (!first_) out_ << ',';
      out_ << '\n' << std::string(2 * static_cast<std::size_t>(depth_), ' ');
    }
    first_ = false;
  }
  std::ostringstream out_;
  int depth_ = 0;
  bool first_ = true;
  bool fresh_ = false;
};

// Reader helpers, all reporting the path of the field at fault.
const json& field(const json& j, const std::string& name, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path + ": expected an object");
  auto it = j.find(name);
  if (it == j.end()) throw SchemaError((path.empty() ? "" : path + ".") + name + ": missing field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path + ": number is not finite");
  return v;
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path + ": expected an integer");
  return j.get<long long>();
}

Vector vec(const json& j, const std::string& path, Eigen::Index expect = -1) {
  if (!j.is_array()) throw SchemaError(path + ": expected an array of numbers");
  const auto n = static_cast<Eigen::Index>(j.size());
  if (expect >= 0 && n != expect) {
    throw SchemaError(path + ": expected " + std::to_string(expect) + " entries, got " +
                      std::to_string(n));
  }
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = number(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matrix mat(const json& j, const std::string& path, Eigen::Index rows = -1, Eigen::Index cols = -1) {
  if (!j.is_array()) throw SchemaError(path + ": expected an array of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  if (rows >= 0 && r != rows) {
    throw SchemaError(path + ": expected " + std::to_string(rows) + " rows, got " +
                      std::to_string(r));
  }
  if (r == 0) return Matrix(0, std::max<Eigen::Index>(cols, 0));
  Matrix m;
  for (Eigen::Index i = 0; i < r; ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const Vector row = vec(j[static_cast<std::size_t>(i)], p, i == 0 ? cols : m.cols());
    if (i == 0) m.resize(r, row.size());
    m.row(i) = row.transpose();
  }
  return m;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Turn the byte offset into a line number for the diagnostic.
    const std::size_t upto = std::min(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw SchemaError("line " + std::to_string(line) + ": " + e.what());
  }
}

template <class F>
auto wrap(const std::string& path, F f) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

}  // namespace

UncertainNNCS parse_model(const std::string& text) {
  const json j = parse_json(text);
  if (!j.is_object()) throw SchemaError("top level: expected an object");
  const long long n = integer(field(j, "state_dim", ""), "state_dim");
  const long long m = integer(field(j, "input_dim", ""), "input_dim");
  if (n <= 0) throw SchemaError("state_dim: must be positive");
  if (m <= 0) throw SchemaError("input_dim: must be positive");
  auto interval = [&](const char* lo, const char* hi, long long cols) {
    const Matrix l = mat(field(j, lo, ""), lo, n, cols);
    const Matrix u = mat(field(j, hi, ""), hi, n, cols);
    return wrap(std::string(lo) + "/" + hi, [&] { return IntervalMatrix(l, u); });
  };
  IntervalMatrix A = interval("A_lower", "A_upper", n);
  IntervalMatrix B = interval("B_lower", "B_upper", m);

  const json& jn = field(j, "network", "");
  const std::string act_name = [&] {
    const json& a = field(jn, "activation", "network");
    if (!a.is_string()) throw SchemaError("network.activation: expected a string");
    return a.get<std::string>();
  }();
  double slope = 0.0;
  if (jn.contains("slope")) slope = number(jn["slope"], "network.slope");
  const Activation act = wrap("network.activation", [&] { return Activation::parse(act_name, slope); });
  const json& jl = field(jn, "layers", "network");
  if (!jl.is_array() || jl.size() < 2) {
    throw SchemaError("network.layers: expected an array of at least two layers");
  }
  std::vector<Layer> layers;
  Eigen::Index prev = static_cast<Eigen::Index>(n);
  for (std::size_t k = 0; k < jl.size(); ++k) {
    const std::string p = "network.layers[" + std::to_string(k) + "]";
    Layer L;
    L.weight = mat(field(jl[k], "W", p), p + ".W", -1, prev);
    L.bias = vec(field(jl[k], "b", p), p + ".b", L.weight.rows());
    if (L.weight.rows() == 0) throw SchemaError(p + ".W: layer has no rows");
    prev = L.weight.rows();
    layers.push_back(std::move(L));
  }
  if (prev != m) {
    throw SchemaError("network.layers[" + std::to_string(jl.size() - 1) +
                      "].W: output width " + std::to_string(prev) + " differs from input_dim " +
                      std::to_string(m));
  }
  FeedforwardNetwork net = wrap("network", [&] { return FeedforwardNetwork(layers, act); });

  const Eigen::Index n1 = net.layers().front().weight.rows();
  UncertainNNCS sys{std::move(A), std::move(B), std::move(net),
                    vec(field(j, "v1_lower", ""), "v1_lower", n1),
                    vec(field(j, "v1_upper", ""), "v1_upper", n1),
                    Vector::Zero(n),
                    std::nullopt};
  if (j.contains("x_star")) sys.x_star = vec(j["x_star"], "x_star", n);
  if (j.contains("saturation")) {
    const json& s = j["saturation"];
    Saturation sat{number(field(s, "lo", "saturation"), "saturation.lo"),
                   number(field(s, "hi", "saturation"), "saturation.hi")};
    if (!(sat.lo < sat.hi)) throw SchemaError("saturation: lo must be below hi");
    sys.saturation = sat;
  }
  const Layer& first = sys.net.layers().front();
  const Vector v = first.weight * sys.x_star + first.bias;
  for (Eigen::Index i = 0; i < n1; ++i) {
    if (!(sys.v1_lower(i) < v(i) && v(i) < sys.v1_upper(i))) {
      throw SchemaError("v1_lower/v1_upper[" + std::to_string(i) +
                        "]: box does not strictly contain W1 x* + b1 = " + format_number(v(i)));
    }
  }
  wrap("model", [&] {
    validate_system(sys);
    return 0;
  });
  return sys;
}

UncertainNNCS load_model(const std::string& path) {
  try {
    return parse_model(read_file(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

std::string format_model(const UncertainNNCS& sys) {
  Writer w;
  w.open('{');
  w.key("state_dim");
  w.raw(std::to_string(sys.state_dim()));
  w.key("input_dim");
  w.raw(std::to_string(sys.input_dim()));
  w.key("A_lower");
  w.matrix(sys.A.lower());
  w.key("A_upper");
  w.matrix(sys.A.upper());
  w.key("B_lower");
  w.matrix(sys.B.lower());
  w.key("B_upper");
  w.matrix(sys.B.upper());
  w.key("network");
  w.open('{');
  w.key("activation");
  w.string(sys.net.activation().name());
  if (sys.net.activation().kind == ActivationKind::LeakyRelu) {
    w.key("slope");
    w.number(sys.net.activation().slope);
  }
  w.key("layers");
  w.open('[');
  for (const Layer& L : sys.net.layers()) {
    w.open('{');
    w.key("W");
    w.matrix(L.weight);
    w.key("b");
    w.vector(L.bias);
    w.close('}');
  }
  w.close(']');
  w.close('}');
  w.key("v1_lower");
  w.vector(sys.v1_lower);
  w.key("v1_upper");
  w.vector(sys.v1_upper);
  w.key("x_star");
  w.vector(sys.equilibrium());
  if (sys.saturation) {
    w.key("saturation");
    w.open('{');
    w.key("lo");
    w.number(sys.saturation->lo);
    w.key("hi");
    w.number(sys.saturation->hi);
    w.close('}');
  }
  w.close('}');
  return w.str();
}

void save_model(const std::string& path, const UncertainNNCS& sys) {
  write_file(path, format_model(sys));
}

std::string format_certificate(const Certificate& cert) {
  Writer w;
  w.open('{');
  w.key("method");
  w.string(method_name(cert.method));
  w.key("P");
  w.matrix(cert.P);
  w.key("lambda");
  w.vector(cert.lambda);
  w.key("x_star");
  w.vector(cert.ellipsoid.center);
  w.key("aux");
  w.open('{');
  if (cert.gamma.size() > 0) {
    w.key("gamma");
    w.matrix(cert.gamma);
  }
  if (cert.t.size() > 0) {
    w.key("t");
    w.vector(cert.t);
  }
  if (cert.s.size() > 0) {
    w.key("s");
    w.vector(cert.s);
  }
  if (cert.Y.size() > 0) {
    w.key("Y");
    w.matrix(cert.Y);
  }
  w.close('}');
  w.key("trace_P");
  w.number(cert.trace());
  w.key("volume");
  w.number(cert.volume());
  w.key("solver");
  w.open('{');
  w.key("status");
  w.string(sdp::status_name(cert.stats.status));
  w.key("wall_time_s");
  w.number(cert.stats.wall_time);
  w.key("iterations");
  w.raw(std::to_string(cert.stats.iterations));
  w.close('}');
  w.key("residuals");
  w.open('{');
  w.key("pass");
  w.raw(cert.residuals.pass ? "true" : "false");
  w.key("blocks");
  w.open('[');
  for (const sdp::BlockResidual& b : cert.residuals.blocks) {
    w.open('{');
    w.key("label");
    w.string(b.label);
    w.key("role");
    w.string(sdp::role_name(b.role));
    w.key("size");
    w.raw(std::to_string(b.size));
    w.key("min_eigenvalue");
    w.number(b.min_eigenvalue);
    w.key("pass");
    w.raw(b.pass ? "true" : "false");
    w.close('}');
  }
  w.close(']');
  w.close('}');
  w.close('}');
  return w.str();
}

Certificate parse_certificate(const std::string& text) {
  const json j = parse_json(text);
  Certificate c;
  const json& jm = field(j, "method", "");
  if (!jm.is_string()) throw SchemaError("method: expected a string");
  c.method = wrap("method", [&] { return parse_method(jm.get<std::string>()); });
  c.P = mat(field(j, "P", ""), "P");
  const Eigen::Index n = c.P.rows();
  if (n == 0 || c.P.cols() != n) throw SchemaError("P: expected a non-empty square matrix");
  if ((c.P - c.P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + c.P.cwiseAbs().maxCoeff())) {
    throw SchemaError("P: matrix is not symmetric");
  }
  c.lambda = vec(field(j, "lambda", ""), "lambda");
  const Vector center = j.contains("x_star") ? vec(j["x_star"], "x_star", n) : Vector::Zero(n);
  if (j.contains("aux")) {
    const json& a = j["aux"];
    if (a.contains("gamma")) c.gamma = mat(a["gamma"], "aux.gamma", -1, n);
    if (a.contains("t")) c.t = vec(a["t"], "aux.t");
    if (a.contains("s")) c.s = vec(a["s"], "aux.s", n);
    if (a.contains("Y")) c.Y = mat(a["Y"], "aux.Y");
  }
  c.ellipsoid = Ellipsoid{c.P, center};
  if (c.P.llt().info() != Eigen::Success) throw SchemaError("P: matrix is not positive definite");
  return c;
}

Certificate load_certificate(const std::string& path) {
  try {
    return parse_certificate(read_file(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

ReportRow make_row(const CertifyOutcome& out) {
  ReportRow r;
  r.method = method_name(out.method);
  switch (out.kind) {
    case CertifyOutcome::Kind::Certified:
      r.status = "optimal";
      break;
    case CertifyOutcome::Kind::Infeasible:
      r.status = "infeasible";
      break;
    case CertifyOutcome::Kind::Failed:
      r.status = "failed";
      break;
  }
  r.wall_time_s = out.stats.wall_time;
  if (out.certificate) {
    r.trace_P = out.certificate->trace();
    r.volume = out.certificate->volume();
  }
  if (!out.residuals.blocks.empty()) r.min_verification_residual = out.residuals.worst_eigenvalue();
  r.num_vars = out.size.num_decision_vars;
  r.lmi_size = out.size.lmi_total_size;
  return r;
}

std::string csv_header(const std::vector<std::string>& keys) {
  std::string s;
  for (const std::string& k : keys) s += k + ",";
  return s + "method,status,wall_time_s,trace_P,volume,min_verification_residual,num_vars,lmi_size";
}

std::string csv_line(const ReportRow& row, const std::vector<std::string>& keys) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  std::string s;
  for (const std::string& k : keys) s += k + ",";
  return s + row.method + "," + row.status + "," + format_number(row.wall_time_s) + "," +
         opt(row.trace_P) + "," + opt(row.volume) + "," + opt(row.min_verification_residual) +
         "," + std::to_string(row.num_vars) + "," + std::to_string(row.lmi_size);
}

std::vector<std::pair<double, double>> ellipse_polyline(const Ellipsoid& e, int points) {
  const Eigen::Index n = e.P.rows();
  if (n < 2) throw DimensionError("ellipse_polyline needs at least two state coordinates");
  Eigen::LLT<Matrix> llt(e.P);
  if (llt.info() != Eigen::Success) throw PreconditionError("ellipsoid matrix is not positive definite");
  // The shadow on (x1, x2) has shape matrix Sigma_11 with Sigma = P^{-1}.
  const Matrix sigma = llt.solve(Matrix::Identity(n, n)).topLeftCorner(2, 2);
  const Eigen::Matrix2d L = Eigen::Matrix2d(sigma).llt().matrixL();
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(std::max(points, 0)));
  for (int k = 0; k < points; ++k) {
    const double th = 2.0 * std::numbers::pi * k / points;
    const Eigen::Vector2d p = L * Eigen::Vector2d(std::cos(th), std::sin(th));
    out.emplace_back(e.center(0) + p(0), e.center(1) + p(1));
  }
  return out;
}

}  // namespace nncert::io
