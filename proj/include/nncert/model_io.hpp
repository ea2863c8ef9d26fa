#pragma once

// Model and certificate files (JSON), report CSV and plot data.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nncert/lmi_certificates.hpp"

namespace nncert::io {

/// Parses a model document. Errors carry the offending field path, e.g.
/// "network.layers[0].W[1]: expected 2 entries, got 3". Throws SchemaError.
UncertainNNCS parse_model(const std::string& text);
UncertainNNCS load_model(const std::string& path);

/// Every number is printed with 17 significant digits, so write(read(write(m)))
/// reproduces the bytes of write(m).
std::string format_model(const UncertainNNCS& sys);
void save_model(const std::string& path, const UncertainNNCS& sys);

std::string format_certificate(const Certificate& cert);
/// Reads P, lambda, the auxiliary variables and the center back. Residuals and
/// solver statistics are informational and not restored.
Certificate parse_certificate(const std::string& text);
Certificate load_certificate(const std::string& path);

struct ReportRow {
  std::string method;
  std::string status;  // "optimal", "infeasible", "failed" or "-" when over budget
  double wall_time_s = 0.0;
  std::optional<double> trace_P;
  std::optional<double> volume;  // present exactly when status is "optimal"
  std::optional<double> min_verification_residual;
  long long num_vars = 0;
  long long lmi_size = 0;
};

ReportRow make_row(const CertifyOutcome& out);

/// method,status,wall_time_s,trace_P,volume,min_verification_residual,num_vars,
/// lmi_size, after any leading key columns (model name, sweep value). Missing
/// values are left empty.
std::string csv_header(const std::vector<std::string>& keys = {});
std::string csv_line(const ReportRow& row, const std::vector<std::string>& keys = {});

/// Boundary of a 2-D ellipsoid (or of its projection on the first two
/// coordinates), `points` samples, closed polygon not repeated.
std::vector<std::pair<double, double>> ellipse_polyline(const Ellipsoid& e, int points = 256);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

/// %.17g
std::string format_number(double v);

}  // namespace nncert::io
