#pragma once

// Dense inner-loop kernels used by the Schur-complement assembly of the
// interior-point solver and by the sampling oracles. Every kernel has a scalar
// reference implementation; vectorized variants are selected once at startup
// from the CPU feature flags and must agree with the reference to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace nncert::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

/// Best instruction set supported by both this build and the running CPU.
Isa detected_isa();

/// Instruction set currently used by the dispatching entry points.
Isa active_isa();

/// Overrides dispatch (tests use this to pin the reference path). Requests for
/// an unsupported ISA fall back to Scalar; the ISA actually selected is returned.
Isa set_active_isa(Isa isa);

bool isa_supported(Isa isa);

// Dispatching entry points.
double dot(std::span<const double> a, std::span<const double> b);

/// out[k] = x_k' P x_k for column-major x (n rows, count columns) and
/// column-major symmetric P (n x n).
void quad_forms(std::span<const double> P, std::size_t n, std::span<const double> xs,
                std::span<double> out);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void quad_forms(const double* P, std::size_t n, const double* xs, std::size_t count, double* out);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
bool compiled();
double dot(const double* a, const double* b, std::size_t n);
void quad_forms(const double* P, std::size_t n, const double* xs, std::size_t count, double* out);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

}  // namespace nncert::kernels
