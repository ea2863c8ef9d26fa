#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nncert/types.hpp"

namespace nncert {

enum class ActivationKind { Tanh, Relu, Sigmoid, LeakyRelu };

/// Scalar activation applied entrywise in every hidden layer.
struct Activation {
  ActivationKind kind = ActivationKind::Tanh;
  double slope = 0.0;  // leaky_relu only, in (0, 1)

  static Activation tanh() { return {ActivationKind::Tanh, 0.0}; }
  static Activation relu() { return {ActivationKind::Relu, 0.0}; }
  static Activation sigmoid() { return {ActivationKind::Sigmoid, 0.0}; }
  static Activation leaky_relu(double slope);

  double operator()(double v) const;
  double derivative(double v) const;
  bool is_odd() const { return kind == ActivationKind::Tanh; }
  std::string name() const;
  static Activation parse(const std::string& name, double slope = 0.0);
};

struct Layer {
  Matrix weight;  // n_i x n_{i-1}
  Vector bias;    // n_i
};

/// u = W^{l+1} phi(W^l ... phi(W^1 x + b^1) ... + b^l) + b^{l+1}, with l >= 1 hidden layers.
class FeedforwardNetwork {
 public:
  /// layers holds W^1..W^{l+1}; throws DimensionError if dimensions do not chain
  /// or fewer than two layers are given.
  FeedforwardNetwork(std::vector<Layer> layers, Activation activation);

  Eigen::Index input_dim() const { return layers_.front().weight.cols(); }
  Eigen::Index output_dim() const { return layers_.back().weight.rows(); }
  std::size_t hidden_layers() const { return layers_.size() - 1; }
  Eigen::Index hidden_width(std::size_t i) const { return layers_[i].weight.rows(); }
  /// Total number of hidden neurons.
  Eigen::Index n_phi() const;

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Activation& activation() const noexcept { return activation_; }

  Vector forward(const Vector& x) const;

  /// Pre-activations of all hidden layers, stacked.
  Vector pre_activations(const Vector& x) const;

  /// Copy with the output bias replaced.
  FeedforwardNetwork with_output_bias(const Vector& bias) const;

 private:
  std::vector<Layer> layers_;
  Activation activation_;
};

/// Block decomposition [v; u] = N [x; w; 1] of the network, with the loop
/// transformation matrices R_V and R_phi.
struct IsolationMatrices {
  Matrix N_vx, N_vw, N_ux, N_uw;
  Vector N_vb, N_ub;
  Matrix R_V;    // (n+m) x (n+n_phi)
  Matrix R_phi;  // 2 n_phi x (n+n_phi)
};

IsolationMatrices assemble_isolation(const FeedforwardNetwork& net);

struct EquilibriumTuple {
  Vector x_star, u_star, v_star, w_star;
};

EquilibriumTuple propagate_equilibrium(const FeedforwardNetwork& net, const Vector& x_star);

/// Infinity norm of [v*; u*] - N [x*; w*; 1] and w* - phi(v*).
double equilibrium_residual(const FeedforwardNetwork& net, const IsolationMatrices& iso,
                            const EquilibriumTuple& eq);

struct ZeroEquilibriumResult {
  FeedforwardNetwork net;
  Vector applied_shift;  // added to the output bias
};

/// Shifts the output bias so that forward(net, 0) == 0 exactly. Refuses with
/// PreconditionError when ||forward(net, 0)||_inf exceeds tolerance.
ZeroEquilibriumResult enforce_zero_equilibrium(const FeedforwardNetwork& net, double tolerance);

struct PreActivationBounds {
  Vector v_lower, v_upper;
};

/// Interval bound propagation from the first-layer box through the hidden layers.
PreActivationBounds propagate_bounds(const FeedforwardNetwork& net, const Vector& v1_lower,
                                     const Vector& v1_upper, const EquilibriumTuple& eq);

struct Sector {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Local sector [alpha, beta] of the activation around (v_star, phi(v_star)) on
/// [v_low, v_high] from the hull of the derivative; for odd activations on a
/// box symmetric about v_star = 0 alpha is the endpoint chord slope.
Sector sector_bounds(const Activation& act, double v_low, double v_high, double v_star);

}  // namespace nncert
