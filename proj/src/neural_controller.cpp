#include "nncert/neural_controller.hpp"

#include <algorithm>
#include <cmath>

#include "nncert/error.hpp"

namespace nncert {

namespace {

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Vector apply(const Activation& act, const Vector& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = act(v(i));
  return out;
}

}  // namespace

Activation Activation::leaky_relu(double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw PreconditionError("leaky_relu slope must lie in (0, 1)");
  }
  return {ActivationKind::LeakyRelu, slope};
}

double Activation::operator()(double v) const {
  switch (kind) {
    case ActivationKind::Tanh:
      return std::tanh(v);
    case ActivationKind::Relu:
      return v > 0.0 ? v : 0.0;
    case ActivationKind::Sigmoid:
      return logistic(v);
    case ActivationKind::LeakyRelu:
      return v > 0.0 ? v : slope * v;
  }
  return v;
}

double Activation::derivative(double v) const {
  switch (kind) {
    case ActivationKind::Tanh: {
      const double t = std::tanh(v);
      return 1.0 - t * t;
    }
    case ActivationKind::Relu:
      return v > 0.0 ? 1.0 : 0.0;
    case ActivationKind::Sigmoid: {
      const double s = logistic(v);
      return s * (1.0 - s);
    }
    case ActivationKind::LeakyRelu:
      return v > 0.0 ? 1.0 : slope;
  }
  return 1.0;
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::Tanh:
      return "tanh";
    case ActivationKind::Relu:
      return "relu";
    case ActivationKind::Sigmoid:
      return "sigmoid";
    case ActivationKind::LeakyRelu:
      return "leaky_relu";
  }
  return "tanh";
}

Activation Activation::parse(const std::string& name, double slope) {
  if (name == "tanh") return tanh();
  if (name == "relu") return relu();
  if (name == "sigmoid") return sigmoid();
  if (name == "leaky_relu") return leaky_relu(slope);
  throw PreconditionError("unknown activation '" + name + "'");
}

FeedforwardNetwork::FeedforwardNetwork(std::vector<Layer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  if (layers_.size() < 2) {
    throw DimensionError("a feedforward controller needs at least one hidden layer");
  }
  if (activation_.kind == ActivationKind::LeakyRelu &&
      !(activation_.slope > 0.0 && activation_.slope < 1.0)) {
    throw PreconditionError("leaky_relu slope must lie in (0, 1)");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.weight.rows() == 0 || l.weight.cols() == 0) {
      throw DimensionError("layer " + std::to_string(i + 1) + " has an empty weight matrix");
    }
    if (l.bias.size() != l.weight.rows()) {
      throw DimensionError("layer " + std::to_string(i + 1) + " bias length " +
                           std::to_string(l.bias.size()) + " does not match " +
                           std::to_string(l.weight.rows()) + " rows");
    }
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows()) {
      throw DimensionError("layer " + std::to_string(i + 1) + " expects " +
                           std::to_string(l.weight.cols()) + " inputs but layer " +
                           std::to_string(i) + " produces " +
                           std::to_string(layers_[i - 1].weight.rows()));
    }
  }
}

Eigen::Index FeedforwardNetwork::n_phi() const {
  Eigen::Index total = 0;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) total += layers_[i].weight.rows();
  return total;
}

Vector FeedforwardNetwork::forward(const Vector& x) const {
  if (x.size() != input_dim()) {
    throw DimensionError("forward: state has dimension " + std::to_string(x.size()) +
                         ", network expects " + std::to_string(input_dim()));
  }
  Vector w = x;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    w = apply(activation_, layers_[i].weight * w + layers_[i].bias);
  }
  return layers_.back().weight * w + layers_.back().bias;
}

Vector FeedforwardNetwork::pre_activations(const Vector& x) const {
  Vector out(n_phi());
  Vector w = x;
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    const Vector v = layers_[i].weight * w + layers_[i].bias;
    out.segment(offset, v.size()) = v;
    offset += v.size();
    w = apply(activation_, v);
  }
  return out;
}

FeedforwardNetwork FeedforwardNetwork::with_output_bias(const Vector& bias) const {
  std::vector<Layer> copy = layers_;
  copy.back().bias = bias;
  return FeedforwardNetwork(std::move(copy), activation_);
}

IsolationMatrices assemble_isolation(const FeedforwardNetwork& net) {
  const Eigen::Index n = net.input_dim();
  const Eigen::Index m = net.output_dim();
  const Eigen::Index nphi = net.n_phi();
  const auto& layers = net.layers();

  IsolationMatrices iso;
  iso.N_vx = Matrix::Zero(nphi, n);
  iso.N_vw = Matrix::Zero(nphi, nphi);
  iso.N_vb = Vector::Zero(nphi);
  iso.N_ux = Matrix::Zero(m, n);
  iso.N_uw = Matrix::Zero(m, nphi);

  Eigen::Index row = 0;
  Eigen::Index prev_col = 0;  // column offset of w^{i-1} inside w_phi
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    const Layer& l = layers[i];
    if (i == 0) {
      iso.N_vx.block(row, 0, l.weight.rows(), n) = l.weight;
    } else {
      iso.N_vw.block(row, prev_col, l.weight.rows(), l.weight.cols()) = l.weight;
      prev_col += l.weight.cols();
    }
    iso.N_vb.segment(row, l.bias.size()) = l.bias;
    row += l.weight.rows();
  }
  const Layer& out = layers.back();
  iso.N_uw.block(0, nphi - out.weight.cols(), m, out.weight.cols()) = out.weight;
  iso.N_ub = out.bias;

  iso.R_V = Matrix::Zero(n + m, n + nphi);
  iso.R_V.topLeftCorner(n, n).setIdentity();
  iso.R_V.bottomLeftCorner(m, n) = iso.N_ux;
  iso.R_V.bottomRightCorner(m, nphi) = iso.N_uw;

  iso.R_phi = Matrix::Zero(2 * nphi, n + nphi);
  iso.R_phi.topLeftCorner(nphi, n) = iso.N_vx;
  iso.R_phi.topRightCorner(nphi, nphi) = iso.N_vw;
  iso.R_phi.bottomRightCorner(nphi, nphi).setIdentity();
  return iso;
}

EquilibriumTuple propagate_equilibrium(const FeedforwardNetwork& net, const Vector& x_star) {
  if (x_star.size() != net.input_dim()) {
    throw DimensionError("propagate_equilibrium: x* has wrong dimension");
  }
  EquilibriumTuple eq;
  eq.x_star = x_star;
  eq.v_star.resize(net.n_phi());
  eq.w_star.resize(net.n_phi());
  Vector w = x_star;
  Eigen::Index offset = 0;
  const auto& layers = net.layers();
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    const Vector v = layers[i].weight * w + layers[i].bias;
    w = apply(net.activation(), v);
    eq.v_star.segment(offset, v.size()) = v;
    eq.w_star.segment(offset, v.size()) = w;
    offset += v.size();
  }
  eq.u_star = layers.back().weight * w + layers.back().bias;
  return eq;
}

double equilibrium_residual(const FeedforwardNetwork& net, const IsolationMatrices& iso,
                            const EquilibriumTuple& eq) {
  const Vector v = iso.N_vx * eq.x_star + iso.N_vw * eq.w_star + iso.N_vb;
  const Vector u = iso.N_ux * eq.x_star + iso.N_uw * eq.w_star + iso.N_ub;
  double r = std::max((v - eq.v_star).lpNorm<Eigen::Infinity>(),
                      (u - eq.u_star).lpNorm<Eigen::Infinity>());
  for (Eigen::Index i = 0; i < eq.v_star.size(); ++i) {
    r = std::max(r, std::abs(net.activation()(eq.v_star(i)) - eq.w_star(i)));
  }
  return r;
}

ZeroEquilibriumResult enforce_zero_equilibrium(const FeedforwardNetwork& net, double tolerance) {
  const Vector u0 = net.forward(Vector::Zero(net.input_dim()));
  if (!u0.allFinite()) throw PreconditionError("controller output at the origin is not finite");
  const double size = u0.lpNorm<Eigen::Infinity>();
  if (size > tolerance) {
    throw PreconditionError("controller output at the origin has magnitude " +
                            std::to_string(size) + " > tolerance " + std::to_string(tolerance) +
                            "; the origin is not plausibly an equilibrium of this controller");
  }
  if (size == 0.0) return {net, Vector::Zero(net.output_dim())};
  FeedforwardNetwork shifted = net.with_output_bias(net.layers().back().bias - u0);
  // Rounding in b - u0 can leave a residual; fold it in once more.
  const Vector again = shifted.forward(Vector::Zero(net.input_dim()));
  if (again.lpNorm<Eigen::Infinity>() != 0.0) {
    shifted = shifted.with_output_bias(shifted.layers().back().bias - again);
  }
  return {shifted, shifted.layers().back().bias - net.layers().back().bias};
}

PreActivationBounds propagate_bounds(const FeedforwardNetwork& net, const Vector& v1_lower,
                                     const Vector& v1_upper, const EquilibriumTuple& eq) {
  const auto& layers = net.layers();
  const Eigen::Index n1 = layers.front().weight.rows();
  if (v1_lower.size() != n1 || v1_upper.size() != n1) {
    throw DimensionError("first-layer box must have " + std::to_string(n1) + " entries");
  }
  const Vector v1_star = eq.v_star.head(n1);
  if ((v1_lower.array() > v1_star.array()).any() || (v1_upper.array() < v1_star.array()).any()) {
    throw PreconditionError("first-layer box does not contain the equilibrium pre-activation v*");
  }
  PreActivationBounds b;
  b.v_lower.resize(net.n_phi());
  b.v_upper.resize(net.n_phi());
  b.v_lower.head(n1) = v1_lower;
  b.v_upper.head(n1) = v1_upper;

  Vector lo = v1_lower, hi = v1_upper;
  Eigen::Index offset = n1;
  const Activation& act = net.activation();
  for (std::size_t i = 1; i + 1 < layers.size(); ++i) {
    Vector w_lo(lo.size()), w_hi(hi.size());
    for (Eigen::Index k = 0; k < lo.size(); ++k) {
      w_lo(k) = act(lo(k));  // every supported activation is nondecreasing
      w_hi(k) = act(hi(k));
    }
    const Matrix& W = layers[i].weight;
    const Matrix Wp = W.cwiseMax(0.0);
    const Matrix Wn = W.cwiseMin(0.0);
    lo = Wp * w_lo + Wn * w_hi + layers[i].bias;
    hi = Wp * w_hi + Wn * w_lo + layers[i].bias;
    b.v_lower.segment(offset, lo.size()) = lo;
    b.v_upper.segment(offset, hi.size()) = hi;
    offset += lo.size();
  }
  return b;
}

Sector sector_bounds(const Activation& act, double v_low, double v_high, double v_star) {
  if (!(v_low < v_high)) {
    throw PreconditionError("sector_bounds needs a nondegenerate interval");
  }
  if (v_star < v_low || v_star > v_high) {
    throw PreconditionError("sector_bounds: v* lies outside [v_low, v_high]");
  }
  Sector s;
  switch (act.kind) {
    case ActivationKind::Tanh:
    case ActivationKind::Sigmoid: {
      // phi' is even and decreasing in |v|.
      const double closest = (v_low <= 0.0 && v_high >= 0.0) ? 0.0
                             : (v_low > 0.0)                  ? v_low
                                                              : v_high;
      const double farthest = std::abs(v_low) > std::abs(v_high) ? v_low : v_high;
      s.beta = act.derivative(closest);
      s.alpha = act.derivative(farthest);
      break;
    }
    case ActivationKind::Relu:
    case ActivationKind::LeakyRelu: {
      const double neg = act.kind == ActivationKind::Relu ? 0.0 : act.slope;
      s.alpha = v_low < 0.0 ? neg : 1.0;
      s.beta = v_high > 0.0 ? 1.0 : neg;
      break;
    }
  }
  if (act.is_odd() && v_star == 0.0 && v_low == -v_high) {
    s.alpha = act(v_high) / v_high;
  }
  return s;
}

}  // namespace nncert
