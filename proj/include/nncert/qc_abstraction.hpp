#pragma once

#include "nncert/neural_controller.hpp"
#include "nncert/types.hpp"

namespace nncert {

/// Per-neuron local sectors stacked over all hidden layers.
struct SectorVectors {
  Vector alpha;
  Vector beta;
};

/// Nonnegative quadratic-constraint multipliers, one per neuron.
struct Multiplier {
  Vector lambda;
};

/// Sectors for every hidden neuron from its pre-activation bounds.
SectorVectors compute_sectors(const FeedforwardNetwork& net, const PreActivationBounds& bounds,
                              const EquilibriumTuple& eq);

/// Psi = [[diag(beta), -I], [-diag(alpha), I]]
Matrix build_psi(const SectorVectors& s);

/// M(lambda) = [[0, diag(lambda)], [diag(lambda), 0]]; throws on negative entries.
Matrix build_m(const Multiplier& lam);

/// X(lambda) = R_phi' Psi' M(lambda) Psi R_phi, of size (n + n_phi).
Matrix build_x(const Multiplier& lam, const SectorVectors& s, const IsolationMatrices& iso);

/// Rank-two generator of X(lambda) along lambda_i: X(e_i) = a' b + b' a with
/// a = row i of the top half of Psi R_phi and b = row i of the bottom half.
struct QcGenerator {
  Vector a;
  Vector b;
};
std::vector<QcGenerator> qc_generators(const SectorVectors& s, const IsolationMatrices& iso);

/// Value of the quadratic form of the constraint at the pre-activation v_phi.
double qc_form(const Vector& v_phi, const EquilibriumTuple& eq, const SectorVectors& s,
               const Multiplier& lam, const FeedforwardNetwork& net);

/// qc_form(...) >= -1e-12.
bool qc_satisfied(const Vector& v_phi, const EquilibriumTuple& eq, const SectorVectors& s,
                  const Multiplier& lam, const FeedforwardNetwork& net);

}  // namespace nncert
