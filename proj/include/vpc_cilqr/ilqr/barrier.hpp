#pragma once

#include "vpc_cilqr/ilqr/types.hpp"

namespace vpc_cilqr::ilqr {

/// Value and second-order expansion of a stage cost term around (x, u).
struct StageExpansion {
  double value = 0.0;
  Vector lx;
  Vector lu;
  Matrix lxx;
  Matrix lux;
  Matrix luu;

  StageExpansion() = default;
  StageExpansion(int n, int m);

  void set_zero(int n, int m);
};

/// Scalar barrier shape f(s) and its first two derivatives.
struct BarrierScalar {
  double value;
  double slope;
  double curvature;
};

/// Evaluates the barrier shape at scalar s. For ExpLaneCentering, s is the
/// offset change across the transition and the direction is applied here.
BarrierScalar barrier_scalar(const BarrierTerm& term, double s);

/// Scalar the term acts on, as a linear function of (x, u). For
/// ExpLaneCentering this is the selected quantity's change over the step
/// described by `dynamics`; other kinds ignore `dynamics`.
LinearSelector effective_selector(const BarrierTerm& term, const AffineDynamics* dynamics);

/// Adds the term's value, gradient and Hessian (f'' g g') at (x, u) into
/// `out`. For terminal evaluation pass an empty `u` and no dynamics.
/// Throws InfeasiblePoint for LogRange terms at or beyond their bounds.
void accumulate_barrier(const BarrierTerm& term, const AffineDynamics* dynamics, const Vector& x, const Vector& u,
                        StageExpansion& out);

/// Value only; same feasibility contract as accumulate_barrier.
double barrier_value(const BarrierTerm& term, const AffineDynamics* dynamics, const Vector& x, const Vector& u);

}  // namespace vpc_cilqr::ilqr
