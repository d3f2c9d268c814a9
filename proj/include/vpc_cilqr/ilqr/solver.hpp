#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vpc_cilqr/ilqr/barrier.hpp"
#include "vpc_cilqr/ilqr/types.hpp"

namespace vpc_cilqr::ilqr {

/// Propagates x0 through the (possibly per-step) dynamics of `spec`.
Trajectory rollout(const ProblemSpec& spec, const Vector& x0, std::span<const Vector> controls);

/// Single-model convenience overload.
Trajectory rollout(const AffineDynamics& dynamics, const Vector& x0, std::span<const Vector> controls);

/// Running quadratic + barrier cost of one stage, with its expansion.
/// `step` selects the dynamics used by transition terms.
StageExpansion running_expansion(const ProblemSpec& spec, int step, const Vector& x, const Vector& u);
StageExpansion terminal_expansion(const ProblemSpec& spec, const Vector& x);

/// Total objective: running quadratic costs, barrier penalties, terminal cost.
/// Throws InfeasiblePoint when a LogRange barrier is violated along `traj`.
double total_cost(const Trajectory& traj, const ProblemSpec& spec);

struct BackwardPassResult {
  bool success = false;
  GainSchedule gains;
  /// Predicted cost change for step size lambda is lambda * linear + lambda^2 * quadratic.
  double expected_linear = 0.0;
  double expected_quadratic = 0.0;

  double expected_reduction(double lambda) const {
    return -(lambda * expected_linear + lambda * lambda * expected_quadratic);
  }
};

/// Riccati-like sweep over the nominal `traj`. `regularization` is added to the
/// diagonal of O_uu before it is factorized.
BackwardPassResult backward_pass(const Trajectory& traj, const ProblemSpec& spec, double regularization);

/// u_hat = u + lambda k + K (x_hat - x), x_hat re-rolled from x0.
Trajectory forward_pass(const Trajectory& traj, const GainSchedule& gains, double lambda,
                        const ProblemSpec& spec);

struct SolverDiagnostics {
  bool converged = false;
  int iterations = 0;
  int rejected_steps = 0;
  double final_cost = 0.0;
  double final_barrier_t = 0.0;
  double final_regularization = 0.0;
  /// Smallest distance of any LogRange selector to its nearest bound.
  double min_log_margin = 0.0;
  /// Largest ExpOneSided selector value (> 0 means the soft constraint is exceeded).
  double max_soft_violation = 0.0;
  bool warm_start_repaired = false;
  /// Objective after the initial rollout and after every accepted step, paired
  /// with the barrier sharpness it was evaluated at.
  std::vector<double> cost_history;
  std::vector<double> t_history;
};

struct SolveResult {
  Trajectory trajectory;
  GainSchedule gains;
  SolverDiagnostics diagnostics;
};

/// Constrained iLQR with backtracking line search and barrier continuation.
/// Never throws on numerical failure: the best accepted trajectory is returned
/// with `diagnostics.converged == false`.
SolveResult solve(const ProblemSpec& spec, std::optional<std::span<const Vector>> warm_start,
                  const SolverConfig& config = {});

/// Clips control-only LogRange selectors into `fraction` of their interior.
/// Returns true when any control was modified.
bool repair_controls(const ProblemSpec& spec, std::vector<Vector>& controls, double fraction = 0.99);

}  // namespace vpc_cilqr::ilqr
