#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vpc_cilqr::ilqr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when dimensions or values handed to the solver are inconsistent.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a log barrier is evaluated on or outside its boundary.
class InfeasiblePoint : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Discrete-time affine transition x+ = A x + B u + C w.
/// C may have zero columns, in which case w must be empty.
struct AffineDynamics {
  Matrix A;
  Matrix B;
  Matrix C;
  Vector w;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int control_dim() const { return static_cast<int>(B.cols()); }

  /// Constant part C w (zero when no disturbance is attached).
  Vector drift() const;

  Vector step(const Vector& x, const Vector& u) const;

  /// Throws InvalidInput on mismatched shapes or non-finite entries.
  void validate() const;

  static AffineDynamics linear(Matrix A, Matrix B);
};

/// Quadratic tracking weight: (x - x_ref)' Q (x - x_ref) + u' R u.
struct QuadraticCost {
  Matrix Q;
  Matrix R;
  Vector x_ref;

  void validate(int n, int m, bool require_control_weight) const;
};

/// Scalar s = state_coeffs' x + control_coeffs' u + offset.
struct LinearSelector {
  Vector state_coeffs;
  Vector control_coeffs;
  double offset = 0.0;

  double state_part(const Vector& x) const;
  double evaluate(const Vector& x, const Vector& u) const;
  bool touches_control() const;

  static LinearSelector state(int n, int index, double scale = 1.0, double offset = 0.0, int m = 0);
  static LinearSelector control(int n, int m, int index, double scale = 1.0, double offset = 0.0);
};

enum class BarrierKind {
  /// -(1/t) [ln(s - lower) + ln(upper - s)], two one-sided log barriers.
  LogRange,
  /// q1 exp(q2 s), penalizes s > 0 softly.
  ExpOneSided,
  /// q1 exp(q2 * direction * (s_{i+1} - s_i)) for every transition. The
  /// successor is substituted through the stage dynamics, so the term is an
  /// exact function of (x_i, u_i). Running stages only.
  ExpLaneCentering,
};

enum class StageMask { Running, Terminal, Both };

struct BarrierTerm {
  BarrierKind kind = BarrierKind::LogRange;
  LinearSelector selector;
  StageMask stages = StageMask::Running;
  double lower = 0.0;
  double upper = 0.0;
  double t = 1.0;
  double q1 = 1.0;
  double q2 = 1.0;
  double direction = 1.0;

  bool applies_running() const { return stages != StageMask::Terminal; }
  bool applies_terminal() const { return stages != StageMask::Running; }

  void validate(int n, int m) const;

  static BarrierTerm log_range(LinearSelector sel, double lower, double upper, double t = 1.0);
  static BarrierTerm exp_one_sided(LinearSelector sel, double q1, double q2,
                                   StageMask stages = StageMask::Both);
  static BarrierTerm exp_lane_centering(LinearSelector sel, double direction, double q1, double q2);
};

/// Optimal-control problem over a horizon of `horizon` steps.
/// `dynamics` holds either one frozen model or exactly `horizon` per-step models.
struct ProblemSpec {
  std::vector<AffineDynamics> dynamics;
  int horizon = 1;
  QuadraticCost running;
  QuadraticCost terminal;
  std::vector<BarrierTerm> barriers;
  Vector x0;

  const AffineDynamics& dynamics_at(int step) const {
    return dynamics.size() == 1 ? dynamics.front() : dynamics[static_cast<std::size_t>(step)];
  }
  int state_dim() const { return dynamics.front().state_dim(); }
  int control_dim() const { return dynamics.front().control_dim(); }

  void validate() const;
};

struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> controls;

  int horizon() const { return static_cast<int>(controls.size()); }
};

struct GainSchedule {
  std::vector<Vector> k;
  std::vector<Matrix> K;
};

struct SolverConfig {
  int max_outer_iterations = 40;
  int max_line_search_steps = 14;
  double cost_tolerance = 1e-4;
  double lambda_shrink = 0.5;
  double lambda_min = 1e-4;
  double regularization_init = 1e-6;
  double regularization_growth = 10.0;
  double regularization_max = 1e2;
  double barrier_t_init = 1.0;
  double barrier_t_growth = 5.0;
  double barrier_t_max = 1e4;

  void validate() const;
};

}  // namespace vpc_cilqr::ilqr
