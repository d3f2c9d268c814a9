#include "vpc_cilqr/ilqr/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vpc_cilqr::ilqr {
namespace {

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.size() == 0 || m.allFinite();
}

[[noreturn]] void reject(const std::string& what) { throw InvalidInput(what); }

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

Vector AffineDynamics::drift() const {
  if (C.cols() == 0) return Vector::Zero(A.rows());
  return C * w;
}

Vector AffineDynamics::step(const Vector& x, const Vector& u) const {
  Vector next = A * x + B * u;
  if (C.cols() > 0) next.noalias() += C * w;
  return next;
}

void AffineDynamics::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) reject("dynamics: A must be square and non-empty, got " + shape(A));
  if (B.rows() != A.rows()) reject("dynamics: B has " + std::to_string(B.rows()) + " rows, expected " +
                                   std::to_string(A.rows()));
  if (B.cols() == 0) reject("dynamics: B must have at least one column");
  if (C.cols() > 0 && C.rows() != A.rows()) reject("dynamics: C rows do not match state dimension");
  if (C.cols() != w.size()) reject("dynamics: disturbance vector length does not match C columns");
  if (!all_finite(A) || !all_finite(B) || !all_finite(C) || !all_finite(w)) reject("dynamics: non-finite entry");
}

AffineDynamics AffineDynamics::linear(Matrix A, Matrix B) {
  AffineDynamics d;
  const auto n = A.rows();
  d.A = std::move(A);
  d.B = std::move(B);
  d.C = Matrix::Zero(n, 0);
  d.w = Vector::Zero(0);
  return d;
}

void QuadraticCost::validate(int n, int m, bool require_control_weight) const {
  if (Q.rows() != n || Q.cols() != n) reject("cost: Q must be " + std::to_string(n) + "x" + std::to_string(n));
  if (x_ref.size() != n) reject("cost: reference state has wrong length");
  if (!all_finite(Q) || !all_finite(x_ref)) reject("cost: non-finite entry");
  if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, Q.norm())) reject("cost: Q not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> qeig(Q, Eigen::EigenvaluesOnly);
  if (qeig.eigenvalues().minCoeff() < -1e-10) reject("cost: Q not positive semidefinite");
  if (!require_control_weight) return;
  if (R.rows() != m || R.cols() != m) reject("cost: R must be " + std::to_string(m) + "x" + std::to_string(m));
  if (!all_finite(R)) reject("cost: non-finite entry in R");
  if ((R - R.transpose()).norm() > 1e-12 * std::max(1.0, R.norm())) reject("cost: R not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> reig(R, Eigen::EigenvaluesOnly);
  if (reig.eigenvalues().minCoeff() <= 0.0) reject("cost: R not positive definite");
}

double LinearSelector::state_part(const Vector& x) const { return state_coeffs.dot(x); }

double LinearSelector::evaluate(const Vector& x, const Vector& u) const {
  double s = state_coeffs.dot(x) + offset;
  if (u.size() > 0 && control_coeffs.size() > 0) s += control_coeffs.dot(u);
  return s;
}

bool LinearSelector::touches_control() const {
  return control_coeffs.size() > 0 && control_coeffs.cwiseAbs().maxCoeff() > 0.0;
}

LinearSelector LinearSelector::state(int n, int index, double scale, double offset, int m) {
  LinearSelector sel;
  sel.state_coeffs = Vector::Zero(n);
  sel.state_coeffs[index] = scale;
  sel.control_coeffs = Vector::Zero(m);
  sel.offset = offset;
  return sel;
}

LinearSelector LinearSelector::control(int n, int m, int index, double scale, double offset) {
  LinearSelector sel;
  sel.state_coeffs = Vector::Zero(n);
  sel.control_coeffs = Vector::Zero(m);
  sel.control_coeffs[index] = scale;
  sel.offset = offset;
  return sel;
}

void BarrierTerm::validate(int n, int m) const {
  if (selector.state_coeffs.size() != n) reject("barrier: selector state coefficients have wrong length");
  if (selector.control_coeffs.size() != 0 && selector.control_coeffs.size() != m)
    reject("barrier: selector control coefficients have wrong length");
  if (!all_finite(selector.state_coeffs) || !all_finite(selector.control_coeffs) || !std::isfinite(selector.offset))
    reject("barrier: non-finite selector");
  if (applies_terminal() && selector.touches_control())
    reject("barrier: terminal barrier cannot depend on the control");
  switch (kind) {
    case BarrierKind::LogRange:
      if (!(lower < upper)) reject("barrier: LogRange needs lower < upper");
      if (!(t > 0.0)) reject("barrier: LogRange needs t > 0");
      break;
    case BarrierKind::ExpOneSided:
      if (!(q1 > 0.0)) reject("barrier: ExpOneSided needs q1 > 0");
      if (!(q2 > 0.0)) reject("barrier: ExpOneSided needs q2 > 0");
      break;
    case BarrierKind::ExpLaneCentering:
      if (!(q1 > 0.0) || !(q2 > 0.0)) reject("barrier: lane-centering needs q1, q2 > 0");
      if (selector.touches_control()) reject("barrier: lane-centering selector must be state-only");
      if (stages != StageMask::Running) reject("barrier: lane-centering acts on transitions, running stages only");
      if (direction != 1.0 && direction != -1.0) reject("barrier: lane-centering direction must be +1 or -1");
      break;
  }
}

BarrierTerm BarrierTerm::log_range(LinearSelector sel, double lower, double upper, double t) {
  BarrierTerm term;
  term.kind = BarrierKind::LogRange;
  term.selector = std::move(sel);
  term.stages = StageMask::Running;
  term.lower = lower;
  term.upper = upper;
  term.t = t;
  return term;
}

BarrierTerm BarrierTerm::exp_one_sided(LinearSelector sel, double q1, double q2, StageMask stages) {
  BarrierTerm term;
  term.kind = BarrierKind::ExpOneSided;
  term.selector = std::move(sel);
  term.stages = stages;
  term.q1 = q1;
  term.q2 = q2;
  return term;
}

BarrierTerm BarrierTerm::exp_lane_centering(LinearSelector sel, double direction, double q1, double q2) {
  BarrierTerm term;
  term.kind = BarrierKind::ExpLaneCentering;
  term.selector = std::move(sel);
  term.stages = StageMask::Running;
  term.direction = direction;
  term.q1 = q1;
  term.q2 = q2;
  return term;
}

void ProblemSpec::validate() const {
  if (horizon < 1) reject("problem: horizon must be >= 1");
  if (dynamics.empty()) reject("problem: no dynamics");
  if (dynamics.size() != 1 && dynamics.size() != static_cast<std::size_t>(horizon))
    reject("problem: need one frozen model or one model per step");
  for (const auto& d : dynamics) d.validate();
  const int n = state_dim();
  const int m = control_dim();
  for (const auto& d : dynamics)
    if (d.state_dim() != n || d.control_dim() != m) reject("problem: per-step models disagree in dimension");
  if (x0.size() != n) reject("problem: x0 has wrong length");
  if (!all_finite(x0)) reject("problem: x0 not finite");
  running.validate(n, m, true);
  terminal.validate(n, m, false);
  for (const auto& b : barriers) b.validate(n, m);
}

void SolverConfig::validate() const {
  if (max_outer_iterations < 1 || max_line_search_steps < 1) reject("solver: iteration caps must be positive");
  if (!(cost_tolerance > 0.0)) reject("solver: cost_tolerance must be positive");
  if (!(lambda_shrink > 0.0 && lambda_shrink < 1.0)) reject("solver: lambda_shrink must be in (0, 1)");
  if (!(lambda_min > 0.0 && lambda_min <= 1.0)) reject("solver: lambda_min must be in (0, 1]");
  if (!(regularization_init > 0.0) || !(regularization_growth > 1.0) || !(regularization_max >= regularization_init))
    reject("solver: invalid regularization schedule");
  if (!(barrier_t_init > 0.0) || !(barrier_t_growth > 1.0) || !(barrier_t_max >= barrier_t_init))
    reject("solver: invalid barrier schedule");
}

}  // namespace vpc_cilqr::ilqr
