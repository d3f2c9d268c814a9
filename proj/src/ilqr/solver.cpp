#include "vpc_cilqr/ilqr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vpc_cilqr::ilqr {
namespace {

void check_controls(const ProblemSpec& spec, std::span<const Vector> controls) {
  if (static_cast<int>(controls.size()) != spec.horizon)
    throw InvalidInput("rollout: expected " + std::to_string(spec.horizon) + " controls, got " +
                       std::to_string(controls.size()));
  const int m = spec.control_dim();
  for (const auto& u : controls) {
    if (u.size() != m) throw InvalidInput("rollout: control has wrong length");
    if (!u.allFinite()) throw InvalidInput("rollout: non-finite control");
  }
}

double quadratic_value(const QuadraticCost& cost, const Vector& x, const Vector& u) {
  const Vector dx = x - cost.x_ref;
  double v = dx.dot(cost.Q * dx);
  if (u.size() > 0) v += u.dot(cost.R * u);
  return v;
}

double running_value(const ProblemSpec& spec, int i, const Vector& x, const Vector& u) {
  double v = quadratic_value(spec.running, x, u);
  for (const auto& b : spec.barriers)
    if (b.applies_running()) v += barrier_value(b, &spec.dynamics_at(i), x, u);
  return v;
}

double terminal_value(const ProblemSpec& spec, const Vector& x) {
  const Vector none;
  double v = quadratic_value(spec.terminal, x, none);
  for (const auto& b : spec.barriers)
    if (b.applies_terminal()) v += barrier_value(b, nullptr, x, none);
  return v;
}

bool has_log_barrier(const ProblemSpec& spec) {
  return std::any_of(spec.barriers.begin(), spec.barriers.end(),
                     [](const BarrierTerm& b) { return b.kind == BarrierKind::LogRange; });
}

void set_barrier_t(ProblemSpec& spec, double t) {
  for (auto& b : spec.barriers)
    if (b.kind == BarrierKind::LogRange) b.t = t;
}

double cost_or_infinity(const Trajectory& traj, const ProblemSpec& spec) {
  try {
    const double j = total_cost(traj, spec);
    return std::isfinite(j) ? j : std::numeric_limits<double>::infinity();
  } catch (const InfeasiblePoint&) {
    return std::numeric_limits<double>::infinity();
  }
}

void fill_margins(const Trajectory& traj, const ProblemSpec& spec, SolverDiagnostics& diag) {
  double margin = std::numeric_limits<double>::infinity();
  double soft = -std::numeric_limits<double>::infinity();
  const Vector none;
  for (const auto& b : spec.barriers) {
    if (b.kind == BarrierKind::ExpLaneCentering) continue;
    auto visit = [&](const Vector& x, const Vector& u) {
      const double s = b.selector.evaluate(x, u);
      if (b.kind == BarrierKind::LogRange)
        margin = std::min(margin, std::min(s - b.lower, b.upper - s));
      else
        soft = std::max(soft, s);
    };
    if (b.applies_running())
      for (int i = 0; i < traj.horizon(); ++i) visit(traj.states[i], traj.controls[i]);
    if (b.applies_terminal()) visit(traj.states.back(), none);
  }
  diag.min_log_margin = margin;
  diag.max_soft_violation = soft;
}

}  // namespace

Trajectory rollout(const ProblemSpec& spec, const Vector& x0, std::span<const Vector> controls) {
  check_controls(spec, controls);
  if (x0.size() != spec.state_dim()) throw InvalidInput("rollout: x0 has wrong length");
  Trajectory traj;
  traj.states.reserve(controls.size() + 1);
  traj.controls.assign(controls.begin(), controls.end());
  traj.states.push_back(x0);
  for (int i = 0; i < spec.horizon; ++i)
    traj.states.push_back(spec.dynamics_at(i).step(traj.states.back(), traj.controls[i]));
  return traj;
}

Trajectory rollout(const AffineDynamics& dynamics, const Vector& x0, std::span<const Vector> controls) {
  dynamics.validate();
  ProblemSpec spec;
  spec.dynamics = {dynamics};
  spec.horizon = static_cast<int>(controls.size());
  if (spec.horizon == 0) {
    if (x0.size() != dynamics.state_dim()) throw InvalidInput("rollout: x0 has wrong length");
    return Trajectory{{x0}, {}};
  }
  return rollout(spec, x0, controls);
}

StageExpansion running_expansion(const ProblemSpec& spec, int i, const Vector& x, const Vector& u) {
  const auto& c = spec.running;
  StageExpansion e(static_cast<int>(x.size()), static_cast<int>(u.size()));
  const Vector dx = x - c.x_ref;
  const Vector Qdx = c.Q * dx;
  const Vector Ru = c.R * u;
  e.value = dx.dot(Qdx) + u.dot(Ru);
  e.lx = 2.0 * Qdx;
  e.lu = 2.0 * Ru;
  e.lxx = 2.0 * c.Q;
  e.luu = 2.0 * c.R;
  for (const auto& b : spec.barriers)
    if (b.applies_running()) accumulate_barrier(b, &spec.dynamics_at(i), x, u, e);
  return e;
}

StageExpansion terminal_expansion(const ProblemSpec& spec, const Vector& x) {
  const auto& c = spec.terminal;
  StageExpansion e(static_cast<int>(x.size()), 0);
  const Vector dx = x - c.x_ref;
  const Vector Qdx = c.Q * dx;
  e.value = dx.dot(Qdx);
  e.lx = 2.0 * Qdx;
  e.lxx = 2.0 * c.Q;
  const Vector none;
  for (const auto& b : spec.barriers)
    if (b.applies_terminal()) accumulate_barrier(b, nullptr, x, none, e);
  return e;
}

double total_cost(const Trajectory& traj, const ProblemSpec& spec) {
  if (traj.horizon() != spec.horizon || traj.states.size() != traj.controls.size() + 1)
    throw InvalidInput("total_cost: trajectory length does not match horizon");
  double j = 0.0;
  for (int i = 0; i < traj.horizon(); ++i)
    j += running_value(spec, i, traj.states[i], traj.controls[i]);
  j += terminal_value(spec, traj.states.back());
  return j;
}

BackwardPassResult backward_pass(const Trajectory& traj, const ProblemSpec& spec, double regularization) {
  const int N = spec.horizon;
  const int n = spec.state_dim();
  const int m = spec.control_dim();
  BackwardPassResult out;
  out.gains.k.assign(N, Vector::Zero(m));
  out.gains.K.assign(N, Matrix::Zero(m, n));

  const StageExpansion term = terminal_expansion(spec, traj.states.back());
  Vector Vx = term.lx;
  Matrix Vxx = term.lxx;

  Vector Ox(n), Ou(m);
  Matrix Oxx(n, n), Oux(m, n), Ouu(m, m), VxxA(n, n);
  Eigen::LLT<Matrix> llt(m);
  for (int i = N - 1; i >= 0; --i) {
    const StageExpansion e = running_expansion(spec, i, traj.states[i], traj.controls[i]);
    const AffineDynamics& f = spec.dynamics_at(i);
    // f_xx, f_ux, f_uu vanish for affine dynamics.
    VxxA.noalias() = Vxx * f.A;
    Ox = e.lx;
    Ox.noalias() += f.A.transpose() * Vx;
    Ou = e.lu;
    Ou.noalias() += f.B.transpose() * Vx;
    Oxx = e.lxx;
    Oxx.noalias() += f.A.transpose() * VxxA;
    Oux = e.lux;
    Oux.noalias() += f.B.transpose() * VxxA;
    Ouu = e.luu;
    Ouu.noalias() += f.B.transpose() * Vxx * f.B;

    Matrix Ouu_reg = 0.5 * (Ouu + Ouu.transpose());
    Ouu_reg.diagonal().array() += regularization;
    llt.compute(Ouu_reg);
    if (llt.info() != Eigen::Success) return out;

    Vector& k = out.gains.k[i];
    Matrix& K = out.gains.K[i];
    k = -llt.solve(Ou);
    K = -llt.solve(Oux);
    if (!k.allFinite() || !K.allFinite()) return out;

    const Vector Ouu_k = Ouu * k;
    Vx = Ox;
    Vx.noalias() -= K.transpose() * Ouu_k;
    Vxx = Oxx;
    Vxx.noalias() -= K.transpose() * Ouu * K;
    Vxx = 0.5 * (Vxx + Vxx.transpose()).eval();

    out.expected_linear += k.dot(Ou);
    out.expected_quadratic += 0.5 * k.dot(Ouu_k);
  }
  out.success = true;
  return out;
}

Trajectory forward_pass(const Trajectory& traj, const GainSchedule& gains, double lambda, const ProblemSpec& spec) {
  const int N = spec.horizon;
  if (traj.horizon() != N || static_cast<int>(gains.k.size()) != N || static_cast<int>(gains.K.size()) != N)
    throw InvalidInput("forward_pass: gain schedule does not match horizon");
  Trajectory out;
  out.states.resize(N + 1);
  out.controls.resize(N);
  out.states[0] = traj.states[0];
  for (int i = 0; i < N; ++i) {
    Vector u = traj.controls[i] + lambda * gains.k[i];
    u.noalias() += gains.K[i] * (out.states[i] - traj.states[i]);
    out.states[i + 1] = spec.dynamics_at(i).step(out.states[i], u);
    out.controls[i] = std::move(u);
  }
  return out;
}

bool repair_controls(const ProblemSpec& spec, std::vector<Vector>& controls, double fraction) {
  bool changed = false;
  const Vector no_state = Vector::Zero(spec.state_dim());
  for (const auto& b : spec.barriers) {
    if (b.kind != BarrierKind::LogRange || !b.applies_running()) continue;
    const auto& sel = b.selector;
    if (!sel.touches_control() || sel.state_coeffs.cwiseAbs().maxCoeff() > 0.0) continue;
    const double center = 0.5 * (b.lower + b.upper);
    const double half = 0.5 * (b.upper - b.lower) * fraction;
    const double norm2 = sel.control_coeffs.squaredNorm();
    for (auto& u : controls) {
      const double s = sel.evaluate(no_state, u);
      const double target = std::clamp(s, center - half, center + half);
      if (target != s) {
        u += sel.control_coeffs * ((target - s) / norm2);
        changed = true;
      }
    }
  }
  return changed;
}

SolveResult solve(const ProblemSpec& spec, std::optional<std::span<const Vector>> warm_start,
                  const SolverConfig& config) {
  spec.validate();
  config.validate();

  ProblemSpec work = spec;
  const bool continuation = has_log_barrier(work);
  double t = continuation ? config.barrier_t_init : config.barrier_t_max;
  set_barrier_t(work, t);

  std::vector<Vector> controls;
  if (warm_start) {
    controls.assign(warm_start->begin(), warm_start->end());
  } else {
    controls.assign(static_cast<std::size_t>(spec.horizon), Vector::Zero(spec.control_dim()));
  }
  SolveResult result;
  SolverDiagnostics& diag = result.diagnostics;
  diag.warm_start_repaired = repair_controls(work, controls);

  Trajectory traj = rollout(work, work.x0, controls);
  double cost = cost_or_infinity(traj, work);
  diag.cost_history.push_back(cost);
  diag.t_history.push_back(t);

  double reg = config.regularization_init;
  GainSchedule gains;
  bool stalled = !std::isfinite(cost);

  while (!stalled && diag.iterations < config.max_outer_iterations) {
    ++diag.iterations;
    const double threshold = config.cost_tolerance * std::max(1.0, std::abs(cost));

    BackwardPassResult bp = backward_pass(traj, work, reg);
    if (!bp.success) {
      reg *= config.regularization_growth;
      if (reg > config.regularization_max) stalled = true;
      continue;
    }
    const bool model_converged = bp.expected_reduction(1.0) < threshold;

    bool accepted = false;
    double improvement = 0.0;
    double lambda = 1.0;
    // A converged model gets a single full-step trial; otherwise backtrack.
    const int trials = model_converged ? 1 : config.max_line_search_steps;
    // Below the tolerance the predicted change is at rounding level, so a
    // candidate that is worse only by rounding still carries the Newton correction.
    const double slack = model_converged ? 1e-12 * std::max(1.0, std::abs(cost)) : 0.0;
    for (int ls = 0; ls < trials && lambda >= config.lambda_min; ++ls) {
      Trajectory candidate = forward_pass(traj, bp.gains, lambda, work);
      const double c = cost_or_infinity(candidate, work);
      if (c < cost || (model_converged && c <= cost + slack)) {
        improvement = cost - c;
        traj = std::move(candidate);
        cost = c;
        accepted = true;
        break;
      }
      ++diag.rejected_steps;
      lambda *= config.lambda_shrink;
    }
    gains = std::move(bp.gains);

    if (accepted) {
      diag.cost_history.push_back(cost);
      diag.t_history.push_back(t);
      reg = std::max(config.regularization_init, reg / config.regularization_growth);
    } else if (!model_converged) {
      reg *= config.regularization_growth;
      if (reg > config.regularization_max) stalled = true;
      continue;
    }

    const bool level_done = model_converged || improvement < threshold;
    if (!level_done) continue;
    if (!continuation || t >= config.barrier_t_max) {
      diag.converged = true;
      break;
    }
    t = std::min(t * config.barrier_t_growth, config.barrier_t_max);
    set_barrier_t(work, t);
    cost = cost_or_infinity(traj, work);
    diag.cost_history.push_back(cost);
    diag.t_history.push_back(t);
    reg = config.regularization_init;
  }

  if (gains.k.empty()) {
    gains.k.assign(static_cast<std::size_t>(spec.horizon), Vector::Zero(spec.control_dim()));
    gains.K.assign(static_cast<std::size_t>(spec.horizon), Matrix::Zero(spec.control_dim(), spec.state_dim()));
  }
  diag.final_cost = cost;
  diag.final_barrier_t = t;
  diag.final_regularization = reg;
  fill_margins(traj, work, diag);
  result.trajectory = std::move(traj);
  result.gains = std::move(gains);
  return result;
}

}  // namespace vpc_cilqr::ilqr
