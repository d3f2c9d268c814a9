#include "vpc_cilqr/ilqr/barrier.hpp"

#include <cmath>
#include <string>

namespace vpc_cilqr::ilqr {

StageExpansion::StageExpansion(int n, int m) { set_zero(n, m); }

void StageExpansion::set_zero(int n, int m) {
  value = 0.0;
  lx.setZero(n);
  lu.setZero(m);
  lxx.setZero(n, n);
  lux.setZero(m, n);
  luu.setZero(m, m);
}

BarrierScalar barrier_scalar(const BarrierTerm& term, double s) {
  switch (term.kind) {
    case BarrierKind::LogRange: {
      const double lo_gap = s - term.lower;
      const double hi_gap = term.upper - s;
      if (!(lo_gap > 0.0) || !(hi_gap > 0.0)) {
        throw InfeasiblePoint("log barrier evaluated outside (" + std::to_string(term.lower) + ", " +
                              std::to_string(term.upper) + ") at " + std::to_string(s));
      }
      const double inv_t = 1.0 / term.t;
      return {-inv_t * (std::log(lo_gap) + std::log(hi_gap)), -inv_t * (1.0 / lo_gap - 1.0 / hi_gap),
              inv_t * (1.0 / (lo_gap * lo_gap) + 1.0 / (hi_gap * hi_gap))};
    }
    case BarrierKind::ExpOneSided: {
      const double e = term.q1 * std::exp(term.q2 * s);
      return {e, term.q2 * e, term.q2 * term.q2 * e};
    }
    case BarrierKind::ExpLaneCentering: {
      // dir^2 == 1, so the curvature carries no sign.
      const double e = term.q1 * std::exp(term.q2 * term.direction * s);
      return {e, term.q2 * term.direction * e, term.q2 * term.q2 * e};
    }
  }
  return {0.0, 0.0, 0.0};
}

LinearSelector effective_selector(const BarrierTerm& term, const AffineDynamics* dynamics) {
  if (term.kind != BarrierKind::ExpLaneCentering) return term.selector;
  if (dynamics == nullptr) throw InvalidInput("lane-centering barrier needs the stage dynamics");
  // c' (A x + B u + drift) - c' x
  const Vector& c = term.selector.state_coeffs;
  LinearSelector sel;
  sel.state_coeffs = dynamics->A.transpose() * c - c;
  sel.control_coeffs = dynamics->B.transpose() * c;
  const Vector drift = dynamics->drift();
  sel.offset = drift.size() > 0 ? c.dot(drift) : 0.0;
  return sel;
}

void accumulate_barrier(const BarrierTerm& term, const AffineDynamics* dynamics, const Vector& x, const Vector& u,
                        StageExpansion& out) {
  const LinearSelector sel = effective_selector(term, dynamics);
  const BarrierScalar f = barrier_scalar(term, sel.evaluate(x, u));
  const Vector& gx = sel.state_coeffs;
  out.value += f.value;
  out.lx.noalias() += f.slope * gx;
  out.lxx.noalias() += f.curvature * gx * gx.transpose();
  if (u.size() > 0 && sel.touches_control()) {
    const Vector& gu = sel.control_coeffs;
    out.lu.noalias() += f.slope * gu;
    out.luu.noalias() += f.curvature * gu * gu.transpose();
    out.lux.noalias() += f.curvature * gu * gx.transpose();
  }
}

double barrier_value(const BarrierTerm& term, const AffineDynamics* dynamics, const Vector& x, const Vector& u) {
  return barrier_scalar(term, effective_selector(term, dynamics).evaluate(x, u)).value;
}

}  // namespace vpc_cilqr::ilqr
