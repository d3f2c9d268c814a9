// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "riccati_oracle.hpp"
#include "vpc_cilqr/app/config.hpp"
#include "vpc_cilqr/app/runner.hpp"
#include "vpc_cilqr/lane/lane_geometry.hpp"
#include "vpc_cilqr/planning/lateral_planner.hpp"
#include "vpc_cilqr/planning/longitudinal_planner.hpp"
#include "vpc_cilqr/sim/scenario.hpp"

using namespace vpc_cilqr;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kScenarios = VPC_CILQR_SCENARIO_DIR;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] C%d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Every closed-loop run feeds the constraint audit.
struct Audit {
  std::size_t steer = 0;
  std::size_t jerk = 0;
  std::size_t steer_violations = 0;
  std::size_t jerk_violations = 0;

  void add(const sim::SimLog& log) {
    for (double d : log.emitted_steer_rad) {
      ++steer;
      if (!(std::abs(d) < std::numbers::pi / 6.0)) ++steer_violations;
    }
    for (double j : log.planned_jerks) {
      ++jerk;
      if (!(std::abs(j) < 1.0)) ++jerk_violations;
    }
  }
} audit;

struct TimedRun {
  sim::SimLog log;
  sim::Metrics metrics;
  double wall = 0.0;
};

TimedRun run(sim::ScenarioSpec spec) {
  spec.capture_planner_inputs = true;
  const auto t0 = Clock::now();
  TimedRun r;
  r.log = sim::run_scenario(spec);
  r.wall = seconds_since(t0);
  r.metrics = sim::compute_metrics(r.log);
  audit.add(r.log);
  return r;
}

std::string csv_of(const sim::SimLog& log) {
  std::ostringstream os;
  sim::write_csv(log, os);
  return os.str();
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int r, int c, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double floor) {
  const Eigen::MatrixXd L = random_matrix(rng, n, n, 1.0);
  return L * L.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

void criterion_riccati() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int nonconverged = 0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const int m = 1 + static_cast<int>(rng() % 2);
    const int N = 1 + static_cast<int>(rng() % 50);
    ilqr::ProblemSpec p;
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) + random_matrix(rng, n, n, 0.15);
    const Eigen::MatrixXd B = random_matrix(rng, n, m, 0.5);
    const Eigen::MatrixXd C = random_matrix(rng, n, 1, 0.2);
    p.dynamics = {ilqr::AffineDynamics{A, B, C, Eigen::VectorXd::Ones(1)}};
    p.horizon = N;
    p.running = {random_spd(rng, n, 0.1), random_spd(rng, m, 0.5), random_matrix(rng, n, 1, 1.0)};
    p.terminal = {random_spd(rng, n, 0.1), Eigen::MatrixXd(0, 0), p.running.x_ref};
    p.x0 = random_matrix(rng, n, 1, 1.0);
    const auto sol = oracle::solve_lqr(A, B, C.col(0), p.running.Q, p.running.R, p.terminal.Q, p.running.x_ref, p.x0, N);
    const auto r = ilqr::solve(p, std::nullopt);
    nonconverged += !r.diagnostics.converged;
    for (int i = 0; i < N; ++i)
      worst = std::max(worst, (r.trajectory.controls[i] - sol.controls[i]).cwiseAbs().maxCoeff());
  }
  const double wall = seconds_since(t0);
  report(1, "Riccati equivalence", worst <= 1e-6 && wall < 5.0 && nonconverged == 0,
         "50 problems, max |u - u_oracle| = " + fmt("%.3g", worst) + ", runtime " + fmt("%.3f s", wall) +
             ", nonconverged " + std::to_string(nonconverged));
}

void criterion_derivatives() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  int points = 0;

  auto check = [&](const ilqr::ProblemSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& u, bool terminal) {
    const int n = static_cast<int>(x.size());
    const int m = terminal ? 0 : static_cast<int>(u.size());
    auto expand = [&](const Eigen::VectorXd& z) {
      return terminal ? ilqr::terminal_expansion(spec, z.head(n))
                      : ilqr::running_expansion(spec, 0, z.head(n), z.tail(m));
    };
    auto gradient = [&](const Eigen::VectorXd& z) {
      const auto e = expand(z);
      Eigen::VectorXd g(n + m);
      g.head(n) = e.lx;
      if (m > 0) g.tail(m) = e.lu;
      return g;
    };
    Eigen::VectorXd z(n + m);
    z.head(n) = x;
    if (m > 0) z.tail(m) = u;
    const auto e = expand(z);
    Eigen::MatrixXd H(n + m, n + m);
    H.topLeftCorner(n, n) = e.lxx;
    if (m > 0) {
      H.bottomRightCorner(m, m) = e.luu;
      H.bottomLeftCorner(m, n) = e.lux;
      H.topRightCorner(n, m) = e.lux.transpose();
    }
    const Eigen::VectorXd g = gradient(z);
    const Eigen::VectorXd g_fd = oracle::fd_gradient([&](const Eigen::VectorXd& zz) { return expand(zz).value; }, z, 1e-6);
    Eigen::MatrixXd H_fd(n + m, n + m);
    for (int i = 0; i < n + m; ++i) {
      Eigen::VectorXd zp = z, zm = z;
      zp[i] += 1e-6;
      zm[i] -= 1e-6;
      H_fd.col(i) = (gradient(zp) - gradient(zm)) / 2e-6;
    }
    worst = std::max({worst, oracle::relative_error(g, g_fd), oracle::relative_error(H, H_fd)});
    ++points;
  };

  const auto lat_dyn = planning::build_lateral_dynamics({}, 76.0 / 3.6, 0.05).dynamics;
  for (int i = 0; i < 400; ++i) {
    const planning::LateralState s{1.5 * unit(rng), 0.5 * unit(rng), 0.2 * unit(rng), 0.2 * unit(rng)};
    auto spec = planning::build_lateral_problem(s, lat_dyn);
    for (auto& b : spec.barriers) b.t = std::pow(10.0, 2.0 * (unit(rng) + 1.0));
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.5 * unit(rng));
    check(spec, s.as_vector(), u, false);
    if (i % 4 == 0) check(spec, s.as_vector(), u, true);
  }
  for (int i = 0; i < 400; ++i) {
    const planning::LongitudinalState s{11.0 + 4.0 * unit(rng), 18.0 + 3.0 * unit(rng), 2.0 * unit(rng)};
    const planning::LeadMeasurement lead{s.gap, 17.6 + unit(rng), 0.0};
    auto spec = planning::build_following_problem(s, lead);
    for (auto& b : spec.barriers) b.t = std::pow(10.0, 2.0 * (unit(rng) + 1.0));
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.9 * unit(rng));
    check(spec, s.as_vector(), u, false);
    if (i % 4 == 0) check(spec, s.as_vector(), u, true);
  }
  report(3, "Derivative checks", points >= 1000 && worst < 1e-5,
         std::to_string(points) + " points, max relative error " + fmt("%.3g", worst));
}

void criterion_curvature() {
  double worst = 0.0;
  const double a = 0.005, b = 0.01, c = 1.0;
  lane::LaneMap parabola;
  for (int i = 0; i <= 30; ++i) parabola.points.push_back({double(i), (a * i + b) * i + c});
  const auto fit = lane::fit_lane_polynomial(parabola);
  for (double x = 0.0; fit && x <= 30.0; x += 0.5) {
    const double fp = 2.0 * a * x + b;
    worst = std::max(worst, std::abs(lane::curvature_at(*fit, x) - 2.0 * a / std::pow(1.0 + fp * fp, 1.5)));
  }
  lane::LaneMap circle;
  for (int i = 0; i <= 20; ++i) circle.points.push_back({double(i), 100.0 - std::sqrt(1e4 - double(i * i))});
  const auto cfit = lane::fit_lane_polynomial(circle);
  const double k = cfit ? lane::curvature_at(*cfit, 0.0) : 0.0;
  const double rel = std::abs(k - 0.01) / 0.01;
  report(4, "Curvature oracle", fit && cfit && worst <= 1e-12 && rel <= 0.05,
         "parabola max error " + fmt("%.3g", worst) + ", circle R=100 kappa " + fmt("%.6f", k) + " (" +
             fmt("%.2f", 100.0 * rel) + "% off)");
}

void criterion_vpc() {
  bool ok = true;
  std::string detail;
  lane::LaneMap straight;
  for (int i = 0; i <= 30; ++i) straight.points.push_back({double(i), 0.4 - 0.01 * i});
  const auto s = lane::preview_correction(0.1, lane::fit_lane_polynomial(straight));
  ok &= s.fit_available && s.delta_shift == 0.0 && s.delta_preview == 0.1;
  detail += "straight shift " + fmt("%.3g", s.delta_shift);

  double worst_arc = 0.0;
  for (double radius : {100.0, -100.0, 200.0, -500.0, 1000.0}) {
    lane::LaneMap arc;
    const double r = std::abs(radius);
    for (int i = 0; i <= 30; ++i) arc.points.push_back({double(i), std::copysign(r - std::sqrt(r * r - i * i), radius)});
    const auto p = lane::preview_correction(0.0, lane::fit_lane_polynomial(arc));
    ok &= p.fit_available;
    worst_arc = std::max(worst_arc, std::abs(p.delta_shift));
  }
  ok &= worst_arc < 1e-3;
  detail += ", arc max |shift| " + fmt("%.3g", worst_arc);

  const double pos = lane::apply_vpc(0.2, 0.05);
  const double neg = lane::apply_vpc(-0.3, 0.05);
  const double neg2 = lane::apply_vpc(-0.3, -0.05);
  ok &= std::abs(pos - (0.2 + 0.05 / (std::numbers::pi / 6.0))) < 1e-15;
  ok &= std::abs(neg - (-0.3 - 0.05 / (std::numbers::pi / 6.0))) < 1e-15;
  ok &= neg2 == neg && lane::apply_vpc(0.4, 0.0) == 0.4;
  detail += ", apply_vpc(0.2, 0.05) = " + fmt("%.5f", pos) + ", apply_vpc(-0.3, 0.05) = " + fmt("%.5f", neg);
  report(9, "VPC unit behavior", ok, detail);
}

}  // namespace

int main() {
  criterion_riccati();
  criterion_derivatives();
  criterion_curvature();
  criterion_vpc();

  // Lane keeping on track A with both controllers.
  const auto lk = app::load_scenario(kScenarios + "/track_a_lane_keeping.cfg");
  auto lk_cilqr = lk;
  lk_cilqr.controller = sim::LateralMode::Cilqr;
  auto lk_vpc = lk;
  lk_vpc.controller = sim::LateralMode::VpcCilqr;
  const TimedRun a = run(lk_cilqr);
  const TimedRun b = run(lk_vpc);
  {
    const auto& ma = a.metrics;
    const auto& mb = b.metrics;
    const bool completed = ma.terminal_event == "completed" && mb.terminal_event == "completed";
    const bool band = ma.offset_mae >= 0.02 && ma.offset_mae <= 0.25 && mb.offset_mae >= 0.02 && mb.offset_mae <= 0.25;
    const bool pass = completed && ma.max_abs_offset <= 1.42 &&
                      mb.max_abs_offset_peak_curvature < ma.max_abs_offset_peak_curvature && band && a.wall < 120.0 &&
                      b.wall < 120.0;
    report(5, "Lane keeping (track A, 76 km/h, seed " + std::to_string(lk.seed) + ")", pass,
           "CILQR " + ma.terminal_event + " max|D| " + fmt("%.3f", ma.max_abs_offset) + " at kmax " +
               fmt("%.3f", ma.max_abs_offset_peak_curvature) + " MAE " + fmt("%.4f", ma.offset_mae) + " in " +
               fmt("%.1f s", a.wall) + "; VPC-CILQR " + mb.terminal_event + " max|D| " +
               fmt("%.3f", mb.max_abs_offset) + " at kmax " + fmt("%.3f", mb.max_abs_offset_peak_curvature) +
               " MAE " + fmt("%.4f", mb.offset_mae) + " in " + fmt("%.1f s", b.wall));
  }

  // Car following on track B.
  const auto cf = app::load_scenario(kScenarios + "/track_b_car_following.cfg");
  const TimedRun f = run(cf);
  {
    const auto& m = f.metrics;
    const bool pass = m.terminal_event == "completed" && m.min_gap > 0.0 && std::abs(m.final_speed_error) <= 0.5 &&
                      std::abs(m.final_gap - 11.0) <= 1.5 && m.speed_mae < 3.0 * 0.1971 &&
                      m.gap_mae < 3.0 * 0.4201 && m.following_samples > 0 && f.wall < 60.0;
    report(6, "Car following (track B)", pass,
           m.terminal_event + ", min gap " + fmt("%.2f", m.min_gap) + ", final gap " + fmt("%.2f", m.final_gap) +
               ", final speed error " + fmt("%.3f", m.final_speed_error) + ", v-MAE " + fmt("%.4f", m.speed_mae) +
               " (< 0.5913), D-MAE " + fmt("%.4f", m.gap_mae) + " (< 1.2603), " + fmt("%.1f s", f.wall));
  }

  // Solver timing over recorded closed-loop states.
  {
    const auto lat = app::benchmark_solvers(lk_vpc, b.log, 1000).lateral;
    const auto lon = app::benchmark_solvers(cf, f.log, 1000).longitudinal;
    const bool pass = lat.samples == 1000 && lon.samples == 1000 && lat.mean_ms < 10.0 && lon.mean_ms < 10.0;
    report(7, "Solver timing", pass,
           "lateral " + std::to_string(lat.samples) + " states mean " + fmt("%.3f ms", lat.mean_ms) + " p95 " +
               fmt("%.3f ms", lat.p95_ms) + "; longitudinal " + std::to_string(lon.samples) + " states mean " +
               fmt("%.3f ms", lon.mean_ms) + " p95 " + fmt("%.3f ms", lon.p95_ms));
  }

  // Determinism: rerun car following and a short noisy lane-keeping segment.
  {
    const TimedRun f2 = run(cf);
    auto seg = lk_vpc;
    seg.laps = 0.0;
    seg.duration = 8.0;
    const std::string s1 = csv_of(run(seg).log);
    const std::string s2 = csv_of(run(seg).log);
    const bool same_cf = csv_of(f.log) == csv_of(f2.log);
    report(8, "Determinism", same_cf && s1 == s2 && !s1.empty(),
           std::string("car-following CSV ") + (same_cf ? "identical" : "differs") + ", lane-keeping CSV " +
               (s1 == s2 ? "identical" : "differs"));
  }

  report(2, "Constraint satisfaction", audit.steer > 0 && audit.jerk > 0 && audit.steer_violations == 0 &&
                                           audit.jerk_violations == 0,
         std::to_string(audit.steer) + " steering angles, " + std::to_string(audit.steer_violations) +
             " outside (-pi/6, pi/6); " + std::to_string(audit.jerk) + " planned jerks, " +
             std::to_string(audit.jerk_violations) + " outside (-1, 1)");

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED", failures);
  return failures == 0 ? 0 : 1;
}
