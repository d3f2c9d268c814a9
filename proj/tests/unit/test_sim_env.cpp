#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "vpc_cilqr/sim/scenario.hpp"

using namespace vpc_cilqr;
using namespace vpc_cilqr::sim;

namespace {

std::string csv_of(const SimLog& log) {
  std::ostringstream out;
  write_csv(log, out);
  return out.str();
}

ScenarioSpec short_noisy_run() {
  ScenarioSpec spec;
  spec.track = "trackA";
  spec.start_s = 100.0;
  spec.duration = 4.0;
  spec.noise = {0.005, 0.03, 0.02};
  spec.lead.enabled = true;
  spec.lead.initial_gap = 25.0;
  spec.seed = 99;
  return spec;
}

}  // namespace

TEST(Track, PresetStatistics) {
  const auto a = TrackGeometry::preset("trackA");
  EXPECT_NEAR(a.length(), 2843.0, 1.0);
  EXPECT_GE(a.max_abs_curvature(), 0.029);
  EXPECT_LE(a.max_abs_curvature(), 0.031);
  EXPECT_EQ(a.lane_width(), 4.0);
  EXPECT_LT(a.closure_error(), 1.0);

  const auto b = TrackGeometry::preset("trackB");
  EXPECT_NEAR(b.length(), 3919.0, 1.0);
  EXPECT_GE(b.max_abs_curvature(), 0.049);
  EXPECT_LE(b.max_abs_curvature(), 0.051);
  EXPECT_LT(b.closure_error(), 1.0);
}

TEST(Track, CurvatureIsContinuousAndBounded) {
  for (const char* name : {"trackA", "trackB"}) {
    const auto t = TrackGeometry::preset(name);
    double prev = t.curvature(0.0);
    for (double s = 0.05; s <= t.length(); s += 0.05) {
      const double k = t.curvature(s);
      EXPECT_LE(std::abs(k), t.max_abs_curvature() + 1e-12);
      // Clothoid ramps bound the change per 5 cm well below 1e-3.
      ASSERT_LT(std::abs(k - prev), 1e-3) << name << " s = " << s;
      prev = k;
    }
    EXPECT_NEAR(t.curvature(t.length()), t.curvature(0.0), 1e-9);
  }
}

TEST(Track, StraightAndCircle) {
  const auto st = TrackGeometry::preset("straight");
  for (double s = 0.0; s < 5000.0; s += 37.0) EXPECT_EQ(st.curvature(s), 0.0);

  const auto c = TrackGeometry::preset("circle100");
  EXPECT_NEAR(c.length(), 2.0 * std::numbers::pi * 100.0, 1e-9);
  for (double s = 0.0; s < c.length(); s += 11.0) EXPECT_DOUBLE_EQ(c.curvature(s), 0.01);
  EXPECT_LT(c.closure_error(), 1e-6);
}

TEST(Track, RejectsDiscontinuousProfiles) {
  EXPECT_THROW(TrackGeometry::from_segments({{100.0, 0.0, 0.0}, {50.0, 0.02, 0.02}}, 4.0, false),
               std::invalid_argument);
  EXPECT_THROW(TrackGeometry::from_segments({{-1.0, 0.0, 0.0}}, 4.0, false), std::invalid_argument);
  EXPECT_THROW(TrackGeometry::preset("trackZ"), std::invalid_argument);
  EXPECT_NO_THROW(TrackGeometry::from_segments({{100.0, 0.0, 0.0}, {50.0, 0.0, 0.02}, {20.0, 0.02, 0.02}}, 4.0, false));
}

TEST(Track, FrenetRoundTrip) {
  const auto t = TrackGeometry::preset("trackB");
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> s(0.0, t.length()), off(-2.0, 2.0), hd(-0.3, 0.3), guess(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const FrenetPose f{s(rng), off(rng), hd(rng)};
    const FrenetPose back = t.project(t.to_global(f), f.s + guess(rng));
    ASSERT_NEAR(back.s, f.s, 1e-6);
    ASSERT_NEAR(back.offset, f.offset, 1e-6);
    ASSERT_NEAR(back.heading, f.heading, 1e-6);
  }
}

TEST(Plant, ZeroSteerStaysCentered) {
  const auto track = TrackGeometry::straight();
  PlantState x;
  x.speed = 20.0;
  for (int i = 0; i < 10000; ++i) x = step_plant(x, {}, track, PlantParams{}, 1e-3);
  EXPECT_LT(std::abs(x.offset), 1e-9);
  EXPECT_LT(std::abs(x.heading), 1e-9);
}

TEST(Plant, ZeroCommandsKeepSpeed) {
  const auto track = TrackGeometry::preset("trackA");
  PlantState x;
  x.speed = 21.0;
  for (int i = 0; i < 5000; ++i) x = step_plant(x, {}, track, PlantParams{}, 1e-3);
  EXPECT_EQ(x.speed, 21.0);
}

TEST(Plant, AccelMap) {
  const auto track = TrackGeometry::straight();
  PlantState x;
  x.speed = 20.0;
  for (int i = 0; i < 1000; ++i) x = step_plant(x, {0.0, 0.5, 0.0}, track, PlantParams{}, 1e-3);
  EXPECT_NEAR(x.speed, 22.5, 1e-9);
  EXPECT_EQ(commanded_accel({0.0, 2.0, 0.0}, PlantParams{}), 5.0);
  EXPECT_EQ(commanded_accel({0.0, 0.0, 1.0}, PlantParams{}), -8.0);
}

TEST(Plant, SteadyStateYawRateMatchesUndersteerGradient) {
  const auto track = TrackGeometry::straight();
  const PlantParams p;
  const auto& veh = p.vehicle;
  const double L = veh.wheelbase();
  // Axle cornering stiffness is 2 C_alpha (two tires per axle).
  const double k_us = veh.mass / L * (veh.l_rear / (2.0 * veh.c_alpha_front) - veh.l_front / (2.0 * veh.c_alpha_rear));
  for (double v : {10.0, 20.0, 30.0}) {
    for (double delta : {0.01, -0.02}) {
      PlantState x;
      x.speed = v;
      for (int i = 0; i < 5000; ++i) x = step_plant(x, {delta, 0.0, 0.0}, track, p, 1e-3);
      const double oracle = v * delta / (L + k_us * v * v);
      EXPECT_NEAR(x.yaw_rate, oracle, 0.1 * std::abs(oracle)) << "v = " << v << " delta = " << delta;
    }
  }
}

TEST(Plant, RejectsLargeStep) {
  EXPECT_THROW(step_plant({}, {}, TrackGeometry::straight(), PlantParams{}, 5e-3), std::invalid_argument);
}

TEST(Perception, NoiselessEqualsTruth) {
  const auto track = TrackGeometry::preset("trackA");
  PerceptionModel model({}, 3);
  PlantState x;
  x.s = 500.0;
  x.offset = 0.4;
  x.heading = -0.05;
  const Perception p = model.perceive(x, track, 1234);
  EXPECT_EQ(p.offset, 0.4);
  EXPECT_EQ(p.heading, -0.05);
  EXPECT_EQ(p.captured, 1234);
}

TEST(Perception, StraightLaneInEgoFrame) {
  const auto track = TrackGeometry::straight();
  PlantState x;
  x.s = 100.0;
  x.offset = 0.7;
  const auto map = sample_lane_map(x, track, {});
  ASSERT_EQ(map.points.size(), 31u);
  for (std::size_t i = 0; i < map.points.size(); ++i) {
    EXPECT_NEAR(map.points[i].x, static_cast<double>(i), 1e-9);
    EXPECT_NEAR(map.points[i].y, -0.7, 1e-9);
  }
}

TEST(Perception, LaneSamplesOnArcMatchGeometry) {
  const auto track = TrackGeometry::circle(100.0);
  PlantState x;
  x.s = 50.0;
  const auto map = sample_lane_map(x, track, {});
  for (const auto& p : map.points) {
    // Ego at the circle's edge facing along the tangent: centre at (0, 100).
    EXPECT_NEAR(std::hypot(p.x, p.y - 100.0), 100.0, 1e-6);
  }
}

TEST(Perception, NoiseStandardDeviation) {
  const auto track = TrackGeometry::straight();
  PerceptionModel model({0.0, 0.05, 0.0}, 17);
  PlantState x;
  x.s = 10.0;
  double sum = 0.0, sum2 = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double e = model.perceive(x, track, i).offset;
    sum += e;
    sum2 += e * e;
  }
  const double mean = sum / n;
  const double sd = std::sqrt((sum2 - n * mean * mean) / (n - 1));
  EXPECT_GE(sd, 0.045);
  EXPECT_LE(sd, 0.055);
}

TEST(Radar, Readout) {
  PlantState ego;
  ego.s = 100.0;
  const auto m = radar_measure(ego, 120.0, 18.0);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->gap, 20.0);
  EXPECT_EQ(m->speed, 18.0);
  EXPECT_FALSE(radar_measure(ego, 90.0, 18.0));
  EXPECT_FALSE(radar_measure(ego, 261.0, 18.0));
  EXPECT_TRUE(radar_measure(ego, 259.0, 18.0));
}

TEST(Lead, PositionIsSpeedIntegral) {
  const LeadVehicle lead{40.0, 17.6, 0.14, 20.0};
  // Composite Simpson over [0, 37] s with fine steps as the oracle.
  const int n = 37000;
  const double h = 37.0 / n;
  double integral = lead.speed(0.0) + lead.speed(37.0);
  for (int i = 1; i < n; ++i) integral += (i % 2 ? 4.0 : 2.0) * lead.speed(i * h);
  integral *= h / 3.0;
  EXPECT_NEAR(lead.position(37.0) - lead.position(0.0), integral, 1e-9);
  EXPECT_EQ(lead.position(0.0), 40.0);
}

TEST(LatencyQueueTest, ReleasesInOrder) {
  LatencyQueue<int> q;
  q.push(10, 1);
  q.push(10, 2);
  q.push(20, 3);
  EXPECT_FALSE(q.pop_ready(9));
  EXPECT_EQ(*q.pop_ready(10), 1);
  EXPECT_EQ(*q.pop_ready(10), 2);
  EXPECT_FALSE(q.pop_ready(19));
  EXPECT_EQ(*q.next_ready(), 20);
  EXPECT_THROW(q.push(5, 4), std::logic_error);
}

TEST(Scenario, StraightRunStaysCentered) {
  ScenarioSpec spec;
  spec.track = "straight";
  spec.duration = 10.0;
  spec.longitudinal = false;
  const SimLog log = run_scenario(spec);
  EXPECT_EQ(log.terminal_event, "completed");
  const Metrics m = compute_metrics(log);
  EXPECT_LT(m.max_abs_offset, 0.05);
  EXPECT_EQ(m.samples, 10001u);
}

TEST(Scenario, ActuationLatencyIsExact) {
  for (Micros latency : {Micros{6660}, Micros{3000}}) {
    ScenarioSpec spec = short_noisy_run();
    spec.latency.actuation_latency = latency;
    const SimLog log = run_scenario(spec);
    ASSERT_FALSE(log.actuations.empty());
    for (const auto& a : log.actuations) ASSERT_EQ(a.applied - a.issued, latency);
    // The plant sees each command only from its application time on.
    std::size_t next = 0;
    double acting = 0.0;
    for (const auto& r : log.rows) {
      while (next < log.actuations.size() && log.actuations[next].applied <= r.time) acting = log.actuations[next++].steer_cmd;
      ASSERT_EQ(r.steer_applied, planning::steer_angle(acting) / planning::kMaxSteer) << "t = " << r.time;
    }
  }
}

TEST(Scenario, LogIsUniformInTime) {
  const SimLog log = run_scenario(short_noisy_run());
  ASSERT_GT(log.rows.size(), 2u);
  for (std::size_t i = 1; i < log.rows.size(); ++i) ASSERT_EQ(log.rows[i].time - log.rows[i - 1].time, 1000);
  EXPECT_TRUE(log.rows.front().event.starts_with("start"));
}

TEST(Scenario, DeterministicForEqualSeeds) {
  const std::string a = csv_of(run_scenario(short_noisy_run()));
  const std::string b = csv_of(run_scenario(short_noisy_run()));
  EXPECT_EQ(a, b);
  ScenarioSpec other = short_noisy_run();
  other.seed = 100;
  EXPECT_NE(a, csv_of(run_scenario(other)));
}

TEST(Scenario, CsvHeaderAndLayout) {
  ScenarioSpec spec;
  spec.duration = 0.01;
  const std::string csv = csv_of(run_scenario(spec));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 12);
  EXPECT_EQ(line.substr(0, 6), "0.000,");
}

TEST(Scenario, RejectsInvalidSpec) {
  ScenarioSpec spec;
  spec.cruise_speed = -1.0;
  EXPECT_THROW(run_scenario(spec), std::invalid_argument);
}

TEST(Scenario, EveryEmittedCommandIsInsideBounds) {
  const SimLog log = run_scenario(short_noisy_run());
  ASSERT_FALSE(log.emitted_steer_rad.empty());
  ASSERT_FALSE(log.planned_jerks.empty());
  for (double d : log.emitted_steer_rad) ASSERT_LT(std::abs(d), std::numbers::pi / 6.0);
  for (double j : log.planned_jerks) ASSERT_LT(std::abs(j), 1.0);
}

TEST(Metrics, ConstantOffsetLog) {
  SimLog log;
  for (int i = 0; i < 100; ++i) {
    SimRow r;
    r.time = i * 1000;
    r.truth.offset = 0.1;
    log.rows.push_back(r);
  }
  const Metrics m = compute_metrics(log);
  EXPECT_NEAR(m.offset_mae, 0.1, 1e-15);
  EXPECT_EQ(m.heading_mae, 0.0);
  EXPECT_EQ(m.max_abs_offset, 0.1);
}

TEST(Metrics, ReferenceLogIsZero) {
  SimLog log;
  for (int i = 0; i < 100; ++i) {
    SimRow r;
    r.time = i * 1000;
    r.truth.s = i * 0.02;
    r.truth.speed = 17.0;
    r.has_lead = true;
    r.following = true;
    r.gap = log.ref_gap;
    r.lead_speed = 17.0;
    log.rows.push_back(r);
  }
  const Metrics m = compute_metrics(log);
  EXPECT_EQ(m.offset_mae, 0.0);
  EXPECT_EQ(m.heading_mae, 0.0);
  EXPECT_EQ(m.speed_mae, 0.0);
  EXPECT_EQ(m.gap_mae, 0.0);
  EXPECT_EQ(m.following_samples, 100u);
}
