#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "vpc_cilqr/lane/lane_geometry.hpp"

using namespace vpc_cilqr::lane;

namespace {

LaneMap sample(double (*f)(double), double x0 = 0.0, double x1 = 30.0, double step = 1.0) {
  LaneMap m;
  for (double x = x0; x <= x1 + 1e-12; x += step) m.points.push_back({x, f(x)});
  return m;
}

// Centerline of a circular arc tangent to the ego x axis, curving left for R > 0.
LaneMap arc(double radius, double x1 = 30.0, double sigma = 0.0, std::mt19937_64* rng = nullptr) {
  LaneMap m;
  std::normal_distribution<double> noise(0.0, sigma);
  const double r = std::abs(radius);
  for (double x = 0.0; x <= x1 + 1e-12; x += 1.0) {
    double y = r - std::sqrt(r * r - x * x);
    if (radius < 0.0) y = -y;
    if (rng) y += noise(*rng);
    m.points.push_back({x, y});
  }
  return m;
}

}  // namespace

TEST(Averaging, IdenticalMapsUnchanged) {
  const LaneMap m = arc(150.0);
  const std::vector<LaneMap> window(8, m);
  const LaneMap avg = average_lane_maps(window);
  ASSERT_EQ(avg.points.size(), m.points.size());
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    EXPECT_NEAR(avg.points[i].x, m.points[i].x, 1e-12);
    EXPECT_NEAR(avg.points[i].y, m.points[i].y, 1e-12);
  }
}

TEST(Averaging, OppositeOffsetsCancel) {
  LaneMap up, down;
  for (int i = 0; i <= 30; ++i) {
    up.points.push_back({double(i), 0.1});
    down.points.push_back({double(i), -0.1});
  }
  up.timestamp = 1.0;
  down.timestamp = 2.0;
  const std::vector<LaneMap> window = {up, down};
  const LaneMap avg = average_lane_maps(window);
  for (const auto& p : avg.points) EXPECT_NEAR(p.y, 0.0, 1e-15);
  EXPECT_EQ(avg.timestamp, 2.0);
}

TEST(Averaging, EmptyWindowRejected) {
  EXPECT_THROW(average_lane_maps(std::span<const LaneMap>{}), std::invalid_argument);
}

TEST(Averaging, EightFramesBeatOneOnNoisyArcs) {
  const double radius = 100.0;
  std::vector<double> single_k, avg_k;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<LaneMap> frames;
    for (int k = 0; k < 8; ++k) frames.push_back(arc(radius, 30.0, 0.05, &rng));
    const auto single = fit_lane_polynomial(frames.front());
    const auto avg = fit_lane_polynomial(average_lane_maps(frames));
    ASSERT_TRUE(single && avg);
    single_k.push_back(curvature_at(*single, 0.0));
    avg_k.push_back(curvature_at(*avg, 0.0));
  }
  auto mse = [&](const std::vector<double>& k) {
    double s = 0.0;
    for (double v : k) s += (v - 1.0 / radius) * (v - 1.0 / radius);
    return s / static_cast<double>(k.size());
  };
  auto variance = [](const std::vector<double>& k) {
    double mean = 0.0;
    for (double v : k) mean += v;
    mean /= static_cast<double>(k.size());
    double s = 0.0;
    for (double v : k) s += (v - mean) * (v - mean);
    return s / static_cast<double>(k.size() - 1);
  };
  EXPECT_LT(mse(avg_k), mse(single_k));
  // The quadratic-vs-arc bias is common to both fits; the noise part should
  // shrink about 8x with 8 frames. A factor 4 leaves room for sampling spread.
  EXPECT_LT(variance(avg_k), 0.25 * variance(single_k));
}

TEST(Fit, StraightLane) {
  const auto p = fit_lane_polynomial(sample([](double) { return 2.0; }));
  ASSERT_TRUE(p);
  EXPECT_NEAR(p->a, 0.0, 1e-12);
  EXPECT_NEAR(p->b, 0.0, 1e-12);
  EXPECT_NEAR(p->c, 2.0, 1e-12);
  EXPECT_NEAR(p->residual_rms, 0.0, 1e-12);
  for (double x = 0.0; x <= 30.0; x += 2.5) EXPECT_NEAR(curvature_at(*p, x), 0.0, 1e-9);
}

TEST(Fit, ExactParabolaRecovered) {
  const auto p = fit_lane_polynomial(sample([](double x) { return 0.005 * x * x + 0.01 * x + 1.0; }));
  ASSERT_TRUE(p);
  EXPECT_NEAR(p->a, 0.005, 1e-9);
  EXPECT_NEAR(p->b, 0.01, 1e-9);
  EXPECT_NEAR(p->c, 1.0, 1e-9);
}

TEST(Fit, CircleCurvatureNearApex) {
  const auto p = fit_lane_polynomial(arc(100.0, 20.0));
  ASSERT_TRUE(p);
  EXPECT_NEAR(curvature_at(*p, 0.0), 0.01, 0.05 * 0.01);
}

TEST(Fit, DegenerateInputsRefused) {
  LaneMap few = sample([](double) { return 0.0; }, 0.0, 4.0);
  EXPECT_FALSE(fit_lane_polynomial(few));  // 5 points
  LaneMap narrow;
  for (int i = 0; i < 10; ++i) narrow.points.push_back({10.0 + 0.4 * i, 0.0});
  EXPECT_FALSE(fit_lane_polynomial(narrow));  // 3.6 m span
  LaneMap same_x;
  for (int i = 0; i < 10; ++i) same_x.points.push_back({5.0, double(i)});
  EXPECT_FALSE(fit_lane_polynomial(same_x));
}

TEST(Curvature, ParabolaOracle) {
  LanePolynomial p{0.005, 0.0, 0.0, 0.0, 30.0, 0.0};
  EXPECT_DOUBLE_EQ(curvature_at(p, 0.0), 0.01);
  EXPECT_NEAR(curvature_at(p, 10.0), 0.01 / std::pow(1.01, 1.5), 1e-15);
  EXPECT_NEAR(curvature_at(p, 10.0), 0.009851, 1e-6);

  LanePolynomial line{0.0, 0.3, -1.0, 0.0, 30.0, 0.0};
  for (double x = 0.0; x <= 30.0; x += 3.0) EXPECT_EQ(curvature_at(line, x), 0.0);
}

TEST(Curvature, FittedParabolaExactEverywhere) {
  const double a = -0.0037, b = 0.021, c = 0.4;
  LaneMap m;
  for (int i = 0; i <= 30; ++i) m.points.push_back({double(i), (a * i + b) * i + c});
  const auto p = fit_lane_polynomial(m);
  ASSERT_TRUE(p);
  for (double x = 0.0; x <= 30.0; x += 0.25) {
    const double fp = 2.0 * a * x + b;
    const double oracle = 2.0 * a / ((1.0 + fp * fp) * std::sqrt(1.0 + fp * fp));
    EXPECT_NEAR(curvature_at(*p, x), oracle, 1e-12) << "x = " << x;
  }
}

TEST(Curvature, ExtrapolationRefused) {
  LanePolynomial p{0.005, 0.0, 0.0, 0.0, 30.0, 0.0};
  EXPECT_THROW(curvature_at(p, -1.0), ExtrapolationRefused);
  EXPECT_THROW(curvature_at(p, 30.5), ExtrapolationRefused);
}

TEST(Preview, StraightLaneGivesNoShift) {
  const auto p = fit_lane_polynomial(sample([](double x) { return 0.3 - 0.02 * x; }));
  const PreviewCorrection c = preview_correction(0.1, p);
  EXPECT_TRUE(c.fit_available);
  EXPECT_NEAR(c.delta_shift, 0.0, 1e-12);
  EXPECT_NEAR(c.delta_preview, 0.1, 1e-12);
}

TEST(Preview, ShiftFromCurvatureStep) {
  // kappa_0 = 0 and kappa_1 = 0.01 with the default gain 2.64.
  VpcConfig cfg;
  EXPECT_NEAR(std::atan(cfg.gain * 0.01) - std::atan(0.0), std::atan(0.0264), 1e-15);
  EXPECT_NEAR(std::atan(0.0264), 0.02639, 1e-5);
  // A quadratic cannot be flat at x = 0 and curved at x = L, so the
  // composition itself is checked on a parabola.
  LanePolynomial p{0.005, 0.0, 0.0, 0.0, 30.0, 0.0};
  const PreviewCorrection c = preview_correction(0.0, p, cfg);
  EXPECT_NEAR(c.delta_shift, std::atan(2.64 * 0.01 / std::pow(1.01, 1.5)) - std::atan(2.64 * 0.01), 1e-15);
}

TEST(Preview, ConstantCurvatureArcHasTinyShift) {
  for (double radius : {100.0, -100.0, 200.0, 500.0}) {
    const PreviewCorrection c = preview_correction(0.05, fit_lane_polynomial(arc(radius)));
    EXPECT_TRUE(c.fit_available);
    EXPECT_LT(std::abs(c.delta_shift), 1e-3) << "R = " << radius;
  }
}

TEST(Preview, MissingOrPoorFitGivesZeroShift) {
  EXPECT_EQ(preview_correction(0.2, std::nullopt).delta_shift, 0.0);
  LanePolynomial noisy{0.01, 0.0, 0.0, 0.0, 30.0, 0.5};
  EXPECT_EQ(preview_correction(0.2, noisy).delta_shift, 0.0);
  LanePolynomial shortrange{0.01, 0.0, 0.0, 0.0, 8.0, 0.0};
  EXPECT_EQ(preview_correction(0.2, shortrange).delta_shift, 0.0);
}

TEST(ApplyVpc, BothSignBranches) {
  EXPECT_NEAR(apply_vpc(0.2, 0.05), 0.2 + 0.05 / (std::numbers::pi / 6.0), 1e-15);
  EXPECT_NEAR(apply_vpc(0.2, 0.05), 0.29549, 1e-5);
  EXPECT_NEAR(apply_vpc(-0.3, 0.05), -0.39549, 1e-5);
  // Only the magnitude of the shift matters.
  EXPECT_EQ(apply_vpc(-0.3, -0.05), apply_vpc(-0.3, 0.05));
  EXPECT_EQ(apply_vpc(0.4, 0.0), 0.4);
  EXPECT_EQ(apply_vpc(-0.4, 0.0), -0.4);
}

TEST(ApplyVpc, NeverFlipsSignAndStaysInsideBound) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> cmd(-1.0, 1.0), shift(-0.6, 0.6);
  for (int i = 0; i < 10000; ++i) {
    const double c = cmd(rng);
    const double out = apply_vpc(c, shift(rng));
    if (c > 0.0) EXPECT_GT(out, 0.0);
    if (c < 0.0) EXPECT_LT(out, 0.0);
    EXPECT_LT(std::abs(out), 1.0);
  }
}

TEST(Estimator, KeepsLastWindowFrames) {
  VpcEstimator est;
  for (int i = 0; i < 12; ++i) est.push(arc(200.0));
  EXPECT_EQ(est.size(), 8u);
  EXPECT_LT(std::abs(est.evaluate(0.0).delta_shift), 1e-3);
  EXPECT_TRUE(est.evaluate(0.0).fit_available);
}
