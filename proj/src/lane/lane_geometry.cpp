#include "vpc_cilqr/lane/lane_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Dense>

namespace vpc_cilqr::lane {
namespace {

constexpr double kMaxSteer = std::numbers::pi / 6.0;
constexpr double kRangeSlack = 1e-9;

}  // namespace

void VpcConfig::validate() const {
  if (!(lookahead > 0.0)) throw std::invalid_argument("vpc.lookahead must be positive");
  if (!std::isfinite(gain)) throw std::invalid_argument("vpc.gain must be finite");
  if (frame_window < 1) throw std::invalid_argument("vpc.frame_window must be >= 1");
  if (!(bin_width > 0.0)) throw std::invalid_argument("vpc.bin_width must be positive");
  if (!(max_residual_rms > 0.0)) throw std::invalid_argument("vpc.max_residual_rms must be positive");
  if (min_points < 3) throw std::invalid_argument("vpc.min_points must be >= 3");
}

LaneMap average_lane_maps(std::span<const LaneMap> window, double bin_width) {
  if (window.empty()) throw std::invalid_argument("average_lane_maps: empty window");
  if (!(bin_width > 0.0)) throw std::invalid_argument("average_lane_maps: bin width must be positive");

  struct Accum {
    double sx = 0.0;
    double sy = 0.0;
    int count = 0;
  };
  std::map<long, Accum> bins;
  for (const auto& map : window) {
    for (const auto& p : map.points) {
      auto& acc = bins[std::lround(p.x / bin_width)];
      acc.sx += p.x;
      acc.sy += p.y;
      ++acc.count;
    }
  }
  LaneMap out;
  out.points.reserve(bins.size());
  for (const auto& [bin, acc] : bins) out.points.push_back({acc.sx / acc.count, acc.sy / acc.count});
  out.timestamp = std::max_element(window.begin(), window.end(), [](const LaneMap& l, const LaneMap& r) {
                    return l.timestamp < r.timestamp;
                  })->timestamp;
  return out;
}

std::optional<LanePolynomial> fit_lane_polynomial(const LaneMap& map, const VpcConfig& cfg) {
  const auto n = map.points.size();
  if (n < cfg.min_points) return std::nullopt;
  double x_lo = map.points.front().x;
  double x_hi = x_lo;
  for (const auto& p : map.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
  }
  if (x_hi - x_lo < cfg.min_span) return std::nullopt;

  // Centering and scaling x keeps the normal equations well conditioned.
  const double mid = 0.5 * (x_lo + x_hi);
  const double half = 0.5 * (x_hi - x_lo);
  Eigen::MatrixXd V(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const double z = (map.points[i].x - mid) / half;
    V(i, 0) = z * z;
    V(i, 1) = z;
    V(i, 2) = 1.0;
    y[i] = map.points[i].y;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  if (qr.rank() < 3) return std::nullopt;
  const Eigen::Vector3d s = qr.solve(y);

  // Undo the change of variable z = (x - mid) / half.
  LanePolynomial poly;
  poly.a = s[0] / (half * half);
  poly.b = s[1] / half - 2.0 * s[0] * mid / (half * half);
  poly.c = s[2] - s[1] * mid / half + s[0] * mid * mid / (half * half);
  poly.x_lo = x_lo;
  poly.x_hi = x_hi;
  poly.residual_rms = std::sqrt((V * s - y).squaredNorm() / static_cast<double>(n));
  if (!std::isfinite(poly.a) || !std::isfinite(poly.b) || !std::isfinite(poly.c)) return std::nullopt;
  return poly;
}

double curvature_at(const LanePolynomial& poly, double x) {
  if (x < poly.x_lo - kRangeSlack || x > poly.x_hi + kRangeSlack)
    throw ExtrapolationRefused("curvature_at: x = " + std::to_string(x) + " outside fitted range [" +
                               std::to_string(poly.x_lo) + ", " + std::to_string(poly.x_hi) + "]");
  const double slope = 2.0 * poly.a * x + poly.b;
  return 2.0 * poly.a / std::pow(1.0 + slope * slope, 1.5);
}

PreviewCorrection preview_correction(double delta_now, const std::optional<LanePolynomial>& poly,
                                     const VpcConfig& cfg) {
  PreviewCorrection out;
  out.delta_preview = delta_now;
  if (!poly || poly->residual_rms > cfg.max_residual_rms) return out;
  if (poly->x_lo > kRangeSlack || poly->x_hi < cfg.lookahead - kRangeSlack) return out;
  out.fit_available = true;
  out.kappa_0 = curvature_at(*poly, 0.0);
  out.kappa_1 = curvature_at(*poly, cfg.lookahead);
  out.delta_0 = std::atan(cfg.gain * out.kappa_0);
  out.delta_1 = std::atan(cfg.gain * out.kappa_1);
  out.delta_shift = out.delta_1 - out.delta_0;
  out.delta_preview = delta_now + out.delta_shift;
  return out;
}

double apply_vpc(double steer_cmd, double delta_shift) {
  const double step = std::abs(delta_shift) / kMaxSteer;
  const double updated = steer_cmd >= 0.0 ? steer_cmd + step : steer_cmd - step;
  // Keep the emitted command strictly inside the steering bound.
  const double limit = std::nextafter(1.0, 0.0);
  return std::clamp(updated, -limit, limit);
}

VpcEstimator::VpcEstimator(VpcConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void VpcEstimator::push(LaneMap map) {
  frames_.push_back(std::move(map));
  while (frames_.size() > cfg_.frame_window) frames_.pop_front();
}

PreviewCorrection VpcEstimator::evaluate(double delta_now) const {
  if (frames_.empty()) return preview_correction(delta_now, std::nullopt, cfg_);
  const std::vector<LaneMap> window(frames_.begin(), frames_.end());
  const LaneMap averaged = average_lane_maps(window, cfg_.bin_width);
  return preview_correction(delta_now, fit_lane_polynomial(averaged, cfg_), cfg_);
}

}  // namespace vpc_cilqr::lane
