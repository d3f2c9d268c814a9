#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace vpc_cilqr::lane {

/// Bird's-eye-view lane sample in the ego frame: x forward, y to the left.
struct LanePoint {
  double x = 0.0;
  double y = 0.0;
};

struct LaneMap {
  std::vector<LanePoint> points;
  double timestamp = 0.0;
};

/// y = a x^2 + b x + c, valid over [x_lo, x_hi].
struct LanePolynomial {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  double residual_rms = 0.0;

  double operator()(double x) const { return (a * x + b) * x + c; }
};

struct PreviewCorrection {
  double kappa_0 = 0.0;
  double kappa_1 = 0.0;
  double delta_0 = 0.0;
  double delta_1 = 0.0;
  double delta_shift = 0.0;
  double delta_preview = 0.0;
  bool fit_available = false;
};

struct VpcConfig {
  double lookahead = 10.0;
  /// Gain inside atan(gain * kappa); the wheelbase makes this the kinematic steer.
  double gain = 2.64;
  std::size_t frame_window = 8;
  double bin_width = 0.5;
  double max_residual_rms = 0.3;
  std::size_t min_points = 6;
  double min_span = 5.0;

  void validate() const;
};

class ExtrapolationRefused : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Per-bin average of the maps in `window` (bins of `bin_width` along x).
/// Throws std::invalid_argument for an empty window.
LaneMap average_lane_maps(std::span<const LaneMap> window, double bin_width = 0.5);

/// Least-squares quadratic through the map points; nullopt when there are too
/// few points, the forward spread is too small, or the fit is ill-conditioned.
std::optional<LanePolynomial> fit_lane_polynomial(const LaneMap& map, const VpcConfig& cfg = {});

/// Signed curvature f'' / (1 + f'^2)^(3/2). Throws ExtrapolationRefused outside the fitted range.
double curvature_at(const LanePolynomial& poly, double x);

/// Steering shift between the current position and the look-ahead point.
/// A missing or poor fit yields a zero shift.
PreviewCorrection preview_correction(double delta_now, const std::optional<LanePolynomial>& poly,
                                     const VpcConfig& cfg = {});

/// Adds |shift| in the direction of the command's sign, in normalized units.
double apply_vpc(double steer_cmd, double delta_shift);

/// Ring buffer of recent lane maps feeding the averaged fit.
class VpcEstimator {
 public:
  explicit VpcEstimator(VpcConfig cfg = {});

  void push(LaneMap map);
  bool empty() const { return frames_.empty(); }
  std::size_t size() const { return frames_.size(); }

  /// Averages the buffered maps, fits, and returns the preview correction.
  PreviewCorrection evaluate(double delta_now) const;

  const VpcConfig& config() const { return cfg_; }

 private:
  VpcConfig cfg_;
  std::deque<LaneMap> frames_;
};

}  // namespace vpc_cilqr::lane
