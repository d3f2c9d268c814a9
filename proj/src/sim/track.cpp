#include "vpc_cilqr/sim/track.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vpc_cilqr::sim {
namespace {

constexpr double kKnotSpacing = 1.0;
constexpr double kContinuityTol = 1e-12;

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGaussNodes = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                               0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                                 0.2369268850561891, 0.2369268850561891};

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

// Module with a total heading change of pi; two copies close the circuit.
std::vector<CurvatureSegment> half_circuit(std::initializer_list<CurvatureSegment> module) {
  std::vector<CurvatureSegment> out(module);
  out.insert(out.end(), module.begin(), module.end());
  return out;
}

CurvatureSegment straight_seg(double length) { return {length, 0.0, 0.0}; }
CurvatureSegment arc_seg(double length, double kappa) { return {length, kappa, kappa}; }
CurvatureSegment ramp_seg(double length, double from, double to) { return {length, from, to}; }

// 2843 m circuit, lane 4 m, peak curvature 0.03 1/m.
TrackGeometry make_track_a() {
  constexpr double gentle_arc = (std::numbers::pi - 1.9) / 0.01;
  constexpr double curved = 100.0 + gentle_arc + 140.0 + 140.0;
  constexpr double last_straight = 2843.0 / 2.0 - curved - 250.0 - 150.0 - 200.0;
  return TrackGeometry::from_segments(half_circuit({
                                          straight_seg(250.0),
                                          ramp_seg(50.0, 0.0, 0.01),
                                          arc_seg(gentle_arc, 0.01),
                                          ramp_seg(50.0, 0.01, 0.0),
                                          straight_seg(150.0),
                                          ramp_seg(40.0, 0.0, -0.01),
                                          arc_seg(60.0, -0.01),
                                          ramp_seg(40.0, -0.01, 0.0),
                                          straight_seg(200.0),
                                          ramp_seg(60.0, 0.0, 0.03),
                                          arc_seg(20.0, 0.03),
                                          ramp_seg(60.0, 0.03, 0.0),
                                          straight_seg(last_straight),
                                      }),
                                      4.0, true);
}

// 3919 m circuit, lane 4 m, peak curvature 0.05 1/m; long straight over 1124..1959 m.
TrackGeometry make_track_b() {
  constexpr double gentle_arc = (std::numbers::pi - 2.1) / 0.01;
  constexpr double curved = 110.0 + 110.0 + 100.0 + gentle_arc;
  constexpr double last_straight = 3919.0 / 2.0 - curved - 300.0 - 200.0 - 200.0;
  return TrackGeometry::from_segments(half_circuit({
                                          straight_seg(300.0),
                                          ramp_seg(50.0, 0.0, 0.05),
                                          arc_seg(10.0, 0.05),
                                          ramp_seg(50.0, 0.05, 0.0),
                                          straight_seg(200.0),
                                          ramp_seg(40.0, 0.0, -0.02),
                                          arc_seg(30.0, -0.02),
                                          ramp_seg(40.0, -0.02, 0.0),
                                          straight_seg(200.0),
                                          ramp_seg(50.0, 0.0, 0.01),
                                          arc_seg(gentle_arc, 0.01),
                                          ramp_seg(50.0, 0.01, 0.0),
                                          straight_seg(last_straight),
                                      }),
                                      4.0, true);
}

}  // namespace

TrackGeometry TrackGeometry::from_segments(std::vector<CurvatureSegment> segments, double lane_width, bool closed) {
  if (segments.empty()) throw std::invalid_argument("track: no segments");
  if (!(lane_width > 0.0)) throw std::invalid_argument("track: lane width must be positive");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (!(seg.length > 0.0) || !std::isfinite(seg.length)) throw std::invalid_argument("track: segment length must be positive");
    if (!std::isfinite(seg.kappa_start) || !std::isfinite(seg.kappa_end)) throw std::invalid_argument("track: non-finite curvature");
    if (i > 0 && std::abs(segments[i - 1].kappa_end - seg.kappa_start) > kContinuityTol)
      throw std::invalid_argument("track: curvature jumps at segment " + std::to_string(i));
  }
  if (closed && std::abs(segments.back().kappa_end - segments.front().kappa_start) > kContinuityTol)
    throw std::invalid_argument("track: curvature jumps across the closing point");

  TrackGeometry track;
  track.segments_ = std::move(segments);
  track.lane_width_ = lane_width;
  track.closed_ = closed;

  double s = 0.0;
  double heading = 0.0;
  Knot cursor{0.0, 0.0, 0.0, 0.0, 0};
  for (std::size_t i = 0; i < track.segments_.size(); ++i) {
    const auto& seg = track.segments_[i];
    track.segment_start_.push_back(s);
    track.segment_heading_.push_back(heading);
    track.max_abs_kappa_ = std::max({track.max_abs_kappa_, std::abs(seg.kappa_start), std::abs(seg.kappa_end)});
    const auto pieces = static_cast<int>(std::ceil(seg.length / kKnotSpacing));
    cursor = Knot{s, cursor.x, cursor.y, heading, i};
    for (int p = 0; p < pieces; ++p) {
      const double local = seg.length * p / pieces;
      const double s_knot = s + local;
      if (p > 0) {
        const Pose2 pose = track.integrate_from(cursor, s_knot);
        cursor = Knot{s_knot, pose.x, pose.y, pose.heading, i};
      }
      track.knots_.push_back(cursor);
    }
    const Pose2 end = track.integrate_from(cursor, s + seg.length);
    s += seg.length;
    heading = track.heading_at(i, seg.length);
    cursor = Knot{s, end.x, end.y, heading, i};
  }
  track.length_ = s;
  track.end_pose_ = {cursor.x, cursor.y, heading};
  return track;
}

TrackGeometry TrackGeometry::preset(std::string_view name) {
  if (name == "trackA") return make_track_a();
  if (name == "trackB") return make_track_b();
  if (name == "straight") return straight();
  if (name.starts_with("circle")) {
    double radius = 0.0;
    const auto digits = name.substr(6);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), radius);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && radius > 0.0) return circle(radius);
  }
  throw std::invalid_argument("track: unknown preset '" + std::string(name) + "'");
}

TrackGeometry TrackGeometry::straight(double length) { return from_segments({straight_seg(length)}, 4.0, false); }

TrackGeometry TrackGeometry::circle(double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("track: circle radius must be positive");
  return from_segments({arc_seg(2.0 * std::numbers::pi * radius, 1.0 / radius)}, 4.0, true);
}

double TrackGeometry::wrap(double s) const {
  if (!closed_) return s;
  double w = std::fmod(s, length_);
  if (w < 0.0) w += length_;
  return w;
}

std::size_t TrackGeometry::segment_index(double s_wrapped) const {
  const auto it = std::upper_bound(segment_start_.begin(), segment_start_.end(), s_wrapped);
  return it == segment_start_.begin() ? 0 : static_cast<std::size_t>(it - segment_start_.begin() - 1);
}

double TrackGeometry::heading_at(std::size_t seg, double local) const {
  const auto& sg = segments_[seg];
  return segment_heading_[seg] + sg.kappa_start * local +
         0.5 * (sg.kappa_end - sg.kappa_start) * local * local / sg.length;
}

double TrackGeometry::curvature(double s) const {
  const double w = wrap(s);
  if (w < 0.0 || w >= length_) return closed_ ? segments_.back().kappa_end : 0.0;
  const std::size_t i = segment_index(w);
  const auto& sg = segments_[i];
  const double local = std::clamp(w - segment_start_[i], 0.0, sg.length);
  return sg.kappa_start + (sg.kappa_end - sg.kappa_start) * local / sg.length;
}

Pose2 TrackGeometry::integrate_from(const Knot& knot, double s_wrapped) const {
  const double a = knot.s - segment_start_[knot.segment];
  const double b = s_wrapped - segment_start_[knot.segment];
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double dx = 0.0;
  double dy = 0.0;
  for (std::size_t g = 0; g < kGaussNodes.size(); ++g) {
    const double h = heading_at(knot.segment, mid + half * kGaussNodes[g]);
    dx += kGaussWeights[g] * std::cos(h);
    dy += kGaussWeights[g] * std::sin(h);
  }
  return {knot.x + half * dx, knot.y + half * dy, heading_at(knot.segment, b)};
}

Pose2 TrackGeometry::centerline(double s) const {
  if (!closed_ && (s < 0.0 || s > length_)) {
    // Open tracks extend straight beyond both ends.
    const Pose2 anchor = s < 0.0 ? Pose2{0.0, 0.0, 0.0} : end_pose_;
    const double d = s < 0.0 ? s : s - length_;
    return {anchor.x + d * std::cos(anchor.heading), anchor.y + d * std::sin(anchor.heading), anchor.heading};
  }
  const double w = wrap(s);
  auto it = std::upper_bound(knots_.begin(), knots_.end(), w, [](double v, const Knot& k) { return v < k.s; });
  const Knot& knot = it == knots_.begin() ? knots_.front() : *(it - 1);
  return integrate_from(knot, w);
}

Pose2 TrackGeometry::to_global(const FrenetPose& f) const {
  const Pose2 c = centerline(f.s);
  return {c.x - f.offset * std::sin(c.heading), c.y + f.offset * std::cos(c.heading), c.heading + f.heading};
}

FrenetPose TrackGeometry::project(const Pose2& pose, double s_guess) const {
  double s = s_guess;
  for (int iter = 0; iter < 50; ++iter) {
    const Pose2 c = centerline(s);
    const double tx = std::cos(c.heading);
    const double ty = std::sin(c.heading);
    const double rx = pose.x - c.x;
    const double ry = pose.y - c.y;
    const double along = rx * tx + ry * ty;
    const double normal = -rx * ty + ry * tx;
    const double slope = 1.0 - curvature(s) * normal;
    const double step = along / (std::abs(slope) > 1e-6 ? slope : 1e-6);
    s += step;
    if (std::abs(step) < 1e-12) break;
  }
  const Pose2 c = centerline(s);
  const double rx = pose.x - c.x;
  const double ry = pose.y - c.y;
  return {s, -rx * std::sin(c.heading) + ry * std::cos(c.heading), wrap_angle(pose.heading - c.heading)};
}

double TrackGeometry::closure_error() const { return std::hypot(end_pose_.x, end_pose_.y); }

}  // namespace vpc_cilqr::sim
