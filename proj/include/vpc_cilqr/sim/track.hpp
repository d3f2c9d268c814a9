#pragma once

#include <string_view>
#include <vector>

namespace vpc_cilqr::sim {

/// Curvature ramps linearly from kappa_start to kappa_end over `length`
/// (a clothoid when the ends differ, an arc or straight otherwise).
struct CurvatureSegment {
  double length = 0.0;
  double kappa_start = 0.0;
  double kappa_end = 0.0;
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct FrenetPose {
  double s = 0.0;
  double offset = 0.0;
  double heading = 0.0;
};

/// Arc-length parameterized lane centerline with a C0 curvature profile.
/// Closed tracks wrap s modulo the length; open tracks continue straight past
/// their end.
class TrackGeometry {
 public:
  /// Throws std::invalid_argument for non-positive lengths, non-finite values or
  /// curvature jumps between consecutive segments (including the wrap on closed tracks).
  static TrackGeometry from_segments(std::vector<CurvatureSegment> segments, double lane_width, bool closed);

  /// "trackA", "trackB", "straight", or "circle<radius>" such as "circle100".
  static TrackGeometry preset(std::string_view name);
  static TrackGeometry straight(double length = 20000.0);
  static TrackGeometry circle(double radius);

  double length() const { return length_; }
  double lane_width() const { return lane_width_; }
  bool closed() const { return closed_; }
  double max_abs_curvature() const { return max_abs_kappa_; }
  const std::vector<CurvatureSegment>& segments() const { return segments_; }

  double curvature(double s) const;
  Pose2 centerline(double s) const;

  /// Global pose of a vehicle at arc position s with lateral offset and heading error.
  Pose2 to_global(const FrenetPose& frenet) const;
  /// Inverse of to_global, searching near `s_guess` (unwrapped arc positions are preserved).
  FrenetPose project(const Pose2& pose, double s_guess) const;

  /// Distance between the start pose and the pose reached after one length.
  double closure_error() const;

 private:
  struct Knot {
    double s;
    double x;
    double y;
    double heading;
    std::size_t segment;
  };

  double wrap(double s) const;
  std::size_t segment_index(double s_wrapped) const;
  double heading_at(std::size_t seg, double local) const;
  Pose2 integrate_from(const Knot& knot, double s_wrapped) const;

  std::vector<CurvatureSegment> segments_;
  std::vector<double> segment_start_;
  std::vector<double> segment_heading_;
  std::vector<Knot> knots_;
  Pose2 end_pose_;
  double length_ = 0.0;
  double lane_width_ = 4.0;
  double max_abs_kappa_ = 0.0;
  bool closed_ = false;
};

}  // namespace vpc_cilqr::sim
