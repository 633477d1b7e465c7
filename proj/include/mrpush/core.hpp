#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mrpush {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

/// Rotates a body-frame offset by heading `theta`.
inline Vec2 rotate(Vec2 v, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// SE(2) pose of a car-like robot, referenced at the rear-axle midpoint.
struct RobotPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  /// World position of a point given in the robot frame.
  Vec2 transform(Vec2 local) const { return position() + rotate(local, theta); }
  /// Robot-frame coordinates of a world point.
  Vec2 to_local(Vec2 world) const { return rotate(world - position(), -theta); }
  bool operator==(const RobotPose&) const = default;
};

struct ControlLimits {
  double v_max = 0.4;
  double phi_max_free = 0.314;
  double phi_max_push = 0.17;

  double phi_max(bool pushing) const { return pushing ? phi_max_push : phi_max_free; }
  /// Throws ValidationError unless 0 < phi_max_push <= phi_max_free and v_max > 0.
  void validate() const;
};

/// Speed (signed, m/s) and steering angle (rad).
struct Control {
  double v = 0.0;
  double phi = 0.0;

  bool within(const ControlLimits& limits, bool pushing, double tol = 1e-9) const {
    return std::abs(v) <= limits.v_max + tol && std::abs(phi) <= limits.phi_max(pushing) + tol;
  }
  /// Builds a control, throwing std::domain_error when it violates the active limits.
  static Control checked(double v, double phi, const ControlLimits& limits, bool pushing);
  bool operator==(const Control&) const = default;
};

/// Car dimensions. The body rectangle spans from the rear bumper to the
/// pushing face, which sits `bumper_offset` ahead of the front axle.
struct RobotGeometry {
  double wheelbase = 0.275;
  double body_length = 1.0;
  double body_width = 0.3;
  double bumper_offset = 0.62;
  double bumper_width = 0.3;

  /// Distance from the rear axle to the bumper face.
  double bumper_x() const { return wheelbase + bumper_offset; }
  /// Distance from the rear axle to the centre of a block held on the bumper.
  double block_lever(double block_side) const { return bumper_x() + 0.5 * block_side; }
  void validate(double block_side) const;
};

struct BlockState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double side = 0.1;

  Vec2 position() const { return {x, y}; }
};

/// Axis-aligned workspace rectangle.
struct Workspace {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 4.0;
  double ymax = 6.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(Vec2 p, double margin = 0.0) const {
    return p.x >= xmin + margin && p.x <= xmax - margin && p.y >= ymin + margin && p.y <= ymax - margin;
  }
  bool strictly_contains(Vec2 p) const { return p.x > xmin && p.x < xmax && p.y > ymin && p.y < ymax; }
};

struct Scenario {
  std::string id;
  Workspace workspace;
  std::vector<RobotPose> robots;
  std::vector<Vec2> blocks_start;
  std::vector<Vec2> blocks_goal;
  double block_side = 0.1;

  std::size_t num_robots() const { return robots.size(); }
  std::size_t num_blocks() const { return blocks_start.size(); }
  /// Throws ValidationError naming the first violated constraint.
  void validate(const RobotGeometry& geom) const;
};

/// Exact constant-control integration (straight line or circular arc).
RobotPose step_kinematics(const RobotPose& p, const Control& u, double dt, const RobotGeometry& geom);

/// Forward Euler step of the same model; the simulator uses it at its fine timestep.
RobotPose step_euler(const RobotPose& p, const Control& u, double dt, const RobotGeometry& geom);

/// Turning radius L / |tan(phi)|; infinity for phi == 0.
double turning_radius(double phi, const RobotGeometry& geom);

/// Minimum centre-to-centre distance over unordered pairs. Needs at least two poses.
double min_pairwise_distance(std::span<const RobotPose> poses);

}  // namespace mrpush
