#pragma once

#include <array>
#include <optional>

#include "mrpush/core.hpp"

namespace mrpush {

/// Shortest forward-only path of bounded curvature between two poses.
struct DubinsPath {
  enum Segment { kLeft, kStraight, kRight };
  std::array<Segment, 3> types{};
  /// Segment lengths in meters.
  std::array<double, 3> lengths{};
  double radius = 1.0;

  double length() const { return lengths[0] + lengths[1] + lengths[2]; }
};

std::optional<DubinsPath> dubins_shortest(const RobotPose& from, const RobotPose& to, double radius);

/// Pose after travelling `s` meters along the path.
RobotPose dubins_sample(const RobotPose& from, const DubinsPath& path, double s);

}  // namespace mrpush
