#pragma once

#include <array>
#include <optional>
#include <vector>

#include "mrpush/core.hpp"

namespace mrpush {

/// Oriented rectangle given by centre, heading and half extents.
struct Rect {
  Vec2 center;
  double heading = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;

  std::array<Vec2, 4> corners() const;
  double area() const { return 4.0 * half_length * half_width; }
  Rect inflated(double margin) const { return {center, heading, half_length + margin, half_width + margin}; }
};

/// Separating-axis test. Touching rectangles (penetration below `eps`) do not overlap.
bool overlaps(const Rect& a, const Rect& b, double eps = 1e-9);

/// Union of disjoint convex parts: the body, plus a held block when pushing.
struct Footprint {
  std::vector<Rect> parts;

  double area() const;
  bool overlaps(const Footprint& other, double margin = 0.0) const;
  bool overlaps(const Rect& r, double margin = 0.0) const;
  bool inside(const Workspace& ws) const;
};

Rect body_rect(const RobotPose& p, const RobotGeometry& geom);
Rect block_rect(const BlockState& b);

/// Body rectangle, plus the block rectangle when a held block is given.
Footprint robot_footprint(const RobotPose& p, const RobotGeometry& geom,
                          const std::optional<BlockState>& pushing = std::nullopt);

/// Block sitting flush on the bumper of `p`, shifted sideways by `lateral` along the face.
BlockState held_block(const RobotPose& p, const RobotGeometry& geom, double side, double lateral = 0.0);

}  // namespace mrpush
