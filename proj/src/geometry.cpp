#include "mrpush/geometry.hpp"

#include <algorithm>
#include <limits>

namespace mrpush {

std::array<Vec2, 4> Rect::corners() const {
  const Vec2 ax = rotate({half_length, 0.0}, heading);
  const Vec2 ay = rotate({0.0, half_width}, heading);
  return {center + ax + ay, center - ax + ay, center - ax - ay, center + ax - ay};
}

namespace {

void project(const std::array<Vec2, 4>& pts, Vec2 axis, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& p : pts) {
    const double d = p.dot(axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

}  // namespace

bool overlaps(const Rect& a, const Rect& b, double eps) {
  const double reach = std::hypot(a.half_length, a.half_width) + std::hypot(b.half_length, b.half_width);
  if (distance(a.center, b.center) > reach + eps) return false;
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {rotate({1, 0}, a.heading), rotate({0, 1}, a.heading), rotate({1, 0}, b.heading),
                                    rotate({0, 1}, b.heading)};
  for (const auto& ax : axes) {
    double alo, ahi, blo, bhi;
    project(ca, ax, alo, ahi);
    project(cb, ax, blo, bhi);
    if (ahi <= blo + eps || bhi <= alo + eps) return false;
  }
  return true;
}

double Footprint::area() const {
  double s = 0.0;
  for (const auto& r : parts) s += r.area();
  return s;
}

bool Footprint::overlaps(const Rect& r, double margin) const {
  const Rect rr = r.inflated(margin);
  return std::any_of(parts.begin(), parts.end(), [&](const Rect& p) { return mrpush::overlaps(p, rr); });
}

bool Footprint::overlaps(const Footprint& other, double margin) const {
  for (const auto& a : parts)
    for (const auto& b : other.parts)
      if (mrpush::overlaps(a.inflated(0.5 * margin), b.inflated(0.5 * margin))) return true;
  return false;
}

bool Footprint::inside(const Workspace& ws) const {
  for (const auto& r : parts)
    for (const auto& c : r.corners())
      if (!ws.contains(c)) return false;
  return true;
}

Rect body_rect(const RobotPose& p, const RobotGeometry& geom) {
  const double front = geom.bumper_x();
  const double cx = front - 0.5 * geom.body_length;
  return {p.transform({cx, 0.0}), p.theta, 0.5 * geom.body_length, 0.5 * geom.body_width};
}

Rect block_rect(const BlockState& b) { return {b.position(), b.yaw, 0.5 * b.side, 0.5 * b.side}; }

Footprint robot_footprint(const RobotPose& p, const RobotGeometry& geom, const std::optional<BlockState>& pushing) {
  Footprint fp;
  fp.parts.push_back(body_rect(p, geom));
  if (pushing) fp.parts.push_back(block_rect(*pushing));
  return fp;
}

BlockState held_block(const RobotPose& p, const RobotGeometry& geom, double side, double lateral) {
  const Vec2 c = p.transform({geom.block_lever(side), lateral});
  return {c.x, c.y, p.theta, side};
}

}  // namespace mrpush
