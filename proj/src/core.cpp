#include "mrpush/core.hpp"

#include <limits>
#include <stdexcept>

#include "mrpush/errors.hpp"
#include "mrpush/geometry.hpp"

namespace mrpush {

double normalize_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

void ControlLimits::validate() const {
  if (!(v_max > 0.0)) throw ValidationError("control limits: v_max must be positive");
  if (!(phi_max_push > 0.0)) throw ValidationError("control limits: phi_max_push must be positive");
  if (!(phi_max_push <= phi_max_free)) throw ValidationError("control limits: phi_max_push exceeds phi_max_free");
  if (!(phi_max_free < 0.5 * kPi)) throw ValidationError("control limits: phi_max_free must be below pi/2");
}

Control Control::checked(double v, double phi, const ControlLimits& limits, bool pushing) {
  Control u{v, phi};
  if (!u.within(limits, pushing, 0.0)) throw std::domain_error("control outside limits");
  return u;
}

void RobotGeometry::validate(double block_side) const {
  if (!(wheelbase > 0 && body_length > 0 && body_width > 0 && bumper_offset > 0 && bumper_width > 0))
    throw ValidationError("robot geometry: all dimensions must be positive");
  if (body_length < bumper_x()) throw ValidationError("robot geometry: body must reach from rear axle to bumper");
  if (bumper_width < block_side) throw ValidationError("robot geometry: bumper narrower than block");
}

void Scenario::validate(const RobotGeometry& geom) const {
  if (!(workspace.xmax > workspace.xmin && workspace.ymax > workspace.ymin))
    throw ValidationError("scenario: empty workspace");
  if (!(block_side > 0.0)) throw ValidationError("scenario: block_side must be positive");
  if (robots.empty()) throw ValidationError("scenario: at least one robot required");
  if (blocks_start.empty()) throw ValidationError("scenario: at least one block required");
  if (blocks_start.size() != blocks_goal.size())
    throw ValidationError("scenario: block start and goal counts differ");
  for (std::size_t i = 0; i < robots.size(); ++i) {
    if (!workspace.strictly_contains(robots[i].position()))
      throw ValidationError("scenario: robot " + std::to_string(i) + " outside workspace");
  }
  for (std::size_t j = 0; j < blocks_start.size(); ++j) {
    if (!workspace.strictly_contains(blocks_start[j]))
      throw ValidationError("scenario: block " + std::to_string(j) + " start outside workspace");
    if (!workspace.strictly_contains(blocks_goal[j]))
      throw ValidationError("scenario: block " + std::to_string(j) + " goal outside workspace");
  }
  const double diag = std::hypot(geom.body_length, geom.body_width);
  for (std::size_t i = 0; i < robots.size(); ++i) {
    for (std::size_t k = i + 1; k < robots.size(); ++k) {
      if (distance(robots[i].position(), robots[k].position()) <= diag &&
          robot_footprint(robots[i], geom).overlaps(robot_footprint(robots[k], geom)))
        throw ValidationError("scenario: robots " + std::to_string(i) + " and " + std::to_string(k) + " overlap");
    }
  }
}

double turning_radius(double phi, const RobotGeometry& geom) {
  const double t = std::tan(std::abs(phi));
  return t == 0.0 ? std::numeric_limits<double>::infinity() : geom.wheelbase / t;
}

RobotPose step_kinematics(const RobotPose& p, const Control& u, double dt, const RobotGeometry& geom) {
  const double ds = u.v * dt;
  const double curvature = std::tan(u.phi) / geom.wheelbase;
  const double dtheta = ds * curvature;
  if (std::abs(dtheta) < 1e-12) {
    return {p.x + ds * std::cos(p.theta), p.y + ds * std::sin(p.theta), normalize_angle(p.theta + dtheta)};
  }
  const double r = 1.0 / curvature;
  const double th1 = p.theta + dtheta;
  return {p.x + r * (std::sin(th1) - std::sin(p.theta)), p.y - r * (std::cos(th1) - std::cos(p.theta)),
          normalize_angle(th1)};
}

RobotPose step_euler(const RobotPose& p, const Control& u, double dt, const RobotGeometry& geom) {
  return {p.x + u.v * std::cos(p.theta) * dt, p.y + u.v * std::sin(p.theta) * dt,
          normalize_angle(p.theta + u.v / geom.wheelbase * std::tan(u.phi) * dt)};
}

double min_pairwise_distance(std::span<const RobotPose> poses) {
  if (poses.size() < 2) throw std::domain_error("min_pairwise_distance needs at least two poses");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poses.size(); ++i)
    for (std::size_t j = i + 1; j < poses.size(); ++j)
      best = std::min(best, distance(poses[i].position(), poses[j].position()));
  return best;
}

}  // namespace mrpush
