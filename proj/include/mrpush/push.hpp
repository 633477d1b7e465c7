#pragma once

#include <array>
#include <functional>
#include <optional>

#include "mrpush/core.hpp"

namespace mrpush::push {

/// Force and torque on the block, expressed in the block frame about its centre.
/// Only the direction matters for quasistatic analysis.
struct Wrench {
  double fx = 0.0;
  double fy = 0.0;
  double tau = 0.0;

  Wrench operator*(double s) const { return {fx * s, fy * s, tau * s}; }
};

/// Block twist (vx, vy, omega) in the block frame.
struct Twist {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
};

/// Line contact between the bumper and a block face, modelled as two point
/// contacts. Block frame: centre at the origin, the pushed face at x = -side/2,
/// pushing direction +x.
struct ContactModel {
  double mu = 0.6;
  std::array<Vec2, 2> points{{{-0.05, 0.05}, {-0.05, -0.05}}};
  /// Inward contact normal (pusher onto block).
  Vec2 normal{1.0, 0.0};
  double support_mu = 0.5;

  /// Contacts at both corners of the face of a square block of the given side.
  static ContactModel line_contact(double mu, double block_side, double support_mu = 0.5);
  /// Reflection about the block x axis.
  ContactModel mirrored() const;
  double face_x() const { return points[0].x; }
};

/// Ellipsoidal limit surface H(w) = (fx/f_max)^2 + (fy/f_max)^2 + (tau/m_max)^2.
struct LimitSurface {
  double f_max = 1.0;
  double m_max = 1.0;

  double c() const { return m_max / f_max; }
  double value(const Wrench& w) const;
  /// Gradient of H with respect to (fx, fy, tau).
  Twist gradient(const Wrench& w) const;
};

/// Mean distance from the centre over the unit square, (sqrt(2) + asinh(1)) / 6,
/// evaluated by quadrature at first use.
double square_mean_radius_factor();

/// Mean distance from the origin of points inside `region`, integrated with an
/// n x n midpoint rule over the box [-half_extent, half_extent]^2 (uniform pressure).
double mean_radius(const std::function<bool(double, double)>& region, double half_extent, int n);

/// c = m_max / f_max for a square block under uniform pressure.
double limit_surface_constant(double block_side);

/// Limit surface of a square block of unit weight on a support with friction `support_mu`.
LimitSurface block_limit_surface(double block_side, double support_mu);

/// The four edges of the composite friction cone as wrenches about the block centre:
/// for each contact point in order, the edge rotated +atan(mu) then -atan(mu) from the normal.
std::array<Wrench, 4> friction_cone_edges(const ContactModel& contact);

/// Unit twist along the limit-surface gradient at `w`, normalised so that
/// |(vx, vy, c * omega)| = 1. Throws std::domain_error for a zero wrench.
Twist wrench_to_twist(const Wrench& w, const LimitSurface& ls);

/// Controls under which a held block stays fixed on the bumper.
struct StableSet {
  std::array<Twist, 4> boundary{};
  /// Largest stable path curvature for left (positive) and right turns, 1/m.
  double curvature_left = 0.0;
  double curvature_right = 0.0;
  /// Binding turning-radius bound; infinity when only straight pushes are stable.
  double r_min = 0.0;
  double phi_max_push = 0.0;

  bool straight_only() const { return !std::isfinite(r_min); }
};

/// Stable set for a pusher whose rear axle sits at `rear_axle` in the block frame.
StableSet stable_set_from_wrenches(const std::array<Wrench, 4>& edges, const LimitSurface& ls, Vec2 rear_axle,
                                   double wheelbase);

/// Stable set for a car of the given geometry holding the block flush and centred on its bumper.
StableSet stable_set(const ContactModel& contact, const LimitSurface& ls, const RobotGeometry& geom);

/// Block twist imposed by a car moving at unit forward speed with path curvature `curvature`,
/// rear axle at `rear_axle` in the block frame.
Twist pusher_twist(double curvature, Vec2 rear_axle);

/// Outcome of holding the block under an imposed pusher twist.
struct ContactResponse {
  /// Lateral sliding velocity of the block along the bumper face (block frame y),
  /// per unit of the imposed twist. Zero inside the stable set.
  double slide = 0.0;
  /// True when no tangential slide can keep the face flush (line contact breaks).
  bool broken = false;
};

/// Quasistatic response: the smallest tangential slide that brings the required
/// friction wrench back inside the composite friction cone.
ContactResponse contact_response(const std::array<Wrench, 4>& edges, const LimitSurface& ls, const Twist& pusher);

}  // namespace mrpush::push
