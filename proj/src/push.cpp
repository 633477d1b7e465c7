#include "mrpush/push.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mrpush::push {
namespace {

struct V3 {
  double x, y, z;
  double dot(const V3& o) const { return x * o.x + y * o.y + z * o.z; }
  V3 cross(const V3& o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
  double norm() const { return std::sqrt(dot(*this)); }
};

V3 as_v3(const Wrench& w) { return {w.fx, w.fy, w.tau}; }

/// Outward-free facet normals of the cone spanned by the generators (n . g >= 0 inside).
std::vector<V3> cone_facets(const std::array<Wrench, 4>& edges) {
  std::vector<V3> facets;
  constexpr double kEps = 1e-12;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      V3 n = as_v3(edges[i]).cross(as_v3(edges[j]));
      const double len = n.norm();
      if (len < kEps) continue;
      n = {n.x / len, n.y / len, n.z / len};
      int pos = 0, neg = 0;
      for (int k = 0; k < 4; ++k) {
        if (k == i || k == j) continue;
        const double s = n.dot(as_v3(edges[k]));
        if (s > kEps) ++pos;
        if (s < -kEps) ++neg;
      }
      if (pos > 0 && neg > 0) continue;
      if (neg > 0) n = {-n.x, -n.y, -n.z};
      facets.push_back(n);
    }
  }
  return facets;
}

/// Friction wrench (up to scale) that produces twist t through the ellipsoid.
V3 required_wrench(const Twist& t, const LimitSurface& ls) {
  const double c2 = ls.c() * ls.c();
  return {t.vx, t.vy, c2 * t.omega};
}

bool degenerate(const std::array<Wrench, 4>& edges) {
  // Coplanar generators: the cone has no interior.
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k)
        if (std::abs(as_v3(edges[i]).dot(as_v3(edges[j]).cross(as_v3(edges[k])))) > 1e-12) return false;
  return true;
}

}  // namespace

ContactModel ContactModel::line_contact(double mu, double block_side, double support_mu) {
  const double h = 0.5 * block_side;
  ContactModel c;
  c.mu = mu;
  c.points = {{{-h, h}, {-h, -h}}};
  c.normal = {1.0, 0.0};
  c.support_mu = support_mu;
  return c;
}

ContactModel ContactModel::mirrored() const {
  ContactModel m = *this;
  m.points = {{{points[1].x, -points[1].y}, {points[0].x, -points[0].y}}};
  m.normal = {normal.x, -normal.y};
  return m;
}

double LimitSurface::value(const Wrench& w) const {
  return (w.fx * w.fx + w.fy * w.fy) / (f_max * f_max) + (w.tau * w.tau) / (m_max * m_max);
}

Twist LimitSurface::gradient(const Wrench& w) const {
  return {2.0 * w.fx / (f_max * f_max), 2.0 * w.fy / (f_max * f_max), 2.0 * w.tau / (m_max * m_max)};
}

double mean_radius(const std::function<bool(double, double)>& region, double half_extent, int n) {
  const double step = 2.0 * half_extent / n;
  double sum = 0.0;
  long count = 0;
  for (int i = 0; i < n; ++i) {
    const double x = -half_extent + (i + 0.5) * step;
    for (int j = 0; j < n; ++j) {
      const double y = -half_extent + (j + 0.5) * step;
      if (!region(x, y)) continue;
      sum += std::hypot(x, y);
      ++count;
    }
  }
  if (count == 0) throw std::domain_error("mean_radius: empty region");
  return sum / static_cast<double>(count);
}

double square_mean_radius_factor() {
  static const double kappa = mean_radius([](double, double) { return true; }, 0.5, 2000);
  return kappa;
}

double limit_surface_constant(double block_side) {
  if (!(block_side > 0.0)) throw std::domain_error("limit_surface_constant: block_side must be positive");
  return block_side * square_mean_radius_factor();
}

LimitSurface block_limit_surface(double block_side, double support_mu) {
  return {support_mu, support_mu * limit_surface_constant(block_side)};
}

std::array<Wrench, 4> friction_cone_edges(const ContactModel& contact) {
  const double alpha = std::atan(contact.mu);
  std::array<Wrench, 4> out{};
  int k = 0;
  for (const auto& p : contact.points) {
    for (double sgn : {1.0, -1.0}) {
      const Vec2 f = rotate(contact.normal, sgn * alpha);
      out[k++] = {f.x, f.y, p.cross(f)};
    }
  }
  return out;
}

Twist wrench_to_twist(const Wrench& w, const LimitSurface& ls) {
  if (w.fx == 0.0 && w.fy == 0.0 && w.tau == 0.0) throw std::domain_error("wrench_to_twist: zero wrench");
  const Twist g = ls.gradient(w);
  const double c = ls.c();
  const double n = std::sqrt(g.vx * g.vx + g.vy * g.vy + c * c * g.omega * g.omega);
  return {g.vx / n, g.vy / n, g.omega / n};
}

Twist pusher_twist(double curvature, Vec2 rear_axle) {
  return {1.0 + curvature * rear_axle.y, -curvature * rear_axle.x, curvature};
}

StableSet stable_set_from_wrenches(const std::array<Wrench, 4>& edges, const LimitSurface& ls, Vec2 rear_axle,
                                   double wheelbase) {
  StableSet out;
  for (int i = 0; i < 4; ++i) out.boundary[i] = wrench_to_twist(edges[i], ls);
  const double inf = std::numeric_limits<double>::infinity();
  if (degenerate(edges)) {
    out.r_min = inf;
    out.phi_max_push = 0.0;
    return out;
  }
  // Required wrench along the car's family: w(k) = base + k * slope.
  const V3 base = required_wrench(pusher_twist(0.0, rear_axle), ls);
  const Twist unit_k = pusher_twist(1.0, rear_axle);
  const V3 at_one = required_wrench(unit_k, ls);
  const V3 slope{at_one.x - base.x, at_one.y - base.y, at_one.z - base.z};
  double left = inf, right = inf;
  for (const auto& n : cone_facets(edges)) {
    const double b = n.dot(base);
    const double s = n.dot(slope);
    if (b < -1e-12) {
      // Straight pushing itself is unstable.
      left = right = 0.0;
      break;
    }
    if (s < 0.0) left = std::min(left, -b / s);
    if (s > 0.0) right = std::min(right, b / s);
  }
  out.curvature_left = left;
  out.curvature_right = right;
  const double k = std::min(left, right);
  out.r_min = k > 0.0 ? 1.0 / k : inf;
  out.phi_max_push = std::isfinite(out.r_min) ? std::atan(wheelbase / out.r_min) : 0.0;
  return out;
}

StableSet stable_set(const ContactModel& contact, const LimitSurface& ls, const RobotGeometry& geom) {
  const Vec2 rear_axle{contact.face_x() - geom.bumper_x(), 0.0};
  return stable_set_from_wrenches(friction_cone_edges(contact), ls, rear_axle, geom.wheelbase);
}

ContactResponse contact_response(const std::array<Wrench, 4>& edges, const LimitSurface& ls, const Twist& pusher) {
  ContactResponse r;
  const V3 w0 = required_wrench(pusher, ls);
  // A tangential slide s adds s to vy, and therefore s to the required fy.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  if (degenerate(edges)) {
    // Frictionless: only normal force with torque inside the contact span is transmissible.
    double tau_lo = std::numeric_limits<double>::infinity(), tau_hi = -tau_lo;
    for (const auto& e : edges) {
      tau_lo = std::min(tau_lo, e.tau / e.fx);
      tau_hi = std::max(tau_hi, e.tau / e.fx);
    }
    if (w0.x <= 0.0 || w0.z < tau_lo * w0.x - 1e-12 || w0.z > tau_hi * w0.x + 1e-12) {
      r.broken = true;
      return r;
    }
    lo = hi = -w0.y;
  } else {
    for (const auto& n : cone_facets(edges)) {
      const double b = n.dot(w0);
      if (std::abs(n.y) < 1e-12) {
        if (b < -1e-12) {
          r.broken = true;
          return r;
        }
        continue;
      }
      const double bound = -b / n.y;
      if (n.y > 0) lo = std::max(lo, bound);
      else hi = std::min(hi, bound);
    }
  }
  if (lo > hi + 1e-12) {
    r.broken = true;
    return r;
  }
  if (lo <= 0.0 && hi >= 0.0) r.slide = 0.0;
  else r.slide = lo > 0.0 ? lo : hi;
  return r;
}

}  // namespace mrpush::push
