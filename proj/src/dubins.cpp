#include "mrpush/dubins.hpp"

#include <cmath>
#include <limits>

namespace mrpush {

namespace {

double mod2pi(double a) {
  const double two_pi = 2.0 * kPi;
  a = std::fmod(a, two_pi);
  return a < 0 ? a + two_pi : a;
}

// Normalised-length words in the standard (alpha, beta, d) frame.
// Each returns false when the word does not exist.
using Word = bool (*)(double, double, double, double (&)[3]);

bool lsl(double a, double b, double d, double (&out)[3]) {
  const double p2 = 2 + d * d - 2 * std::cos(a - b) + 2 * d * (std::sin(a) - std::sin(b));
  if (p2 < 0) return false;
  const double tmp = std::atan2(std::cos(b) - std::cos(a), d + std::sin(a) - std::sin(b));
  out[0] = mod2pi(-a + tmp);
  out[1] = std::sqrt(p2);
  out[2] = mod2pi(b - tmp);
  return true;
}

bool rsr(double a, double b, double d, double (&out)[3]) {
  const double p2 = 2 + d * d - 2 * std::cos(a - b) + 2 * d * (std::sin(b) - std::sin(a));
  if (p2 < 0) return false;
  const double tmp = std::atan2(std::cos(a) - std::cos(b), d - std::sin(a) + std::sin(b));
  out[0] = mod2pi(a - tmp);
  out[1] = std::sqrt(p2);
  out[2] = mod2pi(-b + tmp);
  return true;
}

bool lsr(double a, double b, double d, double (&out)[3]) {
  const double p2 = -2 + d * d + 2 * std::cos(a - b) + 2 * d * (std::sin(a) + std::sin(b));
  if (p2 < 0) return false;
  const double p = std::sqrt(p2);
  const double tmp = std::atan2(-std::cos(a) - std::cos(b), d + std::sin(a) + std::sin(b)) - std::atan2(-2.0, p);
  out[0] = mod2pi(-a + tmp);
  out[1] = p;
  out[2] = mod2pi(-mod2pi(b) + tmp);
  return true;
}

bool rsl(double a, double b, double d, double (&out)[3]) {
  const double p2 = -2 + d * d + 2 * std::cos(a - b) - 2 * d * (std::sin(a) + std::sin(b));
  if (p2 < 0) return false;
  const double p = std::sqrt(p2);
  const double tmp = std::atan2(std::cos(a) + std::cos(b), d - std::sin(a) - std::sin(b)) - std::atan2(2.0, p);
  out[0] = mod2pi(a - tmp);
  out[1] = p;
  out[2] = mod2pi(b - tmp);
  return true;
}

bool rlr(double a, double b, double d, double (&out)[3]) {
  const double tmp = (6.0 - d * d + 2 * std::cos(a - b) + 2 * d * (std::sin(a) - std::sin(b))) / 8.0;
  if (std::abs(tmp) > 1) return false;
  const double p = mod2pi(2 * kPi - std::acos(tmp));
  out[0] = mod2pi(a - std::atan2(std::cos(a) - std::cos(b), d - std::sin(a) + std::sin(b)) + p / 2);
  out[1] = p;
  out[2] = mod2pi(a - b - out[0] + p);
  return true;
}

bool lrl(double a, double b, double d, double (&out)[3]) {
  const double tmp = (6.0 - d * d + 2 * std::cos(a - b) + 2 * d * (-std::sin(a) + std::sin(b))) / 8.0;
  if (std::abs(tmp) > 1) return false;
  const double p = mod2pi(2 * kPi - std::acos(tmp));
  out[0] = mod2pi(-a - std::atan2(std::cos(a) - std::cos(b), d + std::sin(a) - std::sin(b)) + p / 2);
  out[1] = p;
  out[2] = mod2pi(mod2pi(b) - a - out[0] + p);
  return true;
}

}  // namespace

std::optional<DubinsPath> dubins_shortest(const RobotPose& from, const RobotPose& to, double radius) {
  if (!(radius > 0)) return std::nullopt;
  const double dx = to.x - from.x, dy = to.y - from.y;
  const double d = std::hypot(dx, dy) / radius;
  const double th = d > 0 ? mod2pi(std::atan2(dy, dx)) : 0.0;
  const double a = mod2pi(from.theta - th), b = mod2pi(to.theta - th);

  using S = DubinsPath::Segment;
  const struct {
    Word fn;
    std::array<S, 3> types;
  } words[] = {
      {lsl, {S::kLeft, S::kStraight, S::kLeft}},   {lsr, {S::kLeft, S::kStraight, S::kRight}},
      {rsl, {S::kRight, S::kStraight, S::kLeft}},  {rsr, {S::kRight, S::kStraight, S::kRight}},
      {rlr, {S::kRight, S::kLeft, S::kRight}},     {lrl, {S::kLeft, S::kRight, S::kLeft}},
  };
  std::optional<DubinsPath> best;
  double best_len = std::numeric_limits<double>::infinity();
  for (const auto& w : words) {
    double seg[3];
    if (!w.fn(a, b, d, seg)) continue;
    const double len = seg[0] + seg[1] + seg[2];
    if (len < best_len - 1e-12) {
      best_len = len;
      best = DubinsPath{w.types, {seg[0] * radius, seg[1] * radius, seg[2] * radius}, radius};
    }
  }
  return best;
}

RobotPose dubins_sample(const RobotPose& from, const DubinsPath& path, double s) {
  RobotPose p = from;
  for (int i = 0; i < 3 && s > 0; ++i) {
    const double l = std::min(s, path.lengths[i]);
    s -= l;
    if (path.types[i] == DubinsPath::kStraight) {
      p.x += l * std::cos(p.theta);
      p.y += l * std::sin(p.theta);
    } else {
      const double sign = path.types[i] == DubinsPath::kLeft ? 1.0 : -1.0;
      const double dth = sign * l / path.radius;
      const double th1 = p.theta + dth;
      p.x += sign * path.radius * (std::sin(th1) - std::sin(p.theta));
      p.y += sign * path.radius * (std::cos(p.theta) - std::cos(th1));
      p.theta = th1;
    }
  }
  p.theta = normalize_angle(p.theta);
  return p;
}

}  // namespace mrpush
