#include "mrpush/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrpush/errors.hpp"

namespace mrpush::mpc {

void MpcConfig::validate() const {
  if (horizon < 1) throw ValidationError("mpc: horizon must be >= 1");
  if (!(dt > 0)) throw ValidationError("mpc: dt must be positive");
  if (a_cte < 0 || a_time < 0 || a_col < 0) throw ValidationError("mpc: weights must be non-negative");
  if (!(d_thr > 0)) throw ValidationError("mpc: d_thr must be positive");
  if (n_v < 1 || n_phi < 1) throw ValidationError("mpc: empty candidate set");
  if (window < 0) throw ValidationError("mpc: window must be non-negative");
}

ReferencePath::ReferencePath(std::vector<Vec2> points, double dt) : points_(std::move(points)), dt_(dt) {
  if (points_.empty()) throw std::invalid_argument("reference path: no points");
  arc_.resize(points_.size());
  arc_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) arc_[i] = arc_[i - 1] + distance(points_[i], points_[i - 1]);
  run_start_.push_back(0);
  Vec2 last{0.0, 0.0};
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vec2 d = points_[i + 1] - points_[i];
    if (d.dot(d) < 1e-12) continue;
    if (d.dot(last) < 0) run_start_.push_back(i);
    last = d;
  }
}

ReferencePath ReferencePath::from_trajectory(const planner::Trajectory& tr, double dt) {
  std::vector<Vec2> pts;
  pts.reserve(tr.size());
  for (const auto& w : tr) pts.push_back(w.pose.position());
  return ReferencePath(std::move(pts), dt);
}

ReferencePath::Projection ReferencePath::project(Vec2 p, std::size_t first, std::size_t last) const {
  last = std::min(last, points_.size());
  Projection best{std::numeric_limits<double>::infinity(), 0.0};
  if (first + 1 >= last) {
    const std::size_t i = std::min(first, points_.size() - 1);
    return {distance(p, points_[i]), arc_[i]};
  }
  for (std::size_t i = first; i + 1 < last; ++i) {
    const Vec2 a = points_[i], b = points_[i + 1];
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    double u = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    const double d = distance(p, a + ab * u);
    if (d < best.distance) best = {d, arc_[i] + u * std::sqrt(len2)};
  }
  return best;
}

std::size_t ReferencePath::index_at(double t) const {
  if (t <= 0) return 0;
  const auto k = static_cast<std::size_t>(std::floor(t / dt_));
  return std::min(k, points_.size() - 1);
}

ReferencePath::Projection ReferencePath::project_near(Vec2 p, double t, int window) const {
  const std::size_t k = index_at(t);
  const std::size_t w = static_cast<std::size_t>(window);
  // Run containing k; at a cusp waypoint the run that leaves it.
  const auto it = std::upper_bound(run_start_.begin(), run_start_.end(), k);
  const std::size_t begin = *std::prev(it);
  const std::size_t end = it == run_start_.end() ? points_.size() : *it + 1;
  const std::size_t first = std::max(k > w ? k - w : 0, begin);
  return project(p, first, std::min(k + w + 2, end));
}

double ReferencePath::hold_time(double t0, double t) const {
  const auto it = std::upper_bound(run_start_.begin(), run_start_.end(), index_at(t0));
  if (it == run_start_.end()) return t;
  // Just short of the cusp, so the projection stays on the arriving run.
  return std::min(t, static_cast<double>(*it) * dt_ - 1e-9);
}

double ReferencePath::progress_at(double t) const {
  if (t <= 0) return 0.0;
  const double u = t / dt_;
  const auto k = static_cast<std::size_t>(std::floor(u));
  if (k + 1 >= points_.size()) return arc_.back();
  return arc_[k] + (u - k) * (arc_[k + 1] - arc_[k]);
}

double cross_track_error(const RobotPose& p, const ReferencePath& ref) { return ref.project(p.position()).distance; }

double timing_cost(const RobotPose& p, const ReferencePath& ref, double t, int window) {
  const auto proj = window >= 0 ? ref.project_near(p.position(), t, window) : ref.project(p.position());
  return ref.progress_at(t) - proj.arc;
}

double collision_cost(Vec2 own, std::span<const Vec2> others, double d_thr) {
  double c = 0.0;
  for (const Vec2& o : others) c += std::max(d_thr - distance(own, o), 0.0);
  return c;
}

std::vector<Control> candidate_controls(const MpcConfig& cfg, const ControlLimits& limits, bool pushing) {
  if (cfg.n_v < 1 || cfg.n_phi < 1) throw ValidationError("mpc: empty candidate set");
  // Reversing while pushing would drop the block, so pushing uses forward speeds only.
  const double v_lo = pushing ? 0.0 : -limits.v_max;
  const double phi = limits.phi_max(pushing);
  std::vector<double> vs, phis;
  for (int i = 0; i < cfg.n_v; ++i)
    vs.push_back(cfg.n_v == 1 ? limits.v_max : v_lo + (limits.v_max - v_lo) * i / (cfg.n_v - 1));
  for (int i = 0; i < cfg.n_phi; ++i) phis.push_back(cfg.n_phi == 1 ? 0.0 : -phi + 2.0 * phi * i / (cfg.n_phi - 1));
  std::vector<Control> out;
  for (double f : phis)
    for (double v : vs) out.push_back({v, f});
  // Preference order doubles as the tie-break: smallest |phi|, then largest v.
  std::stable_sort(out.begin(), out.end(), [](const Control& a, const Control& b) {
    if (std::abs(a.phi) != std::abs(b.phi)) return std::abs(a.phi) < std::abs(b.phi);
    if (a.v != b.v) return a.v > b.v;
    return a.phi < b.phi;
  });
  return out;
}

Solution solve(const WorldSnapshot& snap, const MpcConfig& cfg, const ControlLimits& limits,
               const RobotGeometry& geom, bool pushing) {
  if (!snap.ref || snap.ref->size() == 0) throw std::invalid_argument("mpc: snapshot without reference");
  const auto cands = candidate_controls(cfg, limits, pushing);
  const int N = cfg.horizon;

  // Neighbour predictions are shared by every candidate.
  std::vector<std::vector<Vec2>> predicted(N);
  for (int k = 1; k <= N; ++k)
    for (const auto& o : snap.others) predicted[k - 1].push_back(o.pose.position() + o.velocity * (k * cfg.dt));

  Solution best;
  best.cost = std::numeric_limits<double>::infinity();
  const Control* arg = nullptr;
  for (const Control& u : cands) {
    RobotPose p = snap.pose;
    double j_cte = 0, j_time = 0, j_col = 0;
    for (int k = 1; k <= N; ++k) {
      p = step_kinematics(p, u, cfg.dt, geom);
      // A cusp ahead is a place to stop; the next run is tracked once the schedule gets there.
      const double t = snap.ref->hold_time(snap.t, snap.t + k * cfg.dt);
      const auto proj = snap.ref->project_near(p.position(), t, cfg.window);
      j_cte += proj.distance;
      const double lag = snap.ref->progress_at(t) - proj.arc;
      j_time += cfg.abs_timing ? std::abs(lag) : lag;
      j_col += collision_cost(p.position(), predicted[k - 1], cfg.d_thr);
    }
    const double cost = cfg.a_cte * j_cte + cfg.a_time * j_time + cfg.a_col * j_col;
    if (cost < best.cost) {
      best.cost = cost;
      arg = &u;
    }
  }
  best.controls.assign(N, *arg);
  return best;
}

}  // namespace mrpush::mpc
