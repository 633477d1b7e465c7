#include "mrpush/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include <json.hpp>

#include "mrpush/errors.hpp"

namespace mrpush::experiment {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::map<int, int> as_map(const std::vector<int>& robot_to_block) {
  std::map<int, int> m;
  for (std::size_t i = 0; i < robot_to_block.size(); ++i)
    if (robot_to_block[i] >= 0) m[static_cast<int>(i)] = robot_to_block[i];
  return m;
}

// Later rounds after a fixed first round: remaining blocks go to the optimal solver,
// with each robot starting where its first task delivered.
Rounds complete_rounds(const ta::Discretization& d, const std::map<int, int>& first, const ta::SolverOptions& opts) {
  Rounds rounds{first};
  std::vector<ta::Cell> starts = d.robots;
  std::vector<ta::DiscreteTask> rest;
  for (const auto& t : d.tasks) {
    bool taken = false;
    for (auto [robot, block] : first) {
      if (block == t.block_id) {
        starts[robot] = t.delivery;
        taken = true;
      }
    }
    if (!taken) rest.push_back(t);
  }
  if (rest.empty()) return rounds;
  for (const auto& a : ta::assign_asymmetric(d.graph, starts, rest, opts)) rounds.push_back(a.pairs);
  return rounds;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / v.size();
}

double stdev(const std::vector<double>& v) {
  if (v.size() < 2) return v.empty() ? kNaN : 0.0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

AlgorithmVariant AlgorithmVariant::named(const std::string& name, double a_col) {
  if (name == "GP") return {name, TaMode::kManualMedian, 0.0};
  if (name == "GP-CA") return {name, TaMode::kManualMedian, a_col};
  if (name == "PuSHR") return {name, TaMode::kOptimal, a_col};
  throw ValidationError("unknown algorithm variant '" + name + "' (expected GP, GP-CA or PuSHR)");
}

void AlgorithmVariant::validate() const {
  if (!(a_col >= 0) || !std::isfinite(a_col)) throw ValidationError("variant " + name + ": a_col must be finite and >= 0");
  if (name == "GP" && a_col != 0) throw ValidationError("variant GP requires a_col = 0");
  if ((name == "GP" || name == "GP-CA") && ta_mode != TaMode::kManualMedian)
    throw ValidationError("variant " + name + " requires manual-median assignment");
  if (name == "PuSHR" && (ta_mode != TaMode::kOptimal || !(a_col > 0)))
    throw ValidationError("variant PuSHR requires optimal assignment and a_col > 0");
}

Rounds choose_rounds(const Scenario& scenario, const io::Config& cfg, TaMode mode) {
  const auto d = ta::discretize(scenario, cfg.ta_cell);
  if (mode == TaMode::kOptimal) {
    Rounds rounds;
    for (const auto& a : ta::assign_asymmetric(d.graph, d.robots, d.tasks, cfg.ta)) rounds.push_back(a.pairs);
    return rounds;
  }
  const auto ranked = ta::rank_assignments(d.graph, d.robots, d.tasks);
  if (ranked.empty()) throw PlanningError("no assignment to rank");
  return complete_rounds(d, as_map(ranked[(ranked.size() - 1) / 2].robot_to_block), cfg.ta);
}

PlannedRun plan_scenario(const Scenario& scenario, const io::Config& cfg, TaMode mode) {
  const auto t0 = std::chrono::steady_clock::now();
  PlannedRun out;
  out.rounds = choose_rounds(scenario, cfg, mode);
  out.plan = planner::plan_two_phase(scenario, out.rounds, cfg.limits, cfg.geometry, cfg.planner);
  out.planning_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::string to_json(const RunRecord& rec, bool with_wall_clock) {
  nlohmann::ordered_json j;
  j["scenario"] = rec.scenario;
  j["variant"] = rec.variant;
  j["seed"] = rec.seed;
  auto rounds = nlohmann::ordered_json::array();
  for (const auto& r : rec.rounds) {
    auto pairs = nlohmann::ordered_json::array();
    for (auto [robot, block] : r) pairs.push_back({robot, block});
    rounds.push_back(pairs);
  }
  j["assignment"] = rounds;
  j["plan_digest"] = rec.plan_digest;
  nlohmann::ordered_json t;
  t["success"] = rec.trial.success;
  t["makespan"] = number_or_null(rec.trial.success ? rec.trial.makespan : kNaN);
  t["min_distance"] = number_or_null(rec.trial.min_distance);
  t["failure"] = rec.trial.failure ? nlohmann::ordered_json(sim::to_string(*rec.trial.failure))
                                   : nlohmann::ordered_json(nullptr);
  auto events = nlohmann::ordered_json::array();
  for (const auto& e : rec.trial.events) {
    nlohmann::ordered_json ev;
    ev["t"] = e.t;
    ev["kind"] = sim::to_string(e.kind);
    ev["robot"] = e.robot;
    ev["other"] = e.other;
    ev["detail"] = e.detail;
    events.push_back(ev);
  }
  t["events"] = events;
  j["trial"] = t;
  if (with_wall_clock) j["planning_seconds"] = rec.planning_seconds;
  j["scenario_text"] = rec.scenario_text;
  j["config_text"] = rec.config_text;
  return j.dump(2) + "\n";
}

std::string row_header() {
  return "scenario | variant | trials | success | makespan_s (mean +- std) | min_distance_m (mean +- std) | failures";
}

std::string format_row(const BatchRow& row) {
  std::string failures;
  for (const auto& [kind, count] : row.failures) {
    if (!failures.empty()) failures += " ";
    failures += kind + "=" + std::to_string(count);
  }
  if (failures.empty()) failures = "-";
  return row.scenario + " | " + row.variant + " | " + std::to_string(row.trials) + " | " + fixed(row.success_rate(), 2) +
         " | " + fixed(row.makespan_mean, 2) + " +- " + fixed(row.makespan_std, 2) + " | " +
         fixed(row.min_distance_mean, 2) + " +- " + fixed(row.min_distance_std, 2) + " | " + failures;
}

BatchResult run_batch(const Scenario& scenario, const AlgorithmVariant& variant, const io::Config& cfg, int trials,
                      std::uint64_t base_seed, int threads) {
  if (trials < 1) throw ValidationError("batch: trials must be at least 1");
  variant.validate();
  cfg.validate();
  BatchResult out;
  out.row.scenario = scenario.id;
  out.row.variant = variant.name;
  out.row.trials = trials;

  mpc::MpcConfig mpc_cfg = cfg.mpc;
  mpc_cfg.a_col = variant.a_col;
  io::Config effective = cfg;
  effective.mpc = mpc_cfg;
  const std::string scenario_text = io::format_scenario(scenario);
  const std::string config_text = io::format_config(effective);

  std::string plan_digest;
  try {
    out.planned = plan_scenario(scenario, cfg, variant.ta_mode);
    out.planned_ok = true;
    plan_digest = io::digest(io::format_trajectories(out.planned.plan));
  } catch (const PlanningError& e) {
    out.planning_error = e.what();
  }

  out.runs.resize(trials);
  for (int k = 0; k < trials; ++k) {
    RunRecord& r = out.runs[k];
    r.scenario = scenario.id;
    r.variant = variant.name;
    r.seed = base_seed + static_cast<std::uint64_t>(k);
    r.rounds = out.planned.rounds;
    r.plan_digest = plan_digest;
    r.planning_seconds = out.planned.planning_seconds;
    r.scenario_text = scenario_text;
    r.config_text = config_text;
  }

  if (out.planned_ok) {
    const auto physics = sim::PushPhysics::make(cfg.mu, cfg.support_mu, scenario.block_side, cfg.geometry);
    auto work = [&](int first, int stride) {
      for (int k = first; k < trials; k += stride) {
        sim::TrialConfig tc = cfg.trial;
        tc.seed = out.runs[k].seed;
        out.runs[k].trial = sim::run_trial(scenario, out.planned.plan, tc, mpc_cfg, cfg.limits, cfg.geometry, physics);
      }
    };
    const int n = std::max(1, std::min(threads, trials));
    std::vector<std::thread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(work, w, n);
    work(0, n);
    for (auto& th : pool) th.join();
  }

  std::vector<double> makespans, dists;
  for (const auto& r : out.runs) {
    if (r.trial.success) {
      ++out.row.successes;
      makespans.push_back(r.trial.makespan);
      if (std::isfinite(r.trial.min_distance)) dists.push_back(r.trial.min_distance);
    } else {
      ++out.row.failures[out.planned_ok && r.trial.failure ? sim::to_string(*r.trial.failure) : "planning"];
    }
  }
  out.row.makespan_mean = mean(makespans);
  out.row.makespan_std = stdev(makespans);
  out.row.min_distance_mean = mean(dists);
  out.row.min_distance_std = stdev(dists);
  return out;
}

std::vector<ScatterPoint> assignment_scatter(const Scenario& scenario, const io::Config& cfg) {
  const auto d = ta::discretize(scenario, cfg.ta_cell);
  std::vector<ScatterPoint> pts;
  for (const auto& ra : ta::rank_assignments(d.graph, d.robots, d.tasks)) {
    ScatterPoint p{ra.robot_to_block, ra.cost, kNaN};
    try {
      const auto rounds = complete_rounds(d, as_map(ra.robot_to_block), cfg.ta);
      p.makespan = planner::plan_two_phase(scenario, rounds, cfg.limits, cfg.geometry, cfg.planner).makespan();
    } catch (const PlanningError&) {
    }
    pts.push_back(p);
  }
  return pts;
}

std::string format_scatter(const std::vector<ScatterPoint>& pts) {
  std::string out = "rank,assignment,cost,makespan_s\n";
  for (std::size_t k = 0; k < pts.size(); ++k) {
    std::string a;
    for (int b : pts[k].robot_to_block) a += (a.empty() ? "" : " ") + std::to_string(b);
    out += std::to_string(k) + "," + a + "," + std::to_string(pts[k].cost) + "," +
           (std::isfinite(pts[k].makespan) ? io::format_double(pts[k].makespan) : "nan") + "\n";
  }
  return out;
}

double pearson(const std::vector<ScatterPoint>& pts) {
  std::vector<double> x, y;
  for (const auto& p : pts) {
    if (!std::isfinite(p.makespan)) continue;
    x.push_back(static_cast<double>(p.cost));
    y.push_back(p.makespan);
  }
  if (x.size() < 2) return kNaN;
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0 || syy == 0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

std::string overview_svg(const Scenario& s, const planner::TrajectorySet& plan, const RobotGeometry& geom) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const double k = 100.0;  // px per metre
  const auto& ws = s.workspace;
  auto px = [&](Vec2 p) {
    return io::format_double(std::round((p.x - ws.xmin) * k * 100) / 100) + "," +
           io::format_double(std::round((ws.ymax - p.y) * k * 100) / 100);
  };
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + io::format_double(ws.width() * k) +
                    "\" height=\"" + io::format_double(ws.height() * k) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + io::format_double(ws.width() * k) + "\" height=\"" +
         io::format_double(ws.height() * k) + "\" fill=\"white\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < plan.robots.size(); ++i) {
    const char* c = palette[i % 6];
    std::string pts;
    for (const auto& w : plan.robots[i]) pts += (pts.empty() ? "" : " ") + px(w.pose.position());
    out += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    if (i < s.robots.size()) {
      std::string body;
      for (Vec2 q : body_rect(s.robots[i], geom).corners()) body += (body.empty() ? "" : " ") + px(q);
      out += "<polygon fill=\"none\" stroke=\"" + std::string(c) + "\" points=\"" + body + "\"/>\n";
    }
  }
  const double half = 0.5 * s.block_side * k;
  for (std::size_t j = 0; j < s.blocks_start.size(); ++j) {
    const Vec2 a = s.blocks_start[j], g = s.blocks_goal[j];
    out += "<rect x=\"" + io::format_double(std::round(((a.x - ws.xmin) * k - half) * 100) / 100) + "\" y=\"" +
           io::format_double(std::round(((ws.ymax - a.y) * k - half) * 100) / 100) + "\" width=\"" +
           io::format_double(2 * half) + "\" height=\"" + io::format_double(2 * half) + "\" fill=\"gray\"/>\n";
    const auto gp = px(g);
    const auto comma = gp.find(',');
    out += "<circle cx=\"" + gp.substr(0, comma) + "\" cy=\"" + gp.substr(comma + 1) + "\" r=\"" +
           io::format_double(half) + "\" fill=\"none\" stroke=\"gray\" stroke-width=\"2\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

std::vector<std::filesystem::path> export_records(const std::vector<RunRecord>& records, const Scenario& scenario,
                                                  const planner::TrajectorySet& plan, const RobotGeometry& geom,
                                                  const std::filesystem::path& out_dir) {
  if (records.empty()) throw ValidationError("export: no records");
  std::vector<std::filesystem::path> written;
  const std::string svg = overview_svg(scenario, plan, geom);
  for (std::size_t k = 0; k < records.size(); ++k) {
    const std::string stem = records[k].scenario + "_" + records[k].variant + "_" + std::to_string(records[k].seed);
    const auto trace = out_dir / ("trace_" + stem + ".csv");
    const auto json = out_dir / ("record_" + stem + ".json");
    const auto graphic = out_dir / ("overview_" + stem + ".svg");
    io::write_file(trace, io::format_trace(records[k].trial));
    io::write_file(json, to_json(records[k]));
    io::write_file(graphic, svg);
    written.insert(written.end(), {trace, json, graphic});
  }
  return written;
}

}  // namespace mrpush::experiment
