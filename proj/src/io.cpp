#include "mrpush/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "mrpush/errors.hpp"

namespace mrpush::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& origin, int line) { return origin + ":" + std::to_string(line) + ": "; }

double to_double(const std::string& s, const std::string& ctx) {
  double v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw ValidationError(ctx + "expected a number, got '" + s + "'");
  return v;
}

long long to_int(const std::string& s, const std::string& ctx) {
  long long v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ValidationError(ctx + "expected an integer, got '" + s + "'");
  return v;
}

std::vector<double> numbers(const std::string& s, std::size_t count, const std::string& ctx) {
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(tok, ctx));
  if (out.size() != count)
    throw ValidationError(ctx + "expected " + std::to_string(count) + " numbers, got " + std::to_string(out.size()));
  return out;
}

// One typed config field, shared by the parser and the formatter.
struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&, const std::string&)> set;
};

Field real(std::string sec, std::string key, double Config::*m) {
  return {sec, key, [m](const Config& c) { return format_double(c.*m); },
          [m](Config& c, const std::string& v, const std::string& ctx) { c.*m = to_double(v, ctx); }};
}

template <class Sub, class T>
Field nested(std::string sec, std::string key, Sub Config::*outer, T Sub::*inner) {
  auto get = [outer, inner](const Config& c) -> std::string {
    const T v = c.*outer.*inner;
    if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
    else if constexpr (std::is_floating_point_v<T>) return format_double(v);
    else return std::to_string(v);
  };
  auto set = [outer, inner](Config& c, const std::string& v, const std::string& ctx) {
    if constexpr (std::is_same_v<T, bool>) {
      if (v != "true" && v != "false") throw ValidationError(ctx + "expected true or false, got '" + v + "'");
      c.*outer.*inner = v == "true";
    } else if constexpr (std::is_floating_point_v<T>) {
      c.*outer.*inner = to_double(v, ctx);
    } else {
      const long long x = to_int(v, ctx);
      if (x < 0) throw ValidationError(ctx + "must be non-negative");
      c.*outer.*inner = static_cast<T>(x);
    }
  };
  return {sec, key, get, set};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    using planner::PlannerConfig;
    using mpc::MpcConfig;
    using sim::TrialConfig;
    std::vector<Field> v;
    v.push_back(nested("limits", "v_max", &Config::limits, &ControlLimits::v_max));
    v.push_back(nested("limits", "phi_max_free", &Config::limits, &ControlLimits::phi_max_free));
    v.push_back(nested("limits", "phi_max_push", &Config::limits, &ControlLimits::phi_max_push));
    v.push_back(nested("geometry", "wheelbase", &Config::geometry, &RobotGeometry::wheelbase));
    v.push_back(nested("geometry", "body_length", &Config::geometry, &RobotGeometry::body_length));
    v.push_back(nested("geometry", "body_width", &Config::geometry, &RobotGeometry::body_width));
    v.push_back(nested("geometry", "bumper_offset", &Config::geometry, &RobotGeometry::bumper_offset));
    v.push_back(nested("geometry", "bumper_width", &Config::geometry, &RobotGeometry::bumper_width));
    v.push_back(real("push", "mu", &Config::mu));
    v.push_back(real("push", "support_mu", &Config::support_mu));
    v.push_back(real("ta", "cell_size", &Config::ta_cell));
    v.push_back(nested("ta", "w", &Config::ta, &ta::SolverOptions::w));
    v.push_back(nested("ta", "max_high_level", &Config::ta, &ta::SolverOptions::max_high_level));
    v.push_back(nested("ta", "max_low_level", &Config::ta, &ta::SolverOptions::max_low_level));
    v.push_back(nested("planner", "dt_plan", &Config::planner, &PlannerConfig::dt_plan));
    v.push_back(nested("planner", "xy_resolution", &Config::planner, &PlannerConfig::xy_resolution));
    v.push_back(nested("planner", "theta_resolution", &Config::planner, &PlannerConfig::theta_resolution));
    v.push_back(nested("planner", "turn_penalty", &Config::planner, &PlannerConfig::turn_penalty));
    v.push_back(nested("planner", "reverse_penalty", &Config::planner, &PlannerConfig::reverse_penalty));
    v.push_back(nested("planner", "cusp_penalty", &Config::planner, &PlannerConfig::cusp_penalty));
    v.push_back(nested("planner", "cusp_dwell", &Config::planner, &PlannerConfig::cusp_dwell));
    v.push_back(nested("planner", "clearance", &Config::planner, &PlannerConfig::clearance));
    v.push_back(nested("planner", "block_clearance", &Config::planner, &PlannerConfig::block_clearance));
    v.push_back(nested("planner", "approach_lateral_tol", &Config::planner, &PlannerConfig::approach_lateral_tol));
    v.push_back(nested("planner", "approach_gap_tol", &Config::planner, &PlannerConfig::approach_gap_tol));
    v.push_back(nested("planner", "approach_heading_tol", &Config::planner, &PlannerConfig::approach_heading_tol));
    v.push_back(nested("planner", "approach_run_in", &Config::planner, &PlannerConfig::approach_run_in));
    v.push_back(nested("planner", "push_goal_tol", &Config::planner, &PlannerConfig::push_goal_tol));
    v.push_back(nested("planner", "push_heading_cone", &Config::planner, &PlannerConfig::push_heading_cone));
    v.push_back(nested("planner", "idle_tol", &Config::planner, &PlannerConfig::idle_tol));
    v.push_back(nested("planner", "heuristic_weight", &Config::planner, &PlannerConfig::heuristic_weight));
    v.push_back(nested("planner", "analytic_expansion", &Config::planner, &PlannerConfig::analytic_expansion));
    v.push_back(nested("planner", "analytic_radius_approach", &Config::planner, &PlannerConfig::analytic_radius_approach));
    v.push_back(nested("planner", "analytic_radius_push", &Config::planner, &PlannerConfig::analytic_radius_push));
    v.push_back(nested("planner", "conflict_window", &Config::planner, &PlannerConfig::conflict_window));
    v.push_back(nested("planner", "max_high_level", &Config::planner, &PlannerConfig::max_high_level));
    v.push_back(nested("planner", "max_low_level", &Config::planner, &PlannerConfig::max_low_level));
    v.push_back(nested("planner", "time_limit_s", &Config::planner, &PlannerConfig::time_limit_s));
    v.push_back(nested("mpc", "horizon", &Config::mpc, &MpcConfig::horizon));
    v.push_back(nested("mpc", "dt", &Config::mpc, &MpcConfig::dt));
    v.push_back(nested("mpc", "a_cte", &Config::mpc, &MpcConfig::a_cte));
    v.push_back(nested("mpc", "a_time", &Config::mpc, &MpcConfig::a_time));
    v.push_back(nested("mpc", "a_col", &Config::mpc, &MpcConfig::a_col));
    v.push_back(nested("mpc", "d_thr", &Config::mpc, &MpcConfig::d_thr));
    v.push_back(nested("mpc", "n_v", &Config::mpc, &MpcConfig::n_v));
    v.push_back(nested("mpc", "n_phi", &Config::mpc, &MpcConfig::n_phi));
    v.push_back(nested("mpc", "abs_timing", &Config::mpc, &MpcConfig::abs_timing));
    v.push_back(nested("mpc", "window", &Config::mpc, &MpcConfig::window));
    v.push_back(nested("sim", "perturbation_radius", &Config::trial, &TrialConfig::perturbation_radius));
    v.push_back(nested("sim", "dt_sim", &Config::trial, &TrialConfig::dt_sim));
    v.push_back(nested("sim", "mpc_tick", &Config::trial, &TrialConfig::mpc_tick));
    v.push_back({"sim", "block_model",
                 [](const Config& c) {
                   return std::string(c.trial.block_model == sim::BlockModel::kSticky ? "sticky" : "quasistatic");
                 },
                 [](Config& c, const std::string& v, const std::string& ctx) {
                   if (v == "sticky") c.trial.block_model = sim::BlockModel::kSticky;
                   else if (v == "quasistatic") c.trial.block_model = sim::BlockModel::kQuasistatic;
                   else throw ValidationError(ctx + "block_model must be sticky or quasistatic");
                 }});
    v.push_back(nested("sim", "timeout", &Config::trial, &TrialConfig::timeout));
    v.push_back(nested("sim", "success_tol", &Config::trial, &TrialConfig::success_tol));
    v.push_back(nested("sim", "contact_gap", &Config::trial, &TrialConfig::contact_gap));
    v.push_back(nested("sim", "contact_alignment", &Config::trial, &TrialConfig::contact_alignment));
    v.push_back(nested("sim", "max_resample", &Config::trial, &TrialConfig::max_resample));
    v.push_back({"batch", "trials", [](const Config& c) { return std::to_string(c.trials); },
                 [](Config& c, const std::string& v, const std::string& ctx) {
                   c.trials = static_cast<int>(to_int(v, ctx));
                 }});
    v.push_back({"batch", "base_seed", [](const Config& c) { return std::to_string(c.base_seed); },
                 [](Config& c, const std::string& v, const std::string& ctx) {
                   const long long s = to_int(v, ctx);
                   if (s < 0) throw ValidationError(ctx + "base_seed must be non-negative");
                   c.base_seed = static_cast<std::uint64_t>(s);
                 }});
    return v;
  }();
  return f;
}

}  // namespace

std::string format_double(double v) {
  if (v == 0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void Config::validate() const {
  limits.validate();
  geometry.validate(0.1);
  if (!(mu >= 0) || !(support_mu > 0)) throw ValidationError("config: push.mu must be >= 0 and push.support_mu > 0");
  if (!(ta_cell > 0)) throw ValidationError("config: ta.cell_size must be positive");
  if (!(ta.w >= 1)) throw ValidationError("config: ta.w must be at least 1");
  if (!(planner.dt_plan > 0)) throw ValidationError("config: planner.dt_plan must be positive");
  if (planner.cusp_dwell < 0 || planner.conflict_window < 0 || planner.approach_run_in < 0)
    throw ValidationError("config: planner.cusp_dwell, conflict_window and approach_run_in must be non-negative");
  mpc.validate();
  trial.validate();
  if (trials < 1) throw ValidationError("config: batch.trials must be at least 1");
}

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile f;
  f.sections.push_back({"", {}});
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ValidationError(where(origin, line) + "unterminated section header");
      f.sections.push_back({trim(s.substr(1, s.size() - 2)), {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError(where(origin, line) + "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ValidationError(where(origin, line) + "empty key");
    f.sections.back().second.push_back({key, trim(s.substr(eq + 1)), line});
  }
  return f;
}

Config parse_config(const std::string& text, const std::string& origin) {
  const auto kv = KeyValueFile::parse(text, origin);
  Config cfg;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [section, entries] : kv.sections) {
    for (const auto& e : entries) {
      const std::string ctx = where(origin, e.line) + section + "." + e.key + ": ";
      const auto& fs = fields();
      auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return f.section == section && f.key == e.key; });
      if (it == fs.end()) throw ValidationError(where(origin, e.line) + "unknown key " + section + "." + e.key);
      if (!seen.insert({section, e.key}).second) throw ValidationError(ctx + "duplicate key");
      it->set(cfg, e.value, ctx);
    }
  }
  cfg.validate();
  return cfg;
}

Config load_config(const std::filesystem::path& path) { return parse_config(read_file(path), path.string()); }

std::string format_config(const Config& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

Scenario parse_scenario(const std::string& text, const RobotGeometry& geom, const std::string& origin) {
  const auto kv = KeyValueFile::parse(text, origin);
  Scenario s;
  bool have_ws = false;
  for (const auto& [section, entries] : kv.sections) {
    for (const auto& e : entries) {
      const std::string ctx = where(origin, e.line) + (section.empty() ? "" : section + ".") + e.key + ": ";
      if (section.empty()) {
        if (e.key == "id") s.id = e.value;
        else if (e.key == "block_side") s.block_side = to_double(e.value, ctx);
        else throw ValidationError(ctx + "unknown key");
      } else if (section == "workspace") {
        have_ws = true;
        const double v = to_double(e.value, ctx);
        if (e.key == "xmin") s.workspace.xmin = v;
        else if (e.key == "ymin") s.workspace.ymin = v;
        else if (e.key == "xmax") s.workspace.xmax = v;
        else if (e.key == "ymax") s.workspace.ymax = v;
        else throw ValidationError(ctx + "unknown key");
      } else if (section == "robots") {
        if (e.key != "r" + std::to_string(s.robots.size()))
          throw ValidationError(ctx + "expected r" + std::to_string(s.robots.size()));
        const auto n = numbers(e.value, 3, ctx);
        s.robots.push_back({n[0], n[1], n[2]});
      } else if (section == "blocks") {
        if (e.key != "b" + std::to_string(s.blocks_start.size()))
          throw ValidationError(ctx + "expected b" + std::to_string(s.blocks_start.size()));
        const auto n = numbers(e.value, 4, ctx);
        s.blocks_start.push_back({n[0], n[1]});
        s.blocks_goal.push_back({n[2], n[3]});
      } else {
        throw ValidationError(where(origin, e.line) + "unknown section [" + section + "]");
      }
    }
  }
  if (!have_ws) throw ValidationError(origin + ": missing [workspace] section");
  try {
    s.validate(geom);
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, const RobotGeometry& geom) {
  return parse_scenario(read_file(path), geom, path.string());
}

std::string format_scenario(const Scenario& s) {
  std::string out;
  out += "id = " + s.id + "\n";
  out += "block_side = " + format_double(s.block_side) + "\n\n[workspace]\n";
  out += "xmin = " + format_double(s.workspace.xmin) + "\n";
  out += "ymin = " + format_double(s.workspace.ymin) + "\n";
  out += "xmax = " + format_double(s.workspace.xmax) + "\n";
  out += "ymax = " + format_double(s.workspace.ymax) + "\n\n[robots]\n";
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    const auto& r = s.robots[i];
    out += "r" + std::to_string(i) + " = " + format_double(r.x) + " " + format_double(r.y) + " " +
           format_double(r.theta) + "\n";
  }
  out += "\n[blocks]\n";
  for (std::size_t j = 0; j < s.blocks_start.size(); ++j) {
    out += "b" + std::to_string(j) + " = " + format_double(s.blocks_start[j].x) + " " +
           format_double(s.blocks_start[j].y) + " " + format_double(s.blocks_goal[j].x) + " " +
           format_double(s.blocks_goal[j].y) + "\n";
  }
  return out;
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) { write_file(path, format_scenario(s)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("error writing " + path.string());
}

std::string format_trajectories(const planner::TrajectorySet& set) {
  std::string out = "# dt " + format_double(set.dt) + "\n";
  for (std::size_t r = 0; r < set.assignment.size(); ++r) {
    out += "# round " + std::to_string(r);
    const auto b = r < set.rounds.size() ? set.rounds[r] : planner::RoundBoundary{};
    out += " " + std::to_string(b.approach_end) + " " + std::to_string(b.push_end);
    for (auto [robot, block] : set.assignment[r]) out += " " + std::to_string(robot) + ":" + std::to_string(block);
    out += "\n";
  }
  out += "robot,t,x,y,theta,v,phi,pushing,block,lateral,kind\n";
  for (std::size_t i = 0; i < set.robots.size(); ++i) {
    for (const auto& w : set.robots[i]) {
      out += std::to_string(i) + "," + std::to_string(w.t) + "," + format_double(w.pose.x) + "," +
             format_double(w.pose.y) + "," + format_double(w.pose.theta) + "," + format_double(w.control.v) + "," +
             format_double(w.control.phi) + "," + (w.pushing ? "1" : "0") + "," + std::to_string(w.block) + "," +
             format_double(w.block_lateral) + "," + planner::to_string(w.kind) + "\n";
    }
  }
  return out;
}

planner::TrajectorySet parse_trajectories(const std::string& text, const std::string& origin) {
  planner::TrajectorySet set;
  set.robots.clear();
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const std::string ctx = where(origin, line);
    if (s[0] == '#') {
      std::istringstream h(s.substr(1));
      std::string tag;
      h >> tag;
      if (tag == "dt") {
        std::string v;
        h >> v;
        set.dt = to_double(v, ctx);
      } else if (tag == "round") {
        int idx = 0;
        planner::RoundBoundary b;
        h >> idx >> b.approach_end >> b.push_end;
        if (!h || idx != static_cast<int>(set.assignment.size())) throw ValidationError(ctx + "malformed round line");
        std::map<int, int> m;
        std::string pair;
        while (h >> pair) {
          const auto colon = pair.find(':');
          if (colon == std::string::npos) throw ValidationError(ctx + "malformed robot:block pair");
          m[static_cast<int>(to_int(pair.substr(0, colon), ctx))] = static_cast<int>(to_int(pair.substr(colon + 1), ctx));
        }
        set.assignment.push_back(m);
        set.rounds.push_back(b);
      }
      continue;
    }
    if (!header) {
      header = true;
      if (s.rfind("robot,", 0) == 0) continue;
    }
    std::vector<std::string> cols;
    std::stringstream ls(s);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
    if (cols.size() != 11) throw ValidationError(ctx + "expected 11 columns, got " + std::to_string(cols.size()));
    const auto robot = static_cast<std::size_t>(to_int(cols[0], ctx));
    if (robot > set.robots.size()) throw ValidationError(ctx + "robots must appear in order");
    if (robot == set.robots.size()) set.robots.emplace_back();
    planner::TimedWaypoint w;
    w.t = static_cast<int>(to_int(cols[1], ctx));
    w.pose = {to_double(cols[2], ctx), to_double(cols[3], ctx), to_double(cols[4], ctx)};
    w.control = {to_double(cols[5], ctx), to_double(cols[6], ctx)};
    w.pushing = cols[7] == "1";
    w.block = static_cast<int>(to_int(cols[8], ctx));
    w.block_lateral = to_double(cols[9], ctx);
    bool known = false;
    for (int k = 0; k <= static_cast<int>(planner::PrimitiveKind::kBackRight); ++k) {
      const auto kind = static_cast<planner::PrimitiveKind>(k);
      if (cols[10] == planner::to_string(kind)) {
        w.kind = kind;
        known = true;
      }
    }
    if (!known) throw ValidationError(ctx + "unknown primitive '" + cols[10] + "'");
    set.robots[robot].push_back(w);
  }
  return set;
}

std::string format_trace(const sim::TrialRecord& rec) {
  std::string out = "t,kind,id,x,y,theta,v,phi\n";
  for (const auto& s : rec.trace) {
    const std::string t = format_double(s.t);
    for (std::size_t i = 0; i < s.robots.size(); ++i) {
      const auto& p = s.robots[i];
      const auto u = i < s.controls.size() ? s.controls[i] : Control{};
      out += t + ",robot," + std::to_string(i) + "," + format_double(p.x) + "," + format_double(p.y) + "," +
             format_double(p.theta) + "," + format_double(u.v) + "," + format_double(u.phi) + "\n";
    }
    for (std::size_t j = 0; j < s.blocks.size(); ++j) {
      const auto& b = s.blocks[j];
      out += t + ",block," + std::to_string(j) + "," + format_double(b.x) + "," + format_double(b.y) + "," +
             format_double(b.yaw) + ",,\n";
    }
  }
  return out;
}

std::string digest(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mrpush::io
