// Python bindings for the main operations. Scenarios and configs cross the
// boundary as their canonical text, results as plain dicts and tuples.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mrpush/experiment.hpp"
#include "mrpush/push.hpp"

namespace py = pybind11;
using namespace mrpush;

namespace {

io::Config config_of(const std::string& text) { return text.empty() ? io::Config{} : io::parse_config(text); }

py::dict row_dict(const experiment::BatchRow& r) {
  py::dict d;
  d["scenario"] = r.scenario;
  d["variant"] = r.variant;
  d["trials"] = r.trials;
  d["successes"] = r.successes;
  d["success_rate"] = r.success_rate();
  d["makespan_mean"] = r.makespan_mean;
  d["makespan_std"] = r.makespan_std;
  d["min_distance_mean"] = r.min_distance_mean;
  d["min_distance_std"] = r.min_distance_std;
  d["failures"] = r.failures;
  d["row"] = experiment::format_row(r);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-robot block pushing: stable sets, task assignment, planning and simulation";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<PlanningError>(m, "PlanningError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("default_config", [] { return io::format_config(io::Config{}); }, "Canonical text of the built-in config.");
  m.def(
      "check_config", [](const std::string& text) { return io::format_config(io::parse_config(text)); },
      py::arg("text"), "Parse and validate config text; returns the canonical form.");
  m.def(
      "check_scenario",
      [](const std::string& text, const std::string& config) {
        return io::format_scenario(io::parse_scenario(text, config_of(config).geometry));
      },
      py::arg("text"), py::arg("config") = "", "Parse and validate scenario text; returns the canonical form.");

  m.def(
      "stable_set",
      [](double mu, double block_side, double support_mu, const std::string& config) {
        const auto geom = config_of(config).geometry;
        const auto s = push::stable_set(push::ContactModel::line_contact(mu, block_side, support_mu),
                                        push::block_limit_surface(block_side, support_mu), geom);
        py::dict d;
        d["r_min"] = s.r_min;
        d["phi_max_push"] = s.phi_max_push;
        d["curvature_left"] = s.curvature_left;
        d["curvature_right"] = s.curvature_right;
        return d;
      },
      py::arg("mu") = 0.6, py::arg("block_side") = 0.1, py::arg("support_mu") = 0.5, py::arg("config") = "");

  m.def(
      "wrench_to_twist",
      [](double fx, double fy, double tau, double block_side, double support_mu) {
        const auto t = push::wrench_to_twist({fx, fy, tau}, push::block_limit_surface(block_side, support_mu));
        return py::make_tuple(t.vx, t.vy, t.omega);
      },
      py::arg("fx"), py::arg("fy"), py::arg("tau"), py::arg("block_side") = 0.1, py::arg("support_mu") = 0.5);

  m.def(
      "ecbsta_solve",
      [](int width, int height, const std::vector<std::pair<int, int>>& robots,
         const std::vector<std::tuple<std::pair<int, int>, std::pair<int, int>>>& tasks,
         const std::vector<std::pair<int, int>>& obstacles, double w) {
        ta::GridGraph g({0, 0}, 1.0, width, height);
        for (auto [x, y] : obstacles) g.block({x, y});
        std::vector<ta::Cell> rs;
        for (auto [x, y] : robots) rs.push_back({x, y});
        std::vector<ta::DiscreteTask> ts;
        for (const auto& [p, d] : tasks)
          ts.push_back({{p.first, p.second}, {d.first, d.second}, static_cast<int>(ts.size())});
        ta::SolverOptions opts;
        opts.w = w;
        const auto a = ta::ecbsta_solve(g, rs, ts, opts);
        std::vector<std::vector<std::pair<int, int>>> paths;
        for (const auto& p : a.paths) {
          paths.emplace_back();
          for (auto c : p) paths.back().push_back({c.x, c.y});
        }
        py::dict d;
        d["cost"] = a.cost;
        d["assignment"] = a.pairs;
        d["paths"] = paths;
        return d;
      },
      py::arg("width"), py::arg("height"), py::arg("robots"), py::arg("tasks"),
      py::arg("obstacles") = std::vector<std::pair<int, int>>{}, py::arg("w") = 1.3,
      "Task assignment and conflict-free paths on a 4-connected unit grid. Tasks are (pickup, delivery) cells.");

  m.def(
      "plan",
      [](const std::string& scenario, const std::string& variant, const std::string& config) {
        const auto cfg = config_of(config);
        const auto s = io::parse_scenario(scenario, cfg.geometry);
        const auto v = experiment::AlgorithmVariant::named(variant, cfg.mpc.a_col);
        experiment::PlannedRun run;
        {
          py::gil_scoped_release release;
          run = experiment::plan_scenario(s, cfg, v.ta_mode);
        }
        py::dict d;
        d["rounds"] = run.rounds;
        d["makespan"] = run.plan.makespan();
        d["trajectories"] = io::format_trajectories(run.plan);
        d["valid"] = planner::validate_trajectories(run.plan, cfg.geometry, cfg.limits, s.block_side).empty();
        return d;
      },
      py::arg("scenario"), py::arg("variant") = "PuSHR", py::arg("config") = "",
      "Assignment and two-phase plan; trajectories come back as CSV text.");

  m.def(
      "run_batch",
      [](const std::string& scenario, const std::string& variant, int trials, std::uint64_t seed,
         const std::string& config, int threads) {
        const auto cfg = config_of(config);
        const auto s = io::parse_scenario(scenario, cfg.geometry);
        const auto v = experiment::AlgorithmVariant::named(variant, cfg.mpc.a_col);
        experiment::BatchResult res;
        {
          py::gil_scoped_release release;
          res = experiment::run_batch(s, v, cfg, trials, seed, threads);
        }
        py::dict d = row_dict(res.row);
        std::vector<std::string> traces;
        for (const auto& r : res.runs) traces.push_back(io::format_trace(r.trial));
        d["traces"] = traces;
        return d;
      },
      py::arg("scenario"), py::arg("variant") = "PuSHR", py::arg("trials") = 10, py::arg("seed") = 1,
      py::arg("config") = "", py::arg("threads") = 1, "Perturbed closed-loop trials; returns the table row and traces.");
}
