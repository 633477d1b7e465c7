// Command-line front end: plan, simulate, batch, stable-set, rank-ta, export.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrpush/experiment.hpp"
#include "mrpush/push.hpp"

using namespace mrpush;
namespace fs = std::filesystem;

namespace {

fs::path out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("MRPUSH_OUT_DIR"); env && *env) return env;
  return ".";
}

io::Config config_from(const std::string& path) { return path.empty() ? io::Config{} : io::load_config(path); }

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) std::cout << text;
  else io::write_file(path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot block pushing: assignment, planning and closed-loop simulation"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Config file (defaults apply when omitted)");

  std::string scenario_path, variant_name = "PuSHR", output, traj_path, outdir;
  std::uint64_t seed = 1;
  int trials = 0, threads = 1;
  bool records = false;

  auto* plan = app.add_subcommand("plan", "Assign tasks and plan trajectories");
  plan->add_option("scenario", scenario_path)->required();
  plan->add_option("--variant", variant_name, "GP, GP-CA or PuSHR (selects the assignment mode)");
  plan->add_option("-o,--output", output, "Trajectory file (stdout when omitted)");

  auto* simulate = app.add_subcommand("simulate", "Run one closed-loop trial of a planned trajectory set");
  simulate->add_option("scenario", scenario_path)->required();
  simulate->add_option("trajectories", traj_path)->required();
  simulate->add_option("--variant", variant_name);
  simulate->add_option("--seed", seed);
  simulate->add_option("-o,--output", output, "Record JSON (stdout when omitted)");
  std::string trace_path;
  simulate->add_option("--trace", trace_path, "Also write the pose trace here");

  auto* batch = app.add_subcommand("batch", "Perturbed trials of one variant; prints one table row");
  batch->add_option("scenario", scenario_path)->required();
  batch->add_option("--variant", variant_name);
  batch->add_option("--trials", trials, "Overrides batch.trials");
  batch->add_option("--seed", seed, "First seed");
  batch->add_option("--threads", threads);
  batch->add_flag("--records", records, "Write per-trial records and traces");
  batch->add_option("--out-dir", outdir);

  double mu = 0.6, support_mu = 0.5, side = 0.1;
  auto* stable = app.add_subcommand("stable-set", "Report the stable pushing set");
  stable->add_option("--mu", mu);
  stable->add_option("--support-mu", support_mu);
  stable->add_option("--block-side", side);

  auto* rank = app.add_subcommand("rank-ta", "Assignment cost vs plan makespan for every first-round assignment");
  rank->add_option("scenario", scenario_path)->required();
  rank->add_option("-o,--output", output, "CSV (stdout when omitted)");

  std::vector<std::string> record_paths;
  auto* exp = app.add_subcommand("export", "Re-run records and write traces and overview graphics");
  exp->add_option("records", record_paths)->required();
  exp->add_option("--out-dir", outdir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    io::Config cfg = config_from(config_path);
    auto variant = [&] { return experiment::AlgorithmVariant::named(variant_name, cfg.mpc.a_col); };

    if (*plan) {
      const Scenario s = io::load_scenario(scenario_path, cfg.geometry);
      const auto run = experiment::plan_scenario(s, cfg, variant().ta_mode);
      emit(io::format_trajectories(run.plan), output);
      std::fprintf(stderr, "makespan %.2f s, planned in %.2f s\n", run.plan.makespan(), run.planning_seconds);
    } else if (*simulate) {
      const Scenario s = io::load_scenario(scenario_path, cfg.geometry);
      const auto traj = io::parse_trajectories(io::read_file(traj_path), traj_path);
      const std::string bad = planner::validate_trajectories(traj, cfg.geometry, cfg.limits, s.block_side);
      if (!bad.empty()) throw ValidationError(traj_path + ": " + bad);
      const auto v = variant();
      cfg.mpc.a_col = v.a_col;
      cfg.trial.seed = seed;
      const auto physics = sim::PushPhysics::make(cfg.mu, cfg.support_mu, s.block_side, cfg.geometry);
      experiment::RunRecord rec;
      rec.scenario = s.id;
      rec.variant = v.name;
      rec.seed = seed;
      rec.rounds = traj.assignment;
      rec.plan_digest = io::digest(io::format_trajectories(traj));
      rec.trial = sim::run_trial(s, traj, cfg.trial, cfg.mpc, cfg.limits, cfg.geometry, physics);
      rec.scenario_text = io::format_scenario(s);
      rec.config_text = io::format_config(cfg);
      emit(experiment::to_json(rec), output);
      if (!trace_path.empty()) io::write_file(trace_path, io::format_trace(rec.trial));
      return rec.trial.success ? 0 : 1;
    } else if (*batch) {
      const Scenario s = io::load_scenario(scenario_path, cfg.geometry);
      const auto res = experiment::run_batch(s, variant(), cfg, trials > 0 ? trials : cfg.trials, seed, threads);
      std::cout << experiment::row_header() << "\n" << experiment::format_row(res.row) << "\n";
      if (!res.planned_ok) std::fprintf(stderr, "planning failed: %s\n", res.planning_error.c_str());
      if (records) {
        const auto dir = out_dir(outdir);
        const auto files = res.planned_ok
                               ? experiment::export_records(res.runs, s, res.planned.plan, cfg.geometry, dir)
                               : std::vector<fs::path>{};
        io::write_file(dir / ("row_" + s.id + "_" + res.row.variant + ".txt"),
                       experiment::row_header() + "\n" + experiment::format_row(res.row) + "\n");
        std::fprintf(stderr, "wrote %zu files to %s\n", files.size() + 1, dir.string().c_str());
      }
    } else if (*stable) {
      const auto contact = push::ContactModel::line_contact(mu, side, support_mu);
      const auto ls = push::block_limit_surface(side, support_mu);
      const auto set = push::stable_set(contact, ls, cfg.geometry);
      std::printf("mu %.3f\nblock_side %.3f\nr_min_m %.4f\nphi_max_push_rad %.4f\n", mu, side, set.r_min,
                  set.phi_max_push);
      std::printf("curvature_left %.4f\ncurvature_right %.4f\n", set.curvature_left, set.curvature_right);
      std::printf("configured_phi_max_push_rad %.4f\n", cfg.limits.phi_max_push);
    } else if (*rank) {
      const Scenario s = io::load_scenario(scenario_path, cfg.geometry);
      const auto pts = experiment::assignment_scatter(s, cfg);
      emit(experiment::format_scatter(pts), output);
      std::fprintf(stderr, "pearson %.3f over %zu assignments\n", experiment::pearson(pts), pts.size());
    } else if (*exp) {
      const auto dir = out_dir(outdir);
      std::size_t n = 0;
      for (const auto& path : record_paths) {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(io::read_file(path));
        } catch (const nlohmann::json::exception& e) {
          throw ValidationError(path + ": " + e.what());
        }
        const io::Config rc = io::parse_config(j.at("config_text").get<std::string>(), path + "#config");
        const Scenario s = io::parse_scenario(j.at("scenario_text").get<std::string>(), rc.geometry, path + "#scenario");
        experiment::RunRecord rec;
        rec.scenario = s.id;
        rec.variant = j.at("variant").get<std::string>();
        rec.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& round : j.at("assignment")) {
          std::map<int, int> m;
          for (const auto& p : round) m[p.at(0).get<int>()] = p.at(1).get<int>();
          rec.rounds.push_back(m);
        }
        const auto traj = planner::plan_two_phase(s, rec.rounds, rc.limits, rc.geometry, rc.planner);
        rec.plan_digest = io::digest(io::format_trajectories(traj));
        sim::TrialConfig tc = rc.trial;
        tc.seed = rec.seed;
        const auto physics = sim::PushPhysics::make(rc.mu, rc.support_mu, s.block_side, rc.geometry);
        rec.trial = sim::run_trial(s, traj, tc, rc.mpc, rc.limits, rc.geometry, physics);
        rec.scenario_text = io::format_scenario(s);
        rec.config_text = io::format_config(rc);
        n += experiment::export_records({rec}, s, traj, rc.geometry, dir).size();
      }
      std::fprintf(stderr, "wrote %zu files to %s\n", n, dir.string().c_str());
    }
  } catch (const PlanningError& e) {
    std::fprintf(stderr, "planning failed: %s\n", e.what());
    return 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 3;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  }
  return 0;
}
