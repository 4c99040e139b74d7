// eot: command-line front end (simulate, track, evaluate, montecarlo).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "eot/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void setup_logging() {
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("EOT_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw eot::Error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw eot::Error(path.string() + ": " + e.what());
  }
}

struct CommonOptions {
  std::string config;
  std::string preset;
  std::string out;
  long long seed = -1;
  bool ppp_mode = false;
};

eot::RunConfig resolve_config(const CommonOptions& o) {
  eot::RunConfig cfg = o.config.empty() ? eot::preset(o.preset.empty() ? "pd09g10" : o.preset)
                                        : eot::load_run_config(o.config);
  if (!o.config.empty() && !o.preset.empty()) spdlog::warn("--config given, ignoring --preset {}", o.preset);
  if (o.seed >= 0) {
    cfg.base_seed = static_cast<std::uint64_t>(o.seed);
    cfg.scenario.seed = static_cast<std::uint64_t>(o.seed);
  }
  if (o.ppp_mode) cfg.filter.ppp_mode = true;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool with_out = true) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--preset", o.preset, "pd09g10 | pd09g05 | pd08g10 | desk")
      ->check(CLI::IsMember({"pd09g10", "pd09g05", "pd08g10", "desk"}));
  cmd->add_option("--seed", o.seed, "overrides the scenario seed and the base seed");
  cmd->add_flag("--ppp-mode", o.ppp_mode, "run the filter with detection fixed to 1 (PPP baseline)");
  if (with_out) cmd->add_option("--out", o.out, "output path")->required();
}

int cmd_simulate(const CommonOptions& o) {
  const eot::RunConfig cfg = resolve_config(o);
  eot::Rng truth_rng = eot::stream_rng(cfg.scenario.seed, eot::Stream::Truth);
  const auto truth = eot::generate_ground_truth(cfg.scenario, cfg.model, truth_rng);
  eot::Rng meas_rng = eot::stream_rng(cfg.base_seed, eot::Stream::Measurements);
  const auto scans = eot::generate_measurement_sets(truth, cfg.model, meas_rng);
  json out{{"config", eot::run_config_to_json(cfg)}, {"truth", eot::truth_to_json(truth)},
           {"scans", eot::scans_to_json(scans)}};
  eot::write_text(o.out, out.dump(1) + "\n");
  spdlog::info("wrote {} steps, {} objects to {}", scans.size(), truth.objects.size(), o.out);
  return 0;
}

int cmd_track(const CommonOptions& o, const std::string& scans_path) {
  const json scenario = read_json(scans_path);
  eot::RunConfig cfg;
  if (o.config.empty() && o.preset.empty() && scenario.contains("config")) {
    cfg = eot::parse_run_config(scenario["config"].dump());
    if (o.seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(o.seed);
    if (o.ppp_mode) cfg.filter.ppp_mode = true;
  } else {
    cfg = resolve_config(o);
  }
  const auto scans = eot::scans_from_json(scenario.at("scans"));
  eot::Rng rng = eot::stream_rng(cfg.base_seed, eot::Stream::Filter);
  const auto steps = eot::run_filter(scans, eot::filter_params(cfg), cfg.filter, rng);
  json jsteps = json::array();
  double secs = 0.0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    json est = json::array();
    for (const auto& x : steps[k].estimates) est.push_back(eot::state_to_json(x));
    json ex = json::array();
    for (const auto& [label, r] : steps[k].existence) ex.push_back({{"label", label}, {"existence", r}});
    jsteps.push_back({{"step", k + 1}, {"estimates", est}, {"existence", ex}});
    secs += steps[k].seconds;
    spdlog::debug("step {}: {} measurements, {} estimates", k + 1, scans[k].size(), steps[k].estimates.size());
  }
  eot::write_text(o.out, json{{"filter", eot::filter_name(cfg)}, {"steps", jsteps}}.dump(1) + "\n");
  spdlog::info("tracked {} steps in {:.2f} s", steps.size(), secs);
  return 0;
}

int cmd_evaluate(const std::string& truth_path, const std::string& est_path, const std::string& out,
                 const eot::GospaConfig& g) {
  const json tj = read_json(truth_path);
  const auto truth = eot::truth_from_json(tj.contains("truth") ? tj.at("truth") : tj);
  const json ej = read_json(est_path);
  const auto& steps = ej.at("steps");
  if (static_cast<int>(steps.size()) != truth.horizon)
    throw eot::Error("step mismatch: truth has " + std::to_string(truth.horizon) + " steps, estimates have " +
                     std::to_string(steps.size()));
  std::vector<eot::GospaResult> rows;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k].at("step").get<std::size_t>() != k + 1)
      throw eot::Error("step mismatch at estimate entry " + std::to_string(k));
    std::vector<eot::ObjectState> est;
    for (const auto& e : steps[k].at("estimates")) est.push_back(eot::state_from_json(e));
    rows.push_back(eot::gospa(truth.alive_at(static_cast<int>(k + 1)), est, g.c, g.p, g.alpha));
  }
  eot::write_text(out, eot::gospa_csv(rows));
  spdlog::info("wrote {}", out);
  return 0;
}

int cmd_montecarlo(const CommonOptions& o, int jobs, int runs) {
  eot::RunConfig cfg = resolve_config(o);
  if (runs > 0) cfg.runs = runs;
  spdlog::info("{}: {} runs, {} steps, L = {}, jobs = {}", eot::filter_name(cfg), cfg.runs, cfg.scenario.horizon,
               cfg.filter.particles, jobs);
  const auto res = eot::run_montecarlo(cfg, jobs, [](const eot::RunResult& rr) {
    if (rr.failed)
      spdlog::warn("run {} failed: {}", rr.run, rr.error);
    else
      spdlog::debug("run {} done", rr.run);
  });
  eot::write_montecarlo_outputs(cfg, res, o.out);
  std::cout << "filter     total    state    miss     false    runtime[s/step]\n";
  std::printf("%-10s %-8.3f %-8.3f %-8.3f %-8.3f %.4f\n", eot::filter_name(cfg).c_str(), res.mean.total,
              res.mean.localization, res.mean.missed, res.mean.false_, res.mean_step_seconds);
  if (res.failed > 0) spdlog::warn("{} of {} runs failed (see failures.csv)", res.failed, cfg.runs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Extended-object PMB filter with ZIP measurements (particle loopy BP)"};
  app.require_subcommand(1);

  CommonOptions sim_opt, track_opt, mc_opt;
  auto* sim = app.add_subcommand("simulate", "generate ground truth and scans");
  add_common(sim, sim_opt);

  auto* track = app.add_subcommand("track", "run the filter on a scenario file");
  add_common(track, track_opt);
  std::string scans_path;
  track->add_option("--scans", scans_path, "scenario file from simulate")->required();

  auto* eval = app.add_subcommand("evaluate", "GOSPA of estimates against ground truth");
  std::string truth_path, est_path, eval_out;
  eot::GospaConfig gcfg;
  eval->add_option("--truth", truth_path, "scenario file with ground truth")->required();
  eval->add_option("--estimates", est_path, "estimates file from track")->required();
  eval->add_option("--out", eval_out, "CSV output")->required();
  eval->add_option("--c", gcfg.c, "GOSPA cut-off");
  eval->add_option("--p", gcfg.p, "GOSPA exponent");

  auto* mc = app.add_subcommand("montecarlo", "Monte-Carlo study");
  add_common(mc, mc_opt);
  int jobs = 1, runs = 0;
  mc->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
  mc->add_option("--runs", runs, "override the number of runs");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(sim_opt);
    if (*track) return cmd_track(track_opt, scans_path);
    if (*eval) return cmd_evaluate(truth_path, est_path, eval_out, gcfg);
    if (*mc) return cmd_montecarlo(mc_opt, jobs, runs);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
