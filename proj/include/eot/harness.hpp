#pragma once

// Run configuration, the filter loop (predict, BP update, prune, resample,
// extract) and the Monte-Carlo driver with its CSV/JSON outputs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "eot/bp/update.hpp"
#include "eot/metrics.hpp"
#include "eot/predict.hpp"
#include "eot/sim.hpp"

namespace eot {

struct FilterConfig {
  std::size_t particles = 5000;
  int iterations = 3;
  double prune_threshold = 1e-3;
  double extraction_threshold = 0.5;
  double censor_floor = 0.0;
  bool reorder = false;
  bool birth_clustering = true;
  bool ppp_mode = false;
};

struct GospaConfig {
  double c = 20.0;
  double p = 1.0;
  double alpha = 2.0;
};

struct RunConfig {
  ScenarioConfig scenario;
  ModelParams model;
  FilterConfig filter;
  int runs = 100;
  std::uint64_t base_seed = 1;
  bool truth_per_run = false;
  GospaConfig gospa;
};

/// The parameters the filter runs with. In ppp mode detection is taken as
/// certain and the rate prior is shrunk to the mean pD * rate.
inline ModelParams filter_params(const RunConfig& cfg) {
  ModelParams p = cfg.model;
  if (cfg.filter.ppp_mode) {
    p.birth_rate_prior.shape *= cfg.model.p_detect;
    p.p_detect = 1.0;
  }
  return p;
}

inline void validate(const RunConfig& cfg) {
  validate(cfg.scenario);
  if (!is_valid(cfg.model)) throw InvalidArgument("config: invalid model parameters");
  if (cfg.filter.particles < 1) throw InvalidArgument("config: particle count must be at least 1");
  if (cfg.filter.iterations < 1) throw InvalidArgument("config: BP iterations must be at least 1");
  if (cfg.runs < 1) throw InvalidArgument("config: runs must be at least 1");
  if (!(cfg.gospa.c > 0.0)) throw InvalidArgument("config: GOSPA cut-off must be positive");
}

// ---------------------------------------------------------------------------
// Presets

inline RunConfig preset_with(double p_detect, double rate) {
  RunConfig cfg;
  cfg.model.p_detect = p_detect;
  cfg.model.birth_rate_prior = GammaSpec{100.0 * rate, 100.0};
  cfg.scenario.rate = rate;
  return cfg;
}

inline RunConfig preset(const std::string& name) {
  if (name == "pd09g10") return preset_with(0.9, 10.0);
  if (name == "pd09g05") return preset_with(0.9, 5.0);
  if (name == "pd08g10") return preset_with(0.8, 10.0);
  if (name == "desk") {
    RunConfig cfg = preset_with(0.9, 10.0);
    cfg.scenario.object_count = 6;
    cfg.scenario.radius = 80.0;
    cfg.scenario.horizon = 60;
    cfg.scenario.birth_steps = {3, 3, 6, 6, 9, 9};
    cfg.scenario.death_steps = {53, 53, 56, 56, 59, 59};
    cfg.filter.particles = 1000;
    cfg.runs = 10;
    return cfg;
  }
  throw InvalidArgument("unknown preset '" + name + "' (expected pd09g10, pd09g05, pd08g10 or desk)");
}

// ---------------------------------------------------------------------------
// Config parsing with key-path and line diagnostics

struct ConfigError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::string text) : text_(std::move(text)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    const auto key = path.substr(path.find_last_of('/') + 1);
    std::size_t line = 0;
    const auto pos = text_.find("\"" + key + "\"");
    if (pos != std::string::npos) line = 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + pos, '\n'));
    throw ConfigError("config" + (line ? ":" + std::to_string(line) : std::string()) + ": " + path + ": " + msg);
  }

  void number(const nlohmann::json& j, const std::string& path, double& out) const {
    if (!j.is_number()) fail(path, "expected a number");
    out = j.get<double>();
  }
  void integer(const nlohmann::json& j, const std::string& path, long long& out) const {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    out = j.get<long long>();
  }
  void boolean(const nlohmann::json& j, const std::string& path, bool& out) const {
    if (!j.is_boolean()) fail(path, "expected true or false");
    out = j.get<bool>();
  }
  void matrix(const nlohmann::json& j, const std::string& path, Mat2& out) const {
    if (!j.is_array() || j.size() != 2 || !j[0].is_array() || !j[1].is_array() || j[0].size() != 2 ||
        j[1].size() != 2)
      fail(path, "expected a 2x2 array");
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        if (!j[r][c].is_number()) fail(path, "expected numeric entries");
        out(r, c) = j[r][c].get<double>();
      }
  }
  void steps(const nlohmann::json& j, const std::string& path, std::vector<int>& out) const {
    if (!j.is_array()) fail(path, "expected an array of steps");
    out.clear();
    for (const auto& v : j) {
      if (!v.is_number_integer()) fail(path, "expected integer steps");
      out.push_back(v.get<int>());
    }
  }

  /// Calls handler(key, value, path) for each member, rejecting unknown keys.
  template <class Handler>
  void object(const nlohmann::json& j, const std::string& path, const std::vector<std::string>& keys,
              Handler&& handler) const {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) fail(path + "/" + it.key(), "unknown key");
      handler(it.key(), it.value(), path + "/" + it.key());
    }
  }

 private:
  std::string text_;
};

}  // namespace detail

/// Parses a JSON run configuration. Missing keys keep the values of the
/// preset named by "preset" (default pd09g10).
inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n');
    throw ConfigError("config:" + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  detail::ConfigReader rd(text);
  if (!j.is_object()) rd.fail("", "top level must be an object");
  RunConfig cfg = preset("pd09g10");
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) rd.fail("/preset", "expected a string");
    try {
      cfg = preset(j["preset"].get<std::string>());
    } catch (const InvalidArgument& e) {
      rd.fail("/preset", e.what());
    }
  }
  rd.object(j, "", {"preset", "scenario", "model", "filter", "runs", "base_seed", "truth_per_run", "gospa"},
            [&](const std::string& key, const nlohmann::json& v, const std::string& path) {
    long long n = 0;
    if (key == "runs") {
      rd.integer(v, path, n);
      cfg.runs = static_cast<int>(n);
    } else if (key == "base_seed") {
      rd.integer(v, path, n);
      cfg.base_seed = static_cast<std::uint64_t>(n);
    } else if (key == "truth_per_run") {
      rd.boolean(v, path, cfg.truth_per_run);
    } else if (key == "scenario") {
      auto& s = cfg.scenario;
      rd.object(v, path,
                {"object_count", "radius", "speed", "birth_steps", "death_steps", "extent_dof", "extent_mean", "rate",
                 "horizon", "region", "seed", "noise_free"},
                [&](const std::string& k, const nlohmann::json& x, const std::string& p) {
        long long m = 0;
        if (k == "object_count") rd.integer(x, p, m), s.object_count = static_cast<int>(m);
        else if (k == "radius") rd.number(x, p, s.radius);
        else if (k == "speed") rd.number(x, p, s.speed);
        else if (k == "birth_steps") rd.steps(x, p, s.birth_steps);
        else if (k == "death_steps") rd.steps(x, p, s.death_steps);
        else if (k == "extent_dof") rd.number(x, p, s.extent.dof);
        else if (k == "extent_mean") rd.matrix(x, p, s.extent.mean);
        else if (k == "rate") rd.number(x, p, s.rate);
        else if (k == "horizon") rd.integer(x, p, m), s.horizon = static_cast<int>(m);
        else if (k == "seed") rd.integer(x, p, m), s.seed = static_cast<std::uint64_t>(m);
        else if (k == "noise_free") rd.boolean(x, p, s.noise_free);
        else if (k == "region") {
          if (!x.is_array() || x.size() != 4) rd.fail(p, "expected [x_min, x_max, y_min, y_max]");
          rd.number(x[0], p, s.region.x_min), rd.number(x[1], p, s.region.x_max);
          rd.number(x[2], p, s.region.y_min), rd.number(x[3], p, s.region.y_max);
        }
      });
    } else if (key == "model") {
      auto& mp = cfg.model;
      rd.object(v, path,
                {"p_detect", "p_survive", "clutter_rate", "region", "sampling_interval", "process_noise_std",
                 "birth_rate", "birth_velocity_cov", "birth_extent_dof", "birth_extent_mean", "birth_rate_shape",
                 "birth_rate_rate", "extent_proposal_dof", "rate_proposal_rate", "intensity_capacity"},
                [&](const std::string& k, const nlohmann::json& x, const std::string& p) {
        long long m = 0;
        if (k == "p_detect") rd.number(x, p, mp.p_detect);
        else if (k == "p_survive") rd.number(x, p, mp.p_survive);
        else if (k == "clutter_rate") rd.number(x, p, mp.clutter_rate);
        else if (k == "sampling_interval") rd.number(x, p, mp.sampling_interval);
        else if (k == "process_noise_std") rd.number(x, p, mp.process_noise_std);
        else if (k == "birth_rate") rd.number(x, p, mp.birth_rate);
        else if (k == "birth_velocity_cov") rd.matrix(x, p, mp.birth_velocity.covariance);
        else if (k == "birth_extent_dof") rd.number(x, p, mp.birth_extent.dof);
        else if (k == "birth_extent_mean") rd.matrix(x, p, mp.birth_extent.mean);
        else if (k == "birth_rate_shape") rd.number(x, p, mp.birth_rate_prior.shape);
        else if (k == "birth_rate_rate") rd.number(x, p, mp.birth_rate_prior.rate);
        else if (k == "extent_proposal_dof") rd.number(x, p, mp.extent_proposal_dof);
        else if (k == "rate_proposal_rate") rd.number(x, p, mp.rate_proposal_rate);
        else if (k == "intensity_capacity") rd.integer(x, p, m), mp.intensity_capacity = static_cast<std::size_t>(m);
        else if (k == "region") {
          if (!x.is_array() || x.size() != 4) rd.fail(p, "expected [x_min, x_max, y_min, y_max]");
          rd.number(x[0], p, mp.region.x_min), rd.number(x[1], p, mp.region.x_max);
          rd.number(x[2], p, mp.region.y_min), rd.number(x[3], p, mp.region.y_max);
        }
      });
    } else if (key == "filter") {
      auto& f = cfg.filter;
      rd.object(v, path,
                {"particles", "iterations", "prune_threshold", "extraction_threshold", "censor_floor", "reorder", "birth_clustering",
                 "ppp_mode"},
                [&](const std::string& k, const nlohmann::json& x, const std::string& p) {
        long long m = 0;
        if (k == "particles") {
          rd.integer(x, p, m);
          if (m < 1) rd.fail(p, "must be at least 1");
          f.particles = static_cast<std::size_t>(m);
        } else if (k == "iterations") {
          rd.integer(x, p, m);
          if (m < 1) rd.fail(p, "must be at least 1");
          f.iterations = static_cast<int>(m);
        }
        else if (k == "prune_threshold") rd.number(x, p, f.prune_threshold);
        else if (k == "extraction_threshold") rd.number(x, p, f.extraction_threshold);
        else if (k == "censor_floor") rd.number(x, p, f.censor_floor);
        else if (k == "reorder") rd.boolean(x, p, f.reorder);
        else if (k == "birth_clustering") rd.boolean(x, p, f.birth_clustering);
        else if (k == "ppp_mode") rd.boolean(x, p, f.ppp_mode);
      });
    } else if (key == "gospa") {
      rd.object(v, path, {"c", "p", "alpha"}, [&](const std::string& k, const nlohmann::json& x, const std::string& p) {
        if (k == "c") rd.number(x, p, cfg.gospa.c);
        else if (k == "p") rd.number(x, p, cfg.gospa.p);
        else if (k == "alpha") rd.number(x, p, cfg.gospa.alpha);
      });
    }
  });
  try {
    validate(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  auto mat = [](const Mat2& m) { return nlohmann::json{{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}; };
  const auto& s = cfg.scenario;
  const auto& mp = cfg.model;
  const auto& f = cfg.filter;
  return nlohmann::json{
      {"scenario",
       {{"object_count", s.object_count}, {"radius", s.radius}, {"speed", s.speed}, {"birth_steps", s.birth_steps},
        {"death_steps", s.death_steps}, {"extent_dof", s.extent.dof}, {"extent_mean", mat(s.extent.mean)},
        {"rate", s.rate}, {"horizon", s.horizon},
        {"region", {s.region.x_min, s.region.x_max, s.region.y_min, s.region.y_max}}, {"seed", s.seed},
        {"noise_free", s.noise_free}}},
      {"model",
       {{"p_detect", mp.p_detect}, {"p_survive", mp.p_survive}, {"clutter_rate", mp.clutter_rate},
        {"region", {mp.region.x_min, mp.region.x_max, mp.region.y_min, mp.region.y_max}},
        {"sampling_interval", mp.sampling_interval}, {"process_noise_std", mp.process_noise_std},
        {"birth_rate", mp.birth_rate}, {"birth_velocity_cov", mat(mp.birth_velocity.covariance)},
        {"birth_extent_dof", mp.birth_extent.dof}, {"birth_extent_mean", mat(mp.birth_extent.mean)},
        {"birth_rate_shape", mp.birth_rate_prior.shape}, {"birth_rate_rate", mp.birth_rate_prior.rate},
        {"extent_proposal_dof", mp.extent_proposal_dof}, {"rate_proposal_rate", mp.rate_proposal_rate},
        {"intensity_capacity", mp.intensity_capacity}}},
      {"filter",
       {{"particles", f.particles}, {"iterations", f.iterations}, {"prune_threshold", f.prune_threshold},
        {"extraction_threshold", f.extraction_threshold}, {"censor_floor", f.censor_floor}, {"reorder", f.reorder}, {"birth_clustering", f.birth_clustering},
        {"ppp_mode", f.ppp_mode}}},
      {"runs", cfg.runs},
      {"base_seed", cfg.base_seed},
      {"truth_per_run", cfg.truth_per_run},
      {"gospa", {{"c", cfg.gospa.c}, {"p", cfg.gospa.p}, {"alpha", cfg.gospa.alpha}}}};
}

// ---------------------------------------------------------------------------
// Filter loop

struct StepOutput {
  std::vector<ObjectState> estimates;
  std::vector<std::pair<std::uint64_t, double>> existence;  // (label, r) after pruning
  double seconds = 0.0;
};

inline std::vector<StepOutput> run_filter(const ScanSequence& scans, const ModelParams& p, const FilterConfig& f,
                                          Rng& rng) {
  std::vector<StepOutput> out;
  out.reserve(scans.size());
  PmbDensity pmb;
  UpdateOptions opt;
  opt.iterations = f.iterations;
  opt.num_particles = f.particles;
  opt.censor_floor = f.censor_floor;
  opt.reorder = f.reorder;
  opt.birth_clustering = f.birth_clustering;
  for (std::size_t k = 0; k < scans.size(); ++k) {
    StepOutput so;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      pmb = predict(pmb, p, rng);
      pmb = bp_update(pmb, scans[k], p, opt, rng);
    } catch (const NumericalFailure& e) {
      throw Error("step " + std::to_string(k + 1) + ": " + e.what());
    }
    pmb = prune_components(pmb, f.prune_threshold);
    for (auto& b : pmb.bernoullis) b.density = resample_systematic(b.density, rng);
    so.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    so.estimates = extract_estimates(pmb, f.extraction_threshold);
    for (const auto& b : pmb.bernoullis) so.existence.emplace_back(b.label, b.existence);
    out.push_back(std::move(so));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Generator streams: truth, measurements and filter use distinct streams.
enum class Stream : std::uint64_t { Truth = 1, Measurements = 2, Filter = 3 };

inline Rng stream_rng(std::uint64_t seed, Stream s) { return Rng(mix_seed(seed, static_cast<std::uint64_t>(s))); }

struct RunResult {
  int run = 0;
  bool failed = false;
  std::string error;
  std::vector<GospaResult> steps;
  std::vector<std::size_t> truth_count, estimate_count;
  std::vector<double> step_seconds;
};

struct MonteCarloResult {
  std::vector<RunResult> runs;
  std::vector<GospaResult> per_step_mean;  // over successful runs
  GospaResult mean;                        // over steps of per_step_mean
  int failed = 0;
  double mean_step_seconds = 0.0;
};

inline GroundTruth make_truth(const RunConfig& cfg, std::uint64_t seed) {
  Rng rng = stream_rng(seed, Stream::Truth);
  return generate_ground_truth(cfg.scenario, cfg.model, rng);
}

inline RunResult run_single(const RunConfig& cfg, int run, const GroundTruth* shared_truth) {
  RunResult rr;
  rr.run = run;
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(run);
  try {
    const GroundTruth truth = shared_truth ? *shared_truth : make_truth(cfg, seed);
    Rng meas_rng = stream_rng(seed, Stream::Measurements);
    const ScanSequence scans = generate_measurement_sets(truth, cfg.model, meas_rng);
    Rng filt_rng = stream_rng(seed, Stream::Filter);
    const auto steps = run_filter(scans, filter_params(cfg), cfg.filter, filt_rng);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const auto alive = truth.alive_at(static_cast<int>(k + 1));
      rr.steps.push_back(gospa(alive, steps[k].estimates, cfg.gospa.c, cfg.gospa.p, cfg.gospa.alpha));
      rr.truth_count.push_back(alive.size());
      rr.estimate_count.push_back(steps[k].estimates.size());
      rr.step_seconds.push_back(steps[k].seconds);
    }
  } catch (const std::exception& e) {
    rr.failed = true;
    rr.error = e.what();
  }
  return rr;
}

inline MonteCarloResult run_montecarlo(const RunConfig& cfg, int jobs = 1,
                                       const std::function<void(const RunResult&)>& on_done = {}) {
  validate(cfg);
  MonteCarloResult res;
  res.runs.resize(static_cast<std::size_t>(cfg.runs));
  GroundTruth shared;
  if (!cfg.truth_per_run) {
    Rng rng = stream_rng(cfg.scenario.seed, Stream::Truth);
    shared = generate_ground_truth(cfg.scenario, cfg.model, rng);
  }
  std::atomic<int> next{0};
  std::mutex done_mutex;
  auto worker = [&] {
    for (int r = next++; r < cfg.runs; r = next++) {
      res.runs[static_cast<std::size_t>(r)] = run_single(cfg, r, cfg.truth_per_run ? nullptr : &shared);
      if (on_done) {
        std::lock_guard<std::mutex> lock(done_mutex);
        on_done(res.runs[static_cast<std::size_t>(r)]);
      }
    }
  };
  const int n_threads = std::max(1, std::min(jobs, cfg.runs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const std::size_t horizon = static_cast<std::size_t>(cfg.scenario.horizon);
  res.per_step_mean.assign(horizon, GospaResult{});
  int ok = 0;
  double secs = 0.0;
  std::size_t n_secs = 0;
  for (const auto& rr : res.runs) {
    if (rr.failed) {
      ++res.failed;
      continue;
    }
    ++ok;
    for (std::size_t k = 0; k < horizon; ++k) {
      auto& m = res.per_step_mean[k];
      m.total += rr.steps[k].total;
      m.localization += rr.steps[k].localization;
      m.missed += rr.steps[k].missed;
      m.false_ += rr.steps[k].false_;
      secs += rr.step_seconds[k];
      ++n_secs;
    }
  }
  if (ok > 0) {
    for (auto& m : res.per_step_mean) {
      m.total /= ok, m.localization /= ok, m.missed /= ok, m.false_ /= ok;
      res.mean.total += m.total, res.mean.localization += m.localization;
      res.mean.missed += m.missed, res.mean.false_ += m.false_;
    }
    const double h = static_cast<double>(horizon);
    res.mean.total /= h, res.mean.localization /= h, res.mean.missed /= h, res.mean.false_ /= h;
  }
  res.mean_step_seconds = n_secs ? secs / static_cast<double>(n_secs) : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Output files

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kGospaHeader = "step,total,localization,missed,false";

inline std::string gospa_row(const std::string& step, const GospaResult& g) {
  return step + "," + format_double(g.total) + "," + format_double(g.localization) + "," + format_double(g.missed) +
         "," + format_double(g.false_);
}

/// Per-step rows followed by a `mean` row with the column means.
inline std::string gospa_csv(const std::vector<GospaResult>& steps) {
  std::string s = std::string(kGospaHeader) + "\n";
  GospaResult mean;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    s += gospa_row(std::to_string(k + 1), steps[k]) + "\n";
    mean.total += steps[k].total, mean.localization += steps[k].localization;
    mean.missed += steps[k].missed, mean.false_ += steps[k].false_;
  }
  if (!steps.empty()) {
    const double n = static_cast<double>(steps.size());
    mean.total /= n, mean.localization /= n, mean.missed /= n, mean.false_ /= n;
  }
  s += gospa_row("mean", mean) + "\n";
  return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

inline std::string filter_name(const RunConfig& cfg) { return cfg.filter.ppp_mode ? "pmb-bp-ppp" : "pmb-bp-zip"; }

inline void write_montecarlo_outputs(const RunConfig& cfg, const MonteCarloResult& res,
                                     const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "runs");
  std::string failures = "run,error\n";
  for (const auto& rr : res.runs) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03d", rr.run);
    if (rr.failed) {
      std::string msg = rr.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      failures += std::to_string(rr.run) + "," + msg + "\n";
      continue;
    }
    write_text(dir / "runs" / (std::string(name) + ".csv"), gospa_csv(rr.steps));
    std::string card = "step,truth,estimates\n";
    for (std::size_t k = 0; k < rr.truth_count.size(); ++k)
      card += std::to_string(k + 1) + "," + std::to_string(rr.truth_count[k]) + "," +
              std::to_string(rr.estimate_count[k]) + "\n";
    write_text(dir / "runs" / (std::string(name) + "_cardinality.csv"), card);
  }
  write_text(dir / "per_step.csv", gospa_csv(res.per_step_mean));
  write_text(dir / "failures.csv", failures);
  std::string summary = "filter,runs,failed,total,localization,missed,false\n";
  summary += filter_name(cfg) + "," + std::to_string(cfg.runs) + "," + std::to_string(res.failed) + "," +
             format_double(res.mean.total) + "," + format_double(res.mean.localization) + "," +
             format_double(res.mean.missed) + "," + format_double(res.mean.false_) + "\n";
  write_text(dir / "summary.csv", summary);

  nlohmann::json timing;
  timing["mean_step_seconds"] = res.mean_step_seconds;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& rr : res.runs) {
    double s = 0.0;
    for (double v : rr.step_seconds) s += v;
    runs.push_back({{"run", rr.run}, {"seconds", s}, {"failed", rr.failed}});
  }
  timing["runs"] = runs;
  write_text(dir / "timing.json", timing.dump(2) + "\n");
}

}  // namespace eot
