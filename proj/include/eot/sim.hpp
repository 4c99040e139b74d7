#pragma once

// Ground-truth scenario (objects on a circle moving towards the centre, born
// and killed in pairs) and scan synthesis under the ZIP + clutter model.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <json.hpp>

#include "eot/models.hpp"
#include "eot/stats.hpp"
#include "eot/types.hpp"

namespace eot {

struct ScenarioConfig {
  int object_count = 10;
  double radius = 125.0;
  double speed = 12.5;
  std::vector<int> birth_steps{3, 3, 6, 6, 9, 9, 12, 12, 15, 15};
  std::vector<int> death_steps{83, 83, 86, 86, 89, 89, 92, 92, 95, 95};
  InverseWishartSpec extent{100.0, 5.0 * Mat2::Identity()};
  double rate = 10.0;
  int horizon = 100;
  Region region;
  std::uint64_t seed = 1;
  bool noise_free = false;
};

inline void validate(const ScenarioConfig& c) {
  if (c.object_count < 0) throw InvalidArgument("scenario: negative object count");
  if (c.birth_steps.size() != static_cast<std::size_t>(c.object_count) ||
      c.death_steps.size() != static_cast<std::size_t>(c.object_count))
    throw InvalidArgument("scenario: one birth and one death step per object required");
  for (int i = 0; i < c.object_count; ++i) {
    if (c.birth_steps[i] < 1) throw InvalidArgument("scenario: birth steps start at 1");
    if (!(c.birth_steps[i] < c.death_steps[i])) throw InvalidArgument("scenario: birth must precede death");
  }
  if (c.horizon < 1) throw InvalidArgument("scenario: horizon must be at least 1");
  if (!(c.rate > 0.0)) throw InvalidArgument("scenario: rate must be positive");
  if (!(c.extent.dof > 3.0) || !validate_spd(c.extent.mean)) throw InvalidArgument("scenario: bad extent prior");
  if (c.region.degenerate()) throw InvalidArgument("scenario: degenerate region");
}

struct TruthObject {
  int birth = 1;
  int death = 2;                    // first step at which the object is gone
  std::vector<ObjectState> states;  // states[k - birth] for birth <= k < death, k <= horizon
};

struct GroundTruth {
  int horizon = 0;
  std::vector<TruthObject> objects;

  std::vector<ObjectState> alive_at(int step) const {
    std::vector<ObjectState> out;
    for (const auto& o : objects) {
      const int k = step - o.birth;
      if (step >= o.birth && step < o.death && k < static_cast<int>(o.states.size()))
        out.push_back(o.states[static_cast<std::size_t>(k)]);
    }
    return out;
  }
};

/// Equally spaced angles with a random global rotation; objects born at the
/// same step sit on opposite sides of the circle.
inline GroundTruth generate_ground_truth(const ScenarioConfig& cfg, const ModelParams& p, Rng& rng) {
  validate(cfg);
  GroundTruth gt;
  gt.horizon = cfg.horizon;
  std::uniform_real_distribution<double> unif(0.0, 2.0 * std::numbers::pi);
  const double rotation = unif(rng);
  const int n = cfg.object_count;
  const int half = (n + 1) / 2;
  for (int i = 0; i < n; ++i) {
    const int slot = i / 2 + (i % 2) * half;
    const double angle = rotation + 2.0 * std::numbers::pi * slot / std::max(n, 1);
    TruthObject o;
    o.birth = cfg.birth_steps[i];
    o.death = cfg.death_steps[i];
    ObjectState x;
    x.kinematics.position = cfg.radius * Vec2(std::cos(angle), std::sin(angle));
    x.kinematics.velocity = -cfg.speed * Vec2(std::cos(angle), std::sin(angle));
    x.extent = sample_inverse_wishart2(cfg.extent.dof, cfg.extent.scale(), rng);
    x.rate = cfg.rate;
    const int last = std::min(o.death - 1, cfg.horizon);
    for (int k = o.birth; k <= last; ++k) {
      o.states.push_back(x);
      x.kinematics = cfg.noise_free ? transition_mean(x.kinematics, p) : transition_sample(x.kinematics, p, rng);
    }
    gt.objects.push_back(std::move(o));
  }
  return gt;
}

using ScanSequence = std::vector<MeasurementSet>;  // scans[k - 1] is step k

inline ScanSequence generate_measurement_sets(const GroundTruth& gt, const ModelParams& p, Rng& rng) {
  ScanSequence scans;
  scans.reserve(static_cast<std::size_t>(gt.horizon));
  for (int k = 1; k <= gt.horizon; ++k) {
    MeasurementSet z;
    for (const auto& x : gt.alive_at(k)) {
      auto w = sample_object_measurements(x, p, rng);
      z.insert(z.end(), w.begin(), w.end());
    }
    auto c = sample_clutter(p, rng);
    z.insert(z.end(), c.begin(), c.end());
    std::shuffle(z.begin(), z.end(), rng);
    for (std::size_t j = 0; j < z.size(); ++j) z[j].index = static_cast<int>(j + 1);
    scans.push_back(std::move(z));
  }
  return scans;
}

// ---------------------------------------------------------------------------
// JSON

using Json = nlohmann::json;

inline Json state_to_json(const ObjectState& x) {
  const auto& e = x.extent;
  return Json{{"position", {x.kinematics.position.x(), x.kinematics.position.y()}},
              {"velocity", {x.kinematics.velocity.x(), x.kinematics.velocity.y()}},
              {"extent", {{e(0, 0), e(0, 1)}, {e(1, 0), e(1, 1)}}},
              {"rate", x.rate}};
}

inline ObjectState state_from_json(const Json& j) {
  ObjectState x;
  const auto& p = j.at("position");
  const auto& v = j.at("velocity");
  const auto& e = j.at("extent");
  x.kinematics.position = Vec2(p.at(0).get<double>(), p.at(1).get<double>());
  x.kinematics.velocity = Vec2(v.at(0).get<double>(), v.at(1).get<double>());
  x.extent << e.at(0).at(0).get<double>(), e.at(0).at(1).get<double>(), e.at(1).at(0).get<double>(),
      e.at(1).at(1).get<double>();
  x.rate = j.at("rate").get<double>();
  return x;
}

inline Json truth_to_json(const GroundTruth& gt) {
  Json objs = Json::array();
  for (const auto& o : gt.objects) {
    Json states = Json::array();
    for (const auto& x : o.states) states.push_back(state_to_json(x));
    objs.push_back(Json{{"birth", o.birth}, {"death", o.death}, {"states", states}});
  }
  return Json{{"horizon", gt.horizon}, {"objects", objs}};
}

inline GroundTruth truth_from_json(const Json& j) {
  GroundTruth gt;
  gt.horizon = j.at("horizon").get<int>();
  for (const auto& o : j.at("objects")) {
    TruthObject t;
    t.birth = o.at("birth").get<int>();
    t.death = o.at("death").get<int>();
    for (const auto& s : o.at("states")) t.states.push_back(state_from_json(s));
    gt.objects.push_back(std::move(t));
  }
  return gt;
}

inline Json scans_to_json(const ScanSequence& scans) {
  Json out = Json::array();
  for (const auto& z : scans) {
    Json scan = Json::array();
    for (const auto& m : z) scan.push_back({m.value.x(), m.value.y()});
    out.push_back(scan);
  }
  return out;
}

inline ScanSequence scans_from_json(const Json& j) {
  ScanSequence scans;
  for (const auto& scan : j) {
    MeasurementSet z;
    int idx = 1;
    for (const auto& m : scan) z.push_back({Vec2(m.at(0).get<double>(), m.at(1).get<double>()), idx++});
    scans.push_back(std::move(z));
  }
  return scans;
}

}  // namespace eot
