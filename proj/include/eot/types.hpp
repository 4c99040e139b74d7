#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "eot/error.hpp"

namespace eot {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Position and velocity in the plane (m, m/s).
struct KinematicState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

/// Random-matrix object state: kinematics, SPD extent (m^2) and Poisson
/// measurement rate (expected measurements per scan given detection).
struct ObjectState {
  KinematicState kinematics;
  Mat2 extent = Mat2::Identity();
  double rate = 1.0;

  const Vec2& position() const { return kinematics.position; }
  const Vec2& velocity() const { return kinematics.velocity; }
};

/// A point measurement. `index` is 1-based and dense within a scan.
struct Measurement {
  Vec2 value = Vec2::Zero();
  int index = 1;
};

using MeasurementSet = std::vector<Measurement>;

struct WeightedParticleSet {
  std::vector<ObjectState> particles;
  std::vector<double> weights;

  std::size_t size() const { return particles.size(); }
};

struct BernoulliComponent {
  double existence = 0.0;
  WeightedParticleSet density;
  std::uint64_t label = 0;
};

/// Axis-aligned rectangle.
struct Region {
  double x_min = -150.0;
  double x_max = 150.0;
  double y_min = -150.0;
  double y_max = 150.0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  bool contains(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
  bool degenerate() const { return !(x_max > x_min) || !(y_max > y_min); }
};

struct GaussianSpec {
  Vec2 mean = Vec2::Zero();
  Mat2 covariance = Mat2::Identity();
};

/// Inverse-Wishart parameterized by its mean; the scale matrix is
/// mean * (dof - d - 1) with d = 2.
struct InverseWishartSpec {
  double dof = 100.0;
  Mat2 mean = 5.0 * Mat2::Identity();

  Mat2 scale() const { return mean * (dof - 3.0); }
};

/// Gamma with shape/rate parameterization (mean = shape / rate).
struct GammaSpec {
  double shape = 1000.0;
  double rate = 100.0;

  double mean() const { return shape / rate; }
};

/// One term of the analytic undetected-object intensity:
/// weight * Uniform(position region) * N(velocity) * IW(extent) * Gamma(rate).
struct IntensityComponent {
  double weight = 0.0;
  Region position;
  GaussianSpec velocity;
  InverseWishartSpec extent;
  GammaSpec rate;

  bool same_parameters(const IntensityComponent& o) const {
    return position.x_min == o.position.x_min && position.x_max == o.position.x_max &&
           position.y_min == o.position.y_min && position.y_max == o.position.y_max &&
           velocity.mean == o.velocity.mean && velocity.covariance == o.velocity.covariance &&
           extent.dof == o.extent.dof && extent.mean == o.extent.mean &&
           rate.shape == o.rate.shape && rate.rate == o.rate.rate;
  }
};

struct PmbDensity {
  std::vector<IntensityComponent> intensity;
  std::vector<BernoulliComponent> bernoullis;
  std::uint64_t next_label = 1;

  double expected_undetected() const {
    double n = 0.0;
    for (const auto& c : intensity) n += c.weight;
    return n;
  }
};

/// Model and birth parameters. Defaults are the simulation settings with
/// (pDetect, rate) = (0.9, 10).
struct ModelParams {
  double p_detect = 0.9;
  double p_survive = 0.99;
  double clutter_rate = 10.0;
  Region region;
  double sampling_interval = 0.2;
  double process_noise_std = 0.8;

  double birth_rate = 0.01;
  GaussianSpec birth_velocity{Vec2::Zero(), 225.0 * Mat2::Identity()};
  InverseWishartSpec birth_extent{100.0, 5.0 * Mat2::Identity()};
  GammaSpec birth_rate_prior{1000.0, 100.0};

  // Particle proposals for the Bernoulli prediction.
  double extent_proposal_dof = 10000.0;
  double rate_proposal_rate = 10000.0;

  // Undetected intensity keeps at most this many components.
  std::size_t intensity_capacity = 20;

  // Optional state-dependent detection probability; the scalar is used when empty.
  std::function<double(const ObjectState&)> detection_hook;

  double detection_probability(const ObjectState& x) const {
    return detection_hook ? detection_hook(x) : p_detect;
  }
  double survival_probability(const ObjectState&) const { return p_survive; }

  IntensityComponent birth_component() const {
    return IntensityComponent{birth_rate, region, birth_velocity, birth_extent, birth_rate_prior};
  }
};

// ---------------------------------------------------------------------------
// Weight handling and validation

struct NormalizedWeights {
  std::vector<double> weights;
  double normalizer = 0.0;
};

inline NormalizedWeights normalize_weights(std::span<const double> w) {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DegenerateWeights("normalize_weights: negative or non-finite weight");
    sum += v;
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) throw DegenerateWeights("normalize_weights: weights sum to zero");
  NormalizedWeights out{std::vector<double>(w.begin(), w.end()), sum};
  for (double& v : out.weights) v /= sum;
  return out;
}

inline bool validate_spd(const Mat2& m) {
  if (!m.allFinite()) return false;
  if (std::abs(m(0, 1) - m(1, 0)) > 1e-12) return false;
  // Closed-form minimum eigenvalue of the symmetric part.
  const double a = m(0, 0), d = m(1, 1), b = 0.5 * (m(0, 1) + m(1, 0));
  const double half_trace = 0.5 * (a + d);
  const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
  return half_trace - disc > 0.0;
}

inline Mat2 symmetrize(const Mat2& m) { return 0.5 * (m + m.transpose()); }

inline double effective_sample_size(std::span<const double> w) {
  double sum = 0.0, sq = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw DegenerateWeights("effective_sample_size: negative weight");
    sum += v;
    sq += v * v;
  }
  if (w.empty() || std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("effective_sample_size: weights are not normalized");
  return 1.0 / sq;
}

inline bool is_valid(const ObjectState& x) {
  return x.kinematics.position.allFinite() && x.kinematics.velocity.allFinite() && validate_spd(x.extent) &&
         std::isfinite(x.rate) && x.rate > 0.0;
}

inline bool is_valid(const WeightedParticleSet& s) {
  if (s.particles.empty() || s.particles.size() != s.weights.size()) return false;
  double sum = 0.0;
  for (double w : s.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) return false;
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) return false;
  for (const auto& p : s.particles)
    if (!is_valid(p)) return false;
  return true;
}

inline bool is_valid(const IntensityComponent& c) {
  auto pd = [](const Mat2& m) { return validate_spd(m); };
  return c.weight >= 0.0 && std::isfinite(c.weight) && !c.position.degenerate() && c.velocity.mean.allFinite() &&
         pd(c.velocity.covariance) && c.extent.dof > 3.0 && pd(c.extent.mean) && c.rate.shape > 0.0 &&
         c.rate.rate > 0.0;
}

inline bool is_valid(const BernoulliComponent& b) {
  return b.existence >= 0.0 && b.existence <= 1.0 && is_valid(b.density);
}

inline bool is_valid(const PmbDensity& pmb) {
  for (const auto& c : pmb.intensity)
    if (!is_valid(c)) return false;
  for (const auto& b : pmb.bernoullis)
    if (!is_valid(b)) return false;
  return true;
}

inline bool is_valid(const ModelParams& p) {
  auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
  return prob(p.p_detect) && prob(p.p_survive) && p.clutter_rate >= 0.0 && !p.region.degenerate() &&
         p.sampling_interval > 0.0 && p.process_noise_std >= 0.0 && p.birth_rate >= 0.0 &&
         p.extent_proposal_dof > 1.0 && p.rate_proposal_rate > 0.0 && p.intensity_capacity >= 1;
}

}  // namespace eot
