#pragma once

// Time prediction of a PMB density. The undetected intensity stays analytic;
// Bernoulli densities are propagated as particles.

#include <algorithm>
#include <cmath>
#include <vector>

#include "eot/models.hpp"
#include "eot/stats.hpp"
#include "eot/types.hpp"

namespace eot {

/// log of the (normalized) density of one intensity component at x.
inline double intensity_component_log_density(const IntensityComponent& c, const ObjectState& x) {
  if (!c.position.contains(x.kinematics.position)) return kNegInf;
  return -std::log(c.position.area()) + log_normal2(x.kinematics.velocity, c.velocity.mean, c.velocity.covariance) +
         log_inverse_wishart2(x.extent, c.extent.dof, c.extent.scale()) +
         log_gamma_density(x.rate, c.rate.shape, c.rate.rate);
}

/// log lambda(x) for the whole intensity.
inline double intensity_log_value(std::span<const IntensityComponent> intensity, const ObjectState& x) {
  double out = kNegInf;
  for (const auto& c : intensity) {
    if (c.weight <= 0.0) continue;
    out = log_add(out, std::log(c.weight) + intensity_component_log_density(c, x));
  }
  return out;
}

/// Survival thinning of every component, one fresh birth component, merging of
/// identical parameter blocks and a capacity cap that folds the oldest
/// components together.
inline std::vector<IntensityComponent> predict_intensity(std::span<const IntensityComponent> intensity,
                                                         const ModelParams& p) {
  std::vector<IntensityComponent> out;
  out.reserve(intensity.size() + 1);
  auto push_merged = [&out](IntensityComponent c) {
    for (auto& o : out) {
      if (o.same_parameters(c)) {
        o.weight += c.weight;
        return;
      }
    }
    out.push_back(std::move(c));
  };
  for (IntensityComponent c : intensity) {
    c.weight *= p.p_survive;
    if (c.weight > 0.0) push_merged(std::move(c));
  }
  push_merged(p.birth_component());
  while (out.size() > p.intensity_capacity && out.size() >= 2) {
    // Oldest component donates its weight to the next oldest.
    out[1].weight += out[0].weight;
    out.erase(out.begin());
  }
  return out;
}

/// Bootstrap kinematic proposal, mean-preserving Wishart proposal for the
/// extent and mean-preserving gamma proposal for the rate. The importance ratio
/// transition/proposal is one, so weights only pick up the survival probability.
inline BernoulliComponent predict_bernoulli(const BernoulliComponent& comp, const ModelParams& p, Rng& rng) {
  const auto& in = comp.density;
  if (in.particles.empty() || in.particles.size() != in.weights.size())
    throw InvalidArgument("predict_bernoulli: empty or inconsistent particle set");

  BernoulliComponent out;
  out.label = comp.label;
  out.density.particles.resize(in.size());
  std::vector<double> raw(in.size());
  double survive_mass = 0.0;
  for (std::size_t l = 0; l < in.size(); ++l) {
    const ObjectState& x = in.particles[l];
    const double ps = p.survival_probability(x);
    survive_mass += in.weights[l] * ps;
    raw[l] = in.weights[l] * ps;

    ObjectState& y = out.density.particles[l];
    y.kinematics = transition_sample(x.kinematics, p, rng);
    y.extent = sample_wishart2(p.extent_proposal_dof, x.extent / p.extent_proposal_dof, rng);
    y.rate = sample_gamma(p.rate_proposal_rate * x.rate, p.rate_proposal_rate, rng);
  }
  out.density.weights = normalize_weights(raw).weights;
  out.existence = comp.existence * survive_mass;
  return out;
}

inline PmbDensity predict(const PmbDensity& pmb, const ModelParams& p, Rng& rng) {
  PmbDensity out;
  out.next_label = pmb.next_label;
  out.intensity = predict_intensity(pmb.intensity, p);
  out.bernoullis.reserve(pmb.bernoullis.size());
  for (const auto& b : pmb.bernoullis) out.bernoullis.push_back(predict_bernoulli(b, p, rng));
  return out;
}

}  // namespace eot
