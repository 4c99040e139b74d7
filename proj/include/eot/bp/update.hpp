#pragma once

// Full measurement update of a PMB density by loopy BP, plus the
// post-update housekeeping: pruning, resampling and estimate extraction.

#include <algorithm>
#include <random>
#include <vector>

#include "eot/bp/engine.hpp"
#include "eot/bp/problem.hpp"
#include "eot/models.hpp"
#include "eot/types.hpp"

namespace eot {

/// Missed-detection update of the undetected intensity: every weight is scaled
/// by the expected empty-set likelihood under the component's gamma rate prior.
inline std::vector<IntensityComponent> update_intensity_posterior(std::span<const IntensityComponent> intensity,
                                                                  const ModelParams& p) {
  std::vector<IntensityComponent> out(intensity.begin(), intensity.end());
  for (auto& c : out) c.weight *= expected_empty_likelihood_gamma(p.p_detect, c.rate.shape, c.rate.rate);
  return out;
}

struct UpdateOptions {
  int iterations = 3;
  std::size_t num_particles = 5000;  // new-component support size
  double censor_floor = 0.0;
  bool reorder = false;
  bool birth_clustering = false;  // censor explained measurements, one new component per cluster
};

/// Bernoulli components from BP beliefs. New components get fresh labels.
inline std::vector<BernoulliComponent> beliefs_to_bernoullis(const bp::UpdateProblem& prob,
                                                             const std::vector<bp::Belief>& beliefs,
                                                             std::uint64_t& next_label) {
  std::vector<BernoulliComponent> out;
  out.reserve(beliefs.size());
  for (std::size_t c = 0; c < beliefs.size(); ++c) {
    BernoulliComponent b;
    b.existence = beliefs[c].existence;
    b.density.particles = prob.components[c].particles;
    b.density.weights = beliefs[c].weights;
    b.label = prob.components[c].is_new() ? next_label++ : prob.components[c].label;
    out.push_back(std::move(b));
  }
  return out;
}

inline PmbDensity bp_update(const PmbDensity& pmb, const MeasurementSet& z, const ModelParams& p,
                            const UpdateOptions& opt, Rng& rng) {
  if (opt.iterations < 1) throw InvalidArgument("bp_update: at least one iteration required");
  bp::UpdateProblem prob;
  if (opt.birth_clustering) {
    const bp::BirthPlan plan = bp::plan_births(pmb.bernoullis, z, p);
    prob = bp::build_update_problem(pmb, z, p, opt.num_particles, rng, &plan);
  } else {
    prob = bp::build_update_problem(pmb, z, p, opt.num_particles, rng);
  }
  const bool reorder = opt.reorder && !opt.birth_clustering;
  if (opt.censor_floor > 0.0 || reorder) prob = bp::censoring_and_reordering(std::move(prob), opt.censor_floor, reorder);
  bp::MessageState msgs = bp::initialize_messages(prob);
  for (int it = 0; it < opt.iterations; ++it) msgs = bp::run_bp_iteration(prob, msgs);
  const auto beliefs = bp::compute_beliefs(prob, msgs);

  PmbDensity out;
  out.next_label = pmb.next_label;
  out.bernoullis = beliefs_to_bernoullis(prob, beliefs, out.next_label);
  out.intensity = update_intensity_posterior(pmb.intensity, p);
  return out;
}

inline PmbDensity bp_update(const PmbDensity& pmb, const MeasurementSet& z, const ModelParams& p, int iterations,
                            Rng& rng) {
  UpdateOptions opt;
  opt.iterations = iterations;
  return bp_update(pmb, z, p, opt, rng);
}

inline PmbDensity prune_components(const PmbDensity& pmb, double threshold = 1e-3) {
  if (!(threshold >= 0.0 && threshold < 1.0)) throw InvalidArgument("prune_components: threshold must be in [0, 1)");
  PmbDensity out;
  out.intensity = pmb.intensity;
  out.next_label = pmb.next_label;
  for (const auto& b : pmb.bernoullis)
    if (!(b.existence < threshold)) out.bernoullis.push_back(b);
  return out;
}

/// Systematic resampling with an explicit offset u in [0, 1).
inline WeightedParticleSet resample_systematic(const WeightedParticleSet& ps, double u) {
  const std::size_t n = ps.size();
  if (n == 0 || ps.weights.size() != n) throw InvalidArgument("resample_systematic: empty particle set");
  if (!(u >= 0.0 && u < 1.0)) throw InvalidArgument("resample_systematic: offset must be in [0, 1)");
  const auto w = normalize_weights(ps.weights).weights;
  WeightedParticleSet out;
  out.particles.reserve(n);
  out.weights.assign(n, 1.0 / static_cast<double>(n));
  // Work on the scale of expected copy counts so that uniform weights give
  // exact integer boundaries.
  const double nd = static_cast<double>(n);
  double cum = w[0] * nd;
  std::size_t i = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double pos = static_cast<double>(k) + u;
    while (pos >= cum && i + 1 < n) cum += w[++i] * nd;
    // Never select a zero-weight particle through roundoff at the end.
    std::size_t pick = i;
    while (w[pick] == 0.0 && pick > 0) --pick;
    out.particles.push_back(ps.particles[pick]);
  }
  return out;
}

inline WeightedParticleSet resample_systematic(const WeightedParticleSet& ps, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return resample_systematic(ps, unif(rng));
}

/// Weighted-mean state of every Bernoulli with existence strictly above the threshold.
inline std::vector<ObjectState> extract_estimates(const PmbDensity& pmb, double threshold = 0.5) {
  std::vector<ObjectState> out;
  for (const auto& b : pmb.bernoullis) {
    if (!(b.existence > threshold)) continue;
    ObjectState est;
    est.kinematics.position.setZero();
    est.kinematics.velocity.setZero();
    est.extent.setZero();
    est.rate = 0.0;
    for (std::size_t l = 0; l < b.density.size(); ++l) {
      const double w = b.density.weights[l];
      const ObjectState& x = b.density.particles[l];
      est.kinematics.position += w * x.kinematics.position;
      est.kinematics.velocity += w * x.kinematics.velocity;
      est.extent += w * x.extent;
      est.rate += w * x.rate;
    }
    est.extent = symmetrize(est.extent);
    out.push_back(est);
  }
  return out;
}

}  // namespace eot
