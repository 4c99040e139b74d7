#pragma once

// One scan's update problem: the existing (predicted) Bernoulli components,
// one new component per measurement and the measurement set. Component
// n_prior + j may only take measurements 0..j (0-based), which is the
// incremental structure of the new-component local hypotheses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "eot/models.hpp"
#include "eot/predict.hpp"
#include "eot/stats.hpp"
#include "eot/types.hpp"

namespace eot::bp {

enum class ComponentKind { Existing, New };

/// Unnormalized prior mass of a new component on its particle support:
/// log of pD e^{-rate} lambda(x) / (L q(x)) per particle; the empty state has mass 1.
struct NewComponentSupport {
  std::vector<ObjectState> particles;
  std::vector<double> log_masses;
};

/// Per-component particle data in struct-of-arrays form, with everything the
/// message loops need precomputed.
struct ProblemComponent {
  ComponentKind kind = ComponentKind::Existing;
  std::size_t own_measurement = 0;  // new components only
  std::uint64_t label = 0;          // existing components only

  std::vector<ObjectState> particles;
  std::vector<double> log_prior;  // per particle
  double log_prior_empty = 0.0;

  // Gaussian likelihood cache: log(rate * l(z|x)) = log_gl_const - q/2 with
  // q = ia dx^2 + 2 ib dx dy + ic dy^2.
  std::vector<double> px, py, ia, ib, ic, log_gl_const;
  std::vector<double> p_detect, rate;

  std::size_t size() const { return particles.size(); }
  bool is_new() const { return kind == ComponentKind::New; }

  double log_gamma_ell(const Vec2& z, std::size_t l) const {
    const double dx = z.x() - px[l], dy = z.y() - py[l];
    return log_gl_const[l] - 0.5 * (ia[l] * dx * dx + 2.0 * ib[l] * dx * dy + ic[l] * dy * dy);
  }
};

struct UpdateProblem {
  std::size_t n_prior = 0;
  std::size_t m = 0;
  std::vector<ProblemComponent> components;  // n_prior existing, then m new
  MeasurementSet measurements;
  std::vector<double> clutter;  // clutter intensity at each measurement
  ModelParams params;
  // Legacy-branch theta_bar below censor_floor * (max over the measurement) is
  // zeroed for the round. Zero disables censoring.
  double censor_floor = 0.0;

  /// Number of measurement branches of a component (measurements 0..n-1).
  std::size_t branches(std::size_t c) const {
    return components[c].is_new() ? components[c].own_measurement + 1 : m;
  }
  /// Components that may take measurement j, in index order.
  std::vector<std::size_t> admissible(std::size_t j) const {
    std::vector<std::size_t> out;
    out.reserve(n_prior + m - j);
    for (std::size_t i = 0; i < n_prior; ++i) out.push_back(i);
    for (std::size_t i = n_prior + j; i < n_prior + m; ++i) out.push_back(i);
    return out;
  }
};

namespace detail {

inline void fill_cache(ProblemComponent& c, const ModelParams& p) {
  const std::size_t n = c.particles.size();
  c.px.resize(n), c.py.resize(n), c.ia.resize(n), c.ib.resize(n), c.ic.resize(n);
  c.log_gl_const.resize(n), c.p_detect.resize(n), c.rate.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    const ObjectState& x = c.particles[l];
    const Mat2& e = x.extent;
    const double det = e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0);
    if (!(det > 0.0)) throw InvalidArgument("update problem: particle extent is not positive definite");
    c.px[l] = x.kinematics.position.x();
    c.py[l] = x.kinematics.position.y();
    c.ia[l] = e(1, 1) / det;
    c.ib[l] = -0.5 * (e(0, 1) + e(1, 0)) / det;
    c.ic[l] = e(0, 0) / det;
    c.log_gl_const[l] = std::log(x.rate) - std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
    c.p_detect[l] = p.detection_probability(x);
    c.rate[l] = x.rate;
  }
}

}  // namespace detail

/// Problem from explicit new-component supports (one per measurement).
inline UpdateProblem make_update_problem(std::span<const BernoulliComponent> prior,
                                         std::vector<NewComponentSupport> supports, MeasurementSet z,
                                         const ModelParams& params) {
  if (supports.size() != z.size()) throw InvalidArgument("make_update_problem: one support per measurement required");
  UpdateProblem prob;
  prob.n_prior = prior.size();
  prob.m = z.size();
  prob.params = params;
  prob.measurements = std::move(z);
  for (std::size_t j = 0; j < prob.m; ++j) prob.measurements[j].index = static_cast<int>(j + 1);
  prob.clutter.reserve(prob.m);
  for (const auto& meas : prob.measurements) prob.clutter.push_back(clutter_intensity_at(meas.value, params));

  prob.components.reserve(prob.n_prior + prob.m);
  for (const auto& b : prior) {
    if (b.density.particles.empty()) throw InvalidArgument("make_update_problem: component without particles");
    if (b.density.weights.size() != b.density.particles.size())
      throw InvalidArgument("make_update_problem: weight/particle size mismatch");
    ProblemComponent c;
    c.kind = ComponentKind::Existing;
    c.label = b.label;
    c.particles = b.density.particles;
    c.log_prior.resize(c.particles.size());
    const double log_r = safe_log(b.existence);
    for (std::size_t l = 0; l < c.particles.size(); ++l) c.log_prior[l] = log_r + safe_log(b.density.weights[l]);
    c.log_prior_empty = safe_log(1.0 - b.existence);
    detail::fill_cache(c, params);
    prob.components.push_back(std::move(c));
  }
  for (std::size_t j = 0; j < prob.m; ++j) {
    auto& s = supports[j];
    if (s.particles.empty()) throw InvalidArgument("make_update_problem: new component support is empty (L = 0)");
    if (s.log_masses.size() != s.particles.size()) throw InvalidArgument("make_update_problem: support size mismatch");
    ProblemComponent c;
    c.kind = ComponentKind::New;
    c.own_measurement = j;
    c.particles = std::move(s.particles);
    c.log_prior = std::move(s.log_masses);
    c.log_prior_empty = 0.0;
    detail::fill_cache(c, params);
    prob.components.push_back(std::move(c));
  }
  return prob;
}

/// Measurement-driven importance sampling of a new component's support:
/// position ~ N(z, birth extent mean), velocity / extent / rate from the birth
/// specs; log masses are pD e^{-rate} lambda(x) / (L q(x)).
inline NewComponentSupport draw_new_component_support(const Vec2& z, std::span<const IntensityComponent> intensity,
                                                      const ModelParams& p, std::size_t num_particles, Rng& rng) {
  if (num_particles == 0) throw InvalidArgument("draw_new_component_support: L = 0");
  NewComponentSupport out;
  out.particles.resize(num_particles);
  out.log_masses.resize(num_particles);
  const Mat2 pos_cov = p.birth_extent.mean;
  const Mat2 iw_scale = p.birth_extent.scale();
  const double log_l = std::log(static_cast<double>(num_particles));
  for (std::size_t l = 0; l < num_particles; ++l) {
    ObjectState& x = out.particles[l];
    x.kinematics.position = sample_normal2(z, pos_cov, rng);
    x.kinematics.velocity = sample_normal2(p.birth_velocity.mean, p.birth_velocity.covariance, rng);
    x.extent = sample_inverse_wishart2(p.birth_extent.dof, iw_scale, rng);
    x.rate = sample_gamma(p.birth_rate_prior.shape, p.birth_rate_prior.rate, rng);
    const double log_q = log_normal2(x.kinematics.position, z, pos_cov) +
                         log_normal2(x.kinematics.velocity, p.birth_velocity.mean, p.birth_velocity.covariance) +
                         log_inverse_wishart2(x.extent, p.birth_extent.dof, iw_scale) +
                         log_gamma_density(x.rate, p.birth_rate_prior.shape, p.birth_rate_prior.rate);
    const double log_lambda = intensity_log_value(intensity, x);
    out.log_masses[l] = safe_log(p.detection_probability(x)) - x.rate + log_lambda - log_q - log_l;
  }
  return out;
}

/// Which measurements get a live new component, in which order. Measurements
/// that existing components already explain come first and keep only their
/// clutter option; the remaining ones are grouped into clusters, and the last
/// measurement of each cluster carries the cluster's new component (centred on
/// the cluster mean), which can absorb every earlier measurement.
struct BirthPlan {
  std::vector<std::size_t> order;  // order[k] = original position of the k-th measurement
  std::vector<char> live;          // per reordered measurement
  std::vector<Vec2> centre;        // proposal centre per reordered measurement
};

inline double birth_cluster_distance(const ModelParams& p) {
  const Mat2& e = p.birth_extent.mean;
  const double tr = e.trace(), det = e.determinant();
  const double lmax = 0.5 * (tr + std::sqrt(std::max(tr * tr - 4.0 * det, 0.0)));
  return 3.0 * std::sqrt(lmax);
}

inline BirthPlan plan_births(std::span<const BernoulliComponent> prior, const MeasurementSet& z, const ModelParams& p,
                             double explained_ratio = 1.0) {
  const std::size_t m = z.size();
  std::vector<double> score(m, 0.0);
  for (const auto& b : prior) {
    for (std::size_t l = 0; l < b.density.size(); ++l) {
      const ObjectState& x = b.density.particles[l];
      const double w = b.existence * b.density.weights[l] * p.detection_probability(x) * x.rate;
      if (!(w > 0.0)) continue;
      for (std::size_t j = 0; j < m; ++j) score[j] += w * meas_likelihood(z[j], x);
    }
  }
  std::vector<std::size_t> explained, open;
  for (std::size_t j = 0; j < m; ++j)
    (score[j] >= explained_ratio * clutter_intensity_at(z[j].value, p) ? explained : open).push_back(j);

  auto by_position = [&](std::size_t a, std::size_t b) {
    const Vec2 &za = z[a].value, &zb = z[b].value;
    return za.x() != zb.x() ? za.x() < zb.x() : za.y() < zb.y();
  };
  std::stable_sort(explained.begin(), explained.end(), [&](std::size_t a, std::size_t b) {
    return score[a] != score[b] ? score[a] > score[b] : by_position(a, b);
  });

  // Single-linkage clusters of the unexplained measurements.
  const double d2 = std::pow(birth_cluster_distance(p), 2);
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t a = 0; a < open.size(); ++a)
    for (std::size_t b = a + 1; b < open.size(); ++b)
      if ((z[open[a]].value - z[open[b]].value).squaredNorm() <= d2) parent[find(open[a])] = find(open[b]);
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<long> slot(m, -1);
  std::sort(open.begin(), open.end(), by_position);
  for (std::size_t j : open) {
    const std::size_t r = find(j);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<std::size_t>(slot[r])].push_back(j);
  }

  BirthPlan plan;
  for (std::size_t j : explained) {
    plan.order.push_back(j);
    plan.live.push_back(0);
    plan.centre.push_back(z[j].value);
  }
  for (auto& cl : clusters) {
    Vec2 mean = Vec2::Zero();
    for (std::size_t j : cl) mean += z[j].value;
    mean /= static_cast<double>(cl.size());
    // The measurement closest to the mean goes last.
    auto best = std::min_element(cl.begin(), cl.end(), [&](std::size_t a, std::size_t b) {
      return (z[a].value - mean).squaredNorm() < (z[b].value - mean).squaredNorm();
    });
    std::rotate(best, best + 1, cl.end());
    for (std::size_t k = 0; k < cl.size(); ++k) {
      plan.order.push_back(cl[k]);
      plan.live.push_back(k + 1 == cl.size());
      plan.centre.push_back(k + 1 == cl.size() ? mean : z[cl[k]].value);
    }
  }
  return plan;
}

/// Support of a censored new component: a single particle with zero mass, so
/// only its empty state (the clutter explanation of its measurement) remains.
inline NewComponentSupport censored_support(const Vec2& z, const ModelParams& p) {
  ObjectState x;
  x.kinematics.position = z;
  x.extent = p.birth_extent.mean;
  x.rate = p.birth_rate_prior.shape / p.birth_rate_prior.rate;
  return NewComponentSupport{{x}, {kNegInf}};
}

inline UpdateProblem build_update_problem(const PmbDensity& pmb, const MeasurementSet& z, const ModelParams& p,
                                          std::size_t num_particles, Rng& rng, const BirthPlan* plan = nullptr) {
  if (num_particles == 0) throw InvalidArgument("build_update_problem: L = 0");
  std::vector<NewComponentSupport> supports;
  supports.reserve(z.size());
  if (plan == nullptr) {
    for (const auto& meas : z)
      supports.push_back(draw_new_component_support(meas.value, pmb.intensity, p, num_particles, rng));
    return make_update_problem(pmb.bernoullis, std::move(supports), z, p);
  }
  if (plan->order.size() != z.size()) throw InvalidArgument("build_update_problem: birth plan does not match the scan");
  MeasurementSet reordered;
  reordered.reserve(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    reordered.push_back(z[plan->order[k]]);
    supports.push_back(plan->live[k] ? draw_new_component_support(plan->centre[k], pmb.intensity, p, num_particles, rng)
                                     : censored_support(plan->centre[k], p));
  }
  return make_update_problem(pmb.bernoullis, std::move(supports), std::move(reordered), p);
}

/// Reorders measurements (and their new-component supports) by decreasing
/// best fit to any existing component, and enables censoring of weak legacy
/// messages at `censor_floor`. Measurements that no existing component
/// explains end up last, where their new components may absorb the rest of a
/// cluster.
inline UpdateProblem censoring_and_reordering(UpdateProblem prob, double censor_floor = 1e-9, bool reorder = true) {
  prob.censor_floor = censor_floor;
  if (!reorder || prob.m < 2) return prob;

  std::vector<double> key(prob.m, kNegInf);
  for (std::size_t j = 0; j < prob.m; ++j) {
    const Vec2& z = prob.measurements[j].value;
    for (std::size_t i = 0; i < prob.n_prior; ++i) {
      const auto& c = prob.components[i];
      std::vector<double> terms(c.size());
      for (std::size_t l = 0; l < c.size(); ++l) terms[l] = c.log_prior[l] + c.log_gamma_ell(z, l);
      key[j] = std::max(key[j], log_sum_exp(terms));
    }
  }
  std::vector<std::size_t> order(prob.m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] > key[b];
    const Vec2& za = prob.measurements[a].value;
    const Vec2& zb = prob.measurements[b].value;
    return za.x() != zb.x() ? za.x() < zb.x() : za.y() < zb.y();
  });

  UpdateProblem out = prob;
  for (std::size_t k = 0; k < prob.m; ++k) {
    const std::size_t j = order[k];
    out.measurements[k] = prob.measurements[j];
    out.measurements[k].index = static_cast<int>(k + 1);
    out.clutter[k] = prob.clutter[j];
    out.components[prob.n_prior + k] = prob.components[prob.n_prior + j];
    out.components[prob.n_prior + k].own_measurement = k;
  }
  return out;
}

}  // namespace eot::bp
