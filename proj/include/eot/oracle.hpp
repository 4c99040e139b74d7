#pragma once

// Exact PMBM update on small discrete supports by full hypothesis
// enumeration, its KLD-optimal PMB projection, and a brute-force evaluator of
// the factorized joint posterior (states, detection flags, object-oriented
// and measurement-oriented association variables).
//
// Measurement sets are bitmasks over 0-based measurement positions.

#include <cmath>
#include <cstdint>
#include <vector>

#include "eot/error.hpp"
#include "eot/models.hpp"
#include "eot/types.hpp"

namespace eot::oracle {

struct DiscreteBernoulli {
  double existence = 0.0;
  std::vector<ObjectState> states;
  std::vector<double> probs;
};

/// One support point of the undetected intensity with its mass lambda(x).
struct IntensityPoint {
  ObjectState state;
  double weight = 0.0;
};

struct OracleInstance {
  std::vector<DiscreteBernoulli> prior;
  std::vector<IntensityPoint> intensity;
  MeasurementSet measurements;
  ModelParams params;

  std::size_t n_prior() const { return prior.size(); }
  std::size_t m() const { return measurements.size(); }
  std::size_t n_total() const { return prior.size() + measurements.size(); }
};

struct LocalHypothesis {
  std::size_t component = 0;
  std::uint32_t mask = 0;
  double weight = 0.0;
  DiscreteBernoulli result;

  /// 1-based measurement indices of the associated set.
  std::vector<int> measurement_indices() const {
    std::vector<int> out;
    for (int j = 0; j < 32; ++j)
      if (mask & (1u << j)) out.push_back(j + 1);
    return out;
  }
};

using LocalHypotheses = std::vector<std::vector<LocalHypothesis>>;  // [component][hypothesis]

struct GlobalHypothesis {
  std::vector<std::size_t> choice;  // local hypothesis index per component
  double weight = 0.0;
};

struct Limits {
  std::size_t max_measurements = 6;
  std::size_t max_prior = 3;
  std::size_t max_support = 6;
};

inline void check_guard(const OracleInstance& inst, const Limits& lim = {}) {
  if (inst.m() > lim.max_measurements) throw GuardExceeded("oracle: too many measurements");
  if (inst.n_prior() > lim.max_prior) throw GuardExceeded("oracle: too many prior components");
  if (inst.intensity.size() > lim.max_support) throw GuardExceeded("oracle: intensity support too large");
  for (const auto& b : inst.prior) {
    if (b.states.size() > lim.max_support) throw GuardExceeded("oracle: Bernoulli support too large");
    if (b.states.size() != b.probs.size()) throw InvalidArgument("oracle: support size mismatch");
  }
}

namespace detail {

inline double set_likelihood(const OracleInstance& inst, std::uint32_t mask, const ObjectState& x) {
  MeasurementSet w;
  for (std::size_t j = 0; j < inst.m(); ++j)
    if (mask & (1u << j)) w.push_back(inst.measurements[j]);
  return std::exp(zip_set_log_density(w, x, inst.params));
}

inline std::vector<ObjectState> intensity_states(const OracleInstance& inst) {
  std::vector<ObjectState> s;
  for (const auto& p : inst.intensity) s.push_back(p.state);
  return s;
}

}  // namespace detail

/// Index of the local hypothesis with measurement set `mask`, or -1 if the
/// component cannot take that set.
inline long local_index(const OracleInstance& inst, std::size_t component, std::uint32_t mask) {
  if (component < inst.n_prior()) return static_cast<long>(mask);
  const std::size_t own = component - inst.n_prior();
  if (mask == 0) return 0;
  if (!(mask & (1u << own)) || (mask >> (own + 1)) != 0) return -1;
  return 1 + static_cast<long>(mask & ((1u << own) - 1u));
}

inline LocalHypotheses enumerate_local_hypotheses(const OracleInstance& inst, const Limits& lim = {}) {
  check_guard(inst, lim);
  const std::size_t m = inst.m();
  LocalHypotheses out(inst.n_total());

  for (std::size_t i = 0; i < inst.n_prior(); ++i) {
    const auto& b = inst.prior[i];
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      LocalHypothesis h;
      h.component = i;
      h.mask = mask;
      h.result.states = b.states;
      h.result.probs.resize(b.states.size());
      double ell = 0.0;
      for (std::size_t l = 0; l < b.states.size(); ++l) {
        const double v = b.probs[l] * detail::set_likelihood(inst, mask, b.states[l]);
        h.result.probs[l] = v;
        ell += v;
      }
      if (ell > 0.0)
        for (double& v : h.result.probs) v /= ell;
      if (mask == 0) {
        h.weight = 1.0 - b.existence + b.existence * ell;
        h.result.existence = h.weight > 0.0 ? b.existence * ell / h.weight : 0.0;
      } else {
        h.weight = b.existence * ell;
        h.result.existence = 1.0;
      }
      out[i].push_back(std::move(h));
    }
  }

  const auto states = detail::intensity_states(inst);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t c = inst.n_prior() + j;
    LocalHypothesis none;
    none.component = c;
    none.mask = 0;
    none.weight = 1.0;
    none.result.existence = 0.0;
    none.result.states = states;
    none.result.probs.assign(states.size(), states.empty() ? 0.0 : 1.0 / static_cast<double>(states.size()));
    out[c].push_back(std::move(none));
    for (std::uint32_t sub = 0; sub < (1u << j); ++sub) {
      const std::uint32_t mask = (1u << j) | sub;
      LocalHypothesis h;
      h.component = c;
      h.mask = mask;
      h.result.states = states;
      h.result.probs.resize(states.size());
      double ell = 0.0;
      for (std::size_t l = 0; l < states.size(); ++l) {
        const double v = inst.intensity[l].weight * detail::set_likelihood(inst, mask, states[l]);
        h.result.probs[l] = v;
        ell += v;
      }
      if (ell > 0.0)
        for (double& v : h.result.probs) v /= ell;
      const double clutter = sub == 0 ? clutter_intensity_at(inst.measurements[j].value, inst.params) : 0.0;
      h.weight = clutter + ell;
      h.result.existence = h.weight > 0.0 ? ell / h.weight : 0.0;
      out[c].push_back(std::move(h));
    }
  }
  return out;
}

/// Calls fn(beta) for every measurement-oriented association vector, where
/// beta[j] ranges over the existing components and new components n_prior + j' with j' >= j.
template <class Fn>
void for_each_beta(std::size_t n_prior, std::size_t m, Fn&& fn) {
  std::vector<std::size_t> beta(m, 0);
  auto options = [&](std::size_t j) { return n_prior + (m - j); };
  auto value = [&](std::size_t j, std::size_t k) { return k < n_prior ? k : n_prior + j + (k - n_prior); };
  std::vector<std::size_t> digit(m, 0);
  while (true) {
    for (std::size_t j = 0; j < m; ++j) beta[j] = value(j, digit[j]);
    fn(static_cast<const std::vector<std::size_t>&>(beta));
    std::size_t j = 0;
    while (j < m && ++digit[j] == options(j)) digit[j++] = 0;
    if (j == m) break;
  }
}

/// Component measurement sets implied by beta.
inline std::vector<std::uint32_t> masks_from_beta(std::size_t n_total, const std::vector<std::size_t>& beta) {
  std::vector<std::uint32_t> masks(n_total, 0);
  for (std::size_t j = 0; j < beta.size(); ++j) masks[beta[j]] |= 1u << j;
  return masks;
}

/// All global hypotheses: tuples whose measurement sets partition the scan.
inline std::vector<GlobalHypothesis> enumerate_global_hypotheses(const OracleInstance& inst,
                                                                 const LocalHypotheses& locals) {
  std::vector<GlobalHypothesis> out;
  const std::size_t n = inst.n_total();
  if (locals.size() != n) throw InvalidArgument("enumerate_global_hypotheses: local hypotheses do not match instance");
  double total = 0.0;
  for_each_beta(inst.n_prior(), inst.m(), [&](const std::vector<std::size_t>& beta) {
    const auto masks = masks_from_beta(n, beta);
    GlobalHypothesis g;
    g.choice.resize(n);
    g.weight = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      const long idx = local_index(inst, c, masks[c]);
      if (idx < 0) return;
      g.choice[c] = static_cast<std::size_t>(idx);
      g.weight *= locals[c][g.choice[c]].weight;
    }
    total += g.weight;
    out.push_back(std::move(g));
  });
  if (!(total > 0.0)) throw DegenerateWeights("enumerate_global_hypotheses: all global weights vanish");
  for (auto& g : out) g.weight /= total;
  return out;
}

/// Marginal weight of every local hypothesis.
inline std::vector<std::vector<double>> marginal_local_weights(const std::vector<GlobalHypothesis>& globals,
                                                               const LocalHypotheses& locals) {
  std::vector<std::vector<double>> out(locals.size());
  for (std::size_t c = 0; c < locals.size(); ++c) out[c].assign(locals[c].size(), 0.0);
  for (const auto& g : globals)
    for (std::size_t c = 0; c < locals.size(); ++c) out[c][g.choice[c]] += g.weight;
  return out;
}

/// KLD-optimal PMB approximation of the enumerated PMBM.
inline std::vector<DiscreteBernoulli> pmb_project(const std::vector<GlobalHypothesis>& globals,
                                                  const LocalHypotheses& locals) {
  const auto wbar = marginal_local_weights(globals, locals);
  std::vector<DiscreteBernoulli> out(locals.size());
  for (std::size_t c = 0; c < locals.size(); ++c) {
    DiscreteBernoulli& b = out[c];
    b.states = locals[c].front().result.states;
    b.probs.assign(b.states.size(), 0.0);
    for (std::size_t h = 0; h < locals[c].size(); ++h) {
      const auto& r = locals[c][h].result;
      const double wr = wbar[c][h] * r.existence;
      b.existence += wr;
      for (std::size_t l = 0; l < b.probs.size(); ++l) b.probs[l] += wr * r.probs[l];
    }
    if (b.existence > 0.0) {
      for (double& v : b.probs) v /= b.existence;
    } else {
      b.probs = locals[c].front().result.probs;
    }
  }
  return out;
}

inline std::vector<double> intensity_posterior(const OracleInstance& inst) {
  std::vector<double> out;
  for (const auto& p : inst.intensity) out.push_back(p.weight * empty_set_likelihood(p.state, inst.params));
  return out;
}

struct OracleResult {
  LocalHypotheses locals;
  std::vector<GlobalHypothesis> globals;
  std::vector<DiscreteBernoulli> projected;
};

inline OracleResult solve(const OracleInstance& inst, const Limits& lim = {}) {
  OracleResult r;
  r.locals = enumerate_local_hypotheses(inst, lim);
  r.globals = enumerate_global_hypotheses(inst, r.locals);
  r.projected = pmb_project(r.globals, r.locals);
  return r;
}

// ---------------------------------------------------------------------------
// Factorized joint posterior

/// A point of the joint (states, D, alpha, beta). state[c] = -1 is absent,
/// otherwise an index into the component's support (the intensity points for
/// new components). alpha[c] has one entry per admissible measurement.
struct Configuration {
  std::vector<int> state;
  std::vector<int> detection;  // existing components only
  std::vector<std::vector<int>> alpha;
  std::vector<std::size_t> beta;
};

inline std::size_t alpha_length(const OracleInstance& inst, std::size_t c) {
  return c < inst.n_prior() ? inst.m() : c - inst.n_prior() + 1;
}

inline double factorized_joint_mass(const OracleInstance& inst, const Configuration& cfg) {
  const std::size_t n = inst.n_total(), np = inst.n_prior(), m = inst.m();
  if (cfg.state.size() != n || cfg.detection.size() != np || cfg.alpha.size() != n || cfg.beta.size() != m)
    throw InvalidArgument("factorized_joint_mass: configuration does not match instance");
  const ModelParams& p = inst.params;
  double out = 1.0;

  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.alpha[i].size() != alpha_length(inst, i)) throw InvalidArgument("factorized_joint_mass: bad alpha length");
    const int s = cfg.state[i];
    const ObjectState* x = nullptr;
    if (i < np) {
      const auto& b = inst.prior[i];
      if (s >= 0) x = &b.states[static_cast<std::size_t>(s)];
      out *= s >= 0 ? b.existence * b.probs[static_cast<std::size_t>(s)] : 1.0 - b.existence;
      const int d = cfg.detection[i];
      out *= zip_factor_detection(d ? DetectionFlag::Detected : DetectionFlag::Missed, x, p);
      for (std::size_t j = 0; j < m; ++j)
        if (d == 0 && cfg.alpha[i][j] == 1) return 0.0;
    } else {
      if (s >= 0) {
        const auto& pt = inst.intensity[static_cast<std::size_t>(s)];
        x = &pt.state;
        out *= p.detection_probability(*x) * std::exp(-x->rate) * pt.weight;
      }
    }
    const std::size_t own = i < np ? m : i - np;
    for (std::size_t j = 0; j < cfg.alpha[i].size(); ++j) {
      const int a = cfg.alpha[i][j];
      const Vec2& z = inst.measurements[j].value;
      if (j == own) {
        if (x && a == 1) out *= x->rate * std::exp(log_meas_likelihood(z, *x));
        else if (!x && a == 1) out *= clutter_intensity_at(z, p);
        else if (x && a == 0) return 0.0;
      } else if (a == 1) {
        if (!x) return 0.0;
        out *= x->rate * std::exp(log_meas_likelihood(z, *x));
      }
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t b = cfg.beta[j];
    const bool admissible = b < np || (b >= np + j && b < n);
    if (!admissible) return 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (j >= cfg.alpha[i].size()) continue;
      if ((cfg.alpha[i][j] == 1) != (b == i)) return 0.0;
    }
  }
  return out;
}

/// Unnormalized local Bernoulli density g^{i,a}(x) of the hypothesis-sum form.
inline double local_density(const OracleInstance& inst, const LocalHypothesis& h, int state) {
  const std::size_t np = inst.n_prior();
  if (h.component < np) {
    const auto& b = inst.prior[h.component];
    if (state < 0) return h.mask == 0 ? 1.0 - b.existence : 0.0;
    const auto s = static_cast<std::size_t>(state);
    return b.existence * b.probs[s] * detail::set_likelihood(inst, h.mask, b.states[s]);
  }
  if (h.mask == 0) return state < 0 ? 1.0 : 0.0;
  const std::size_t own = h.component - np;
  if (state < 0) return h.mask == (1u << own) ? clutter_intensity_at(inst.measurements[own].value, inst.params) : 0.0;
  const auto& pt = inst.intensity[static_cast<std::size_t>(state)];
  return pt.weight * detail::set_likelihood(inst, h.mask, pt.state);
}

struct FactorizationReport {
  std::size_t globals = 0;
  std::size_t infeasible_betas = 0;
  double max_relative_error = 0.0;     // per global hypothesis, summed over states and D
  double max_pointwise_error = 0.0;    // per joint state, relative to the largest term
  double max_infeasible_mass = 0.0;    // factorized mass of beta without a global hypothesis
};

/// Sums the factorized joint over detection flags and states for every
/// association configuration and compares with the product of the local
/// Bernoulli densities of the corresponding global hypothesis.
inline FactorizationReport check_factorization_equivalence(const OracleInstance& inst, const Limits& lim = {}) {
  check_guard(inst, lim);
  const auto locals = enumerate_local_hypotheses(inst, lim);
  const std::size_t n = inst.n_total(), np = inst.n_prior(), m = inst.m();
  FactorizationReport rep;

  std::vector<int> support(n);
  for (std::size_t c = 0; c < n; ++c)
    support[c] = static_cast<int>(c < np ? inst.prior[c].states.size() : inst.intensity.size());

  for_each_beta(np, m, [&](const std::vector<std::size_t>& beta) {
    const auto masks = masks_from_beta(n, beta);
    Configuration cfg;
    cfg.beta = beta;
    cfg.alpha.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
      cfg.alpha[c].resize(alpha_length(inst, c));
      for (std::size_t j = 0; j < cfg.alpha[c].size(); ++j) cfg.alpha[c][j] = (masks[c] >> j) & 1u;
    }
    std::vector<long> idx(n);
    bool feasible = true;
    for (std::size_t c = 0; c < n; ++c) {
      idx[c] = local_index(inst, c, masks[c]);
      if (idx[c] < 0) feasible = false;
    }

    cfg.state.assign(n, -1);
    cfg.detection.assign(np, 0);
    double fact_total = 0.0;
    // Odometer over joint states, each component in {-1, 0, ..., support-1}.
    while (true) {
      double fact = 0.0;
      for (std::uint32_t d = 0; d < (1u << np); ++d) {
        for (std::size_t i = 0; i < np; ++i) cfg.detection[i] = (d >> i) & 1u;
        fact += factorized_joint_mass(inst, cfg);
      }
      fact_total += fact;
      if (feasible) {
        double hyp = 1.0;
        for (std::size_t c = 0; c < n; ++c)
          hyp *= local_density(inst, locals[c][static_cast<std::size_t>(idx[c])], cfg.state[c]);
        const double scale = std::max(std::abs(fact), std::abs(hyp));
        if (scale > 0.0) rep.max_pointwise_error = std::max(rep.max_pointwise_error, std::abs(fact - hyp) / scale);
      }
      std::size_t c = 0;
      while (c < n && ++cfg.state[c] == support[c]) cfg.state[c++] = -1;
      if (c == n) break;
    }

    if (!feasible) {
      ++rep.infeasible_betas;
      rep.max_infeasible_mass = std::max(rep.max_infeasible_mass, std::abs(fact_total));
      return;
    }
    ++rep.globals;
    // Product of per-component sums, the hypothesis-sum form.
    double g = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      const auto& h = locals[c][static_cast<std::size_t>(idx[c])];
      double s = local_density(inst, h, -1);
      for (int l = 0; l < support[c]; ++l) s += local_density(inst, h, l);
      g *= s;
    }
    double rel = 0.0;
    if (g > 0.0)
      rel = std::abs(fact_total - g) / g;
    else if (fact_total != 0.0)
      rel = 1.0;
    rep.max_relative_error = std::max(rep.max_relative_error, rel);
  });
  return rep;
}

}  // namespace eot::oracle
