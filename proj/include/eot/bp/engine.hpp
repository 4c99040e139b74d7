#pragma once

// Parallel loopy BP rounds on an UpdateProblem.
//
// One round, reading only the previous MessageState:
//   theta_bar from the previous extrinsic messages (with optional censoring)
//   mu from the previous xi, nu from the previous chi, then lambda_bar
//   eta_psi, xi, tau, rho (per particle)
//   extrinsic messages and chi from rho and the detection message zeta
// Particle messages are kept as log masses on the component's own support,
// with the empty state as one extra entry.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "eot/bp/messages.hpp"
#include "eot/bp/problem.hpp"
#include "eot/error.hpp"
#include "eot/stats.hpp"

namespace eot::bp {

/// Normalized Bernoulli message on a component support. existence and
/// non_existence are computed separately so that neither loses precision.
struct ParticleMessage {
  double existence = 0.0;
  double non_existence = 1.0;
  std::vector<double> weights;
};

struct ComponentMessages {
  std::vector<double> theta_bar;   // per branch, value at alpha = 1 (alpha = 0 pinned to 1)
  std::vector<double> lambda_bar;  // existing only
  std::vector<double> mu0, mu1;
  std::vector<double> nu0, nu1;  // normalized to nu0 + nu1 = 1
  std::vector<double> eta_psi1;
  std::vector<double> xi0;
  std::vector<double> tau0, tau1;
  std::vector<ParticleMessage> extrinsic;
  ParticleMessage chi;  // existing only

  std::vector<std::vector<double>> log_rho;  // [branch][particle]
  std::vector<double> log_rho_empty;         // [branch]
};

struct MessageState {
  std::vector<ComponentMessages> components;
  int rounds = 0;
};

struct Belief {
  double existence = 0.0;
  std::vector<double> weights;
};

namespace detail {

inline ParticleMessage to_particle_message(std::span<const double> log_present, double log_empty, std::size_t c,
                                           std::size_t j = NumericalFailure::npos) {
  const double lp = log_sum_exp(log_present);
  const double lt = log_add(lp, log_empty);
  if (!std::isfinite(lt) || std::isnan(lp)) throw NumericalFailure("particle message has no finite mass", c, j);
  ParticleMessage out;
  out.existence = std::exp(lp - lt);
  out.non_existence = std::exp(log_empty - lt);
  out.weights.resize(log_present.size());
  if (lp == kNegInf) {
    // Certainly empty; weights are irrelevant but must stay normalized.
    std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(log_present.size()));
  } else {
    for (std::size_t l = 0; l < log_present.size(); ++l) out.weights[l] = std::exp(log_present[l] - lp);
  }
  return out;
}

inline void check_finite(double v, const char* what, std::size_t c, std::size_t j) {
  if (!std::isfinite(v) || v < 0.0) throw NumericalFailure(what, c, j);
}

/// sum_l w_l rate_l l(z_j | x_l) under a normalized particle message.
inline double weighted_gamma_ell(const ProblemComponent& comp, const std::vector<double>& w, const Vec2& z) {
  double s = 0.0;
  for (std::size_t l = 0; l < comp.size(); ++l)
    if (w[l] > 0.0) s += w[l] * std::exp(comp.log_gamma_ell(z, l));
  return s;
}

/// log of prod_j mu(D) over all branches (the fresh zeta products).
struct MuProducts {
  double log0 = 0.0, log1 = 0.0;
};

inline MuProducts fresh_mu_products(const ComponentMessages& cm) {
  MuProducts out;
  for (std::size_t j = 0; j < cm.xi0.size(); ++j) {
    const BinaryMessage mu = phi_to_detection(cm.theta_bar[j], cm.xi0[j]);
    out.log0 += safe_log(mu.at0);
    out.log1 += safe_log(mu.at1);
  }
  return out;
}

/// prior (+ zeta) + sum_j log rho_j for every particle and the empty state,
/// together with the counts of vanishing rho factors so that leave-one-out
/// products stay exact.
struct RhoTotals {
  std::vector<double> finite;
  std::vector<int> zeros;
  double finite_empty = 0.0;
  int zeros_empty = 0;
};

inline RhoTotals rho_totals(const ComponentMessages& cm, std::size_t n) {
  RhoTotals t;
  t.finite.assign(n, 0.0);
  t.zeros.assign(n, 0);
  for (std::size_t j = 0; j < cm.log_rho.size(); ++j) {
    const auto& r = cm.log_rho[j];
    for (std::size_t l = 0; l < n; ++l) {
      if (r[l] == kNegInf)
        ++t.zeros[l];
      else
        t.finite[l] += r[l];
    }
    if (cm.log_rho_empty[j] == kNegInf)
      ++t.zeros_empty;
    else
      t.finite_empty += cm.log_rho_empty[j];
  }
  return t;
}

inline double leave_one_out(double finite, int zeros, double self) {
  const bool self_zero = self == kNegInf;
  if (zeros - (self_zero ? 1 : 0) > 0) return kNegInf;
  return self_zero ? finite : finite - self;
}

/// log zeta per particle and for the empty state.
inline void log_zeta(const ProblemComponent& comp, const MuProducts& mp, std::vector<double>& out, double& empty) {
  out.resize(comp.size());
  for (std::size_t l = 0; l < comp.size(); ++l) out[l] = log_zeta_present(comp.p_detect[l], comp.rate[l], mp.log0, mp.log1);
  empty = mp.log0;
}

}  // namespace detail

/// First-round messages: existing extrinsics carry the prior times the
/// empty-set likelihood, new-component extrinsics and chi carry the prior,
/// xi is uninformative.
inline MessageState initialize_messages(const UpdateProblem& prob) {
  MessageState s;
  s.components.resize(prob.components.size());
  for (std::size_t c = 0; c < prob.components.size(); ++c) {
    const auto& comp = prob.components[c];
    auto& cm = s.components[c];
    const std::size_t nb = prob.branches(c);
    cm.theta_bar.assign(nb, 0.0);
    cm.eta_psi1.assign(nb, 0.0);
    cm.xi0.assign(nb, 1.0);
    cm.tau0.assign(nb, 1.0);
    cm.tau1.assign(nb, 1.0);
    if (!comp.is_new()) {
      cm.lambda_bar.assign(nb, 0.0);
      cm.mu0.assign(nb, 1.0);
      cm.mu1.assign(nb, 1.0);
      cm.nu0.assign(nb, 0.5);
      cm.nu1.assign(nb, 0.5);
      cm.chi = detail::to_particle_message(comp.log_prior, comp.log_prior_empty, c);
    }
    std::vector<double> init(comp.log_prior);
    if (!comp.is_new())
      for (std::size_t l = 0; l < comp.size(); ++l)
        init[l] += std::log(1.0 - comp.p_detect[l] + comp.p_detect[l] * std::exp(-comp.rate[l]));
    const ParticleMessage first = detail::to_particle_message(init, comp.log_prior_empty, c);
    cm.extrinsic.assign(nb, first);
  }
  return s;
}

/// One fully parallel round: every message is computed from `prev` only.
inline MessageState run_bp_iteration(const UpdateProblem& prob, const MessageState& prev) {
  const std::size_t nc = prob.components.size();
  if (prev.components.size() != nc) throw InvalidArgument("run_bp_iteration: message state does not match problem");
  MessageState s;
  s.rounds = prev.rounds + 1;
  s.components.resize(nc);
  if (prob.m == 0) {
    for (std::size_t c = 0; c < nc; ++c) s.components[c].chi = prev.components[c].chi;
    return s;
  }

  // theta_bar from the previous extrinsic messages.
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& comp = prob.components[c];
    const auto& pm = prev.components[c];
    auto& cm = s.components[c];
    const std::size_t nb = prob.branches(c);
    cm.theta_bar.resize(nb);
    for (std::size_t j = 0; j < nb; ++j) {
      const ParticleMessage& eps = pm.extrinsic[j];
      const double wl = detail::weighted_gamma_ell(comp, eps.weights, prob.measurements[j].value);
      const bool own = comp.is_new() && j == comp.own_measurement;
      double th;
      if (own) {
        if (!(eps.non_existence > 0.0)) throw NumericalFailure("extrinsic message excludes the empty state", c, j);
        th = theta_bar_own(eps.existence, eps.non_existence, wl, prob.clutter[j]);
      } else {
        th = theta_bar_legacy(eps.existence, wl);
      }
      detail::check_finite(th, "theta_bar is not finite", c, j);
      cm.theta_bar[j] = th;
    }
  }
  if (prob.censor_floor > 0.0) {
    for (std::size_t j = 0; j < prob.m; ++j) {
      double mx = 0.0;
      for (std::size_t c : prob.admissible(j)) mx = std::max(mx, s.components[c].theta_bar[j]);
      for (std::size_t c : prob.admissible(j)) {
        const bool own = prob.components[c].is_new() && prob.components[c].own_measurement == j;
        double& th = s.components[c].theta_bar[j];
        if (!own && th < prob.censor_floor * mx) th = 0.0;
      }
    }
  }

  // Detection subgraph of existing components.
  for (std::size_t c = 0; c < prob.n_prior; ++c) {
    const auto& comp = prob.components[c];
    const auto& pm = prev.components[c];
    auto& cm = s.components[c];
    const std::size_t nb = prob.m;
    cm.mu0.resize(nb), cm.mu1.resize(nb), cm.nu0.resize(nb), cm.nu1.resize(nb), cm.lambda_bar.resize(nb);
    for (std::size_t j = 0; j < nb; ++j) {
      const BinaryMessage mu = phi_to_detection(cm.theta_bar[j], pm.xi0[j]);
      cm.mu0[j] = mu.at0;
      cm.mu1[j] = mu.at1;
    }
    double detect = 0.0, miss_present = 0.0;
    for (std::size_t l = 0; l < comp.size(); ++l) {
      const double w = pm.chi.weights[l];
      detect += w * comp.p_detect[l] * std::exp(-comp.rate[l]);
      miss_present += w * (1.0 - comp.p_detect[l]);
    }
    const double log_detect = safe_log(pm.chi.existence * detect);
    const double log_miss = safe_log(pm.chi.non_existence + pm.chi.existence * miss_present);
    const LogProducts p0 = log_products(cm.mu0);
    const LogProducts p1 = log_products(cm.mu1);
    for (std::size_t j = 0; j < nb; ++j) {
      const double lb = lambda_bar_from_log(p0.exclusive[j] + log_miss, p1.exclusive[j] + log_detect);
      if (std::isnan(lb)) throw NumericalFailure("detection messages vanish", c, j);
      cm.lambda_bar[j] = lb;
      cm.nu1[j] = lb;
      cm.nu0[j] = 1.0 - lb;
    }
  }

  // Association consistency.
  for (std::size_t c = 0; c < nc; ++c) {
    auto& cm = s.components[c];
    const std::size_t nb = prob.branches(c);
    cm.eta_psi1.resize(nb);
    cm.xi0.resize(nb);
    for (std::size_t j = 0; j < nb; ++j)
      cm.eta_psi1[j] = prob.components[c].is_new() ? eta_psi_new(cm.theta_bar[j])
                                                    : eta_psi_existing(cm.theta_bar[j], cm.lambda_bar[j]);
  }
  std::vector<double> eta;
  for (std::size_t j = 0; j < prob.m; ++j) {
    const auto adm = prob.admissible(j);
    eta.resize(adm.size());
    for (std::size_t k = 0; k < adm.size(); ++k) eta[k] = s.components[adm[k]].eta_psi1[j];
    const auto xi = exclusive_sums(eta);
    for (std::size_t k = 0; k < adm.size(); ++k) {
      detail::check_finite(xi[k], "xi is not finite", adm[k], j);
      s.components[adm[k]].xi0[j] = xi[k];
    }
  }

  // tau, rho, zeta and the new particle messages.
  std::vector<double> log_z, buf;
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& comp = prob.components[c];
    auto& cm = s.components[c];
    const std::size_t nb = prob.branches(c);
    const std::size_t n = comp.size();
    cm.tau0.resize(nb), cm.tau1.resize(nb);
    cm.log_rho.assign(nb, {});
    cm.log_rho_empty.resize(nb);
    for (std::size_t j = 0; j < nb; ++j) {
      const BinaryMessage tau = comp.is_new() ? tau_new(cm.xi0[j]) : tau_existing(cm.lambda_bar[j], cm.xi0[j]);
      cm.tau0[j] = tau.at0;
      cm.tau1[j] = tau.at1;
      const bool own = comp.is_new() && j == comp.own_measurement;
      const Vec2& z = prob.measurements[j].value;
      auto& r = cm.log_rho[j];
      r.resize(n);
      const double lt0 = safe_log(tau.at0), lt1 = safe_log(tau.at1);
      if (own) {
        for (std::size_t l = 0; l < n; ++l) r[l] = comp.log_gamma_ell(z, l) + lt1;
        cm.log_rho_empty[j] = safe_log(rho_own_empty(prob.clutter[j], tau));
      } else {
        for (std::size_t l = 0; l < n; ++l) r[l] = log_add(comp.log_gamma_ell(z, l) + lt1, lt0);
        cm.log_rho_empty[j] = lt0;
      }
    }

    log_z.assign(n, 0.0);
    double log_z_empty = 0.0;
    if (!comp.is_new()) detail::log_zeta(comp, detail::fresh_mu_products(cm), log_z, log_z_empty);

    const detail::RhoTotals tot = detail::rho_totals(cm, n);
    cm.extrinsic.resize(nb);
    buf.resize(n);
    for (std::size_t j = 0; j < nb; ++j) {
      const auto& r = cm.log_rho[j];
      for (std::size_t l = 0; l < n; ++l)
        buf[l] = comp.log_prior[l] + log_z[l] + detail::leave_one_out(tot.finite[l], tot.zeros[l], r[l]);
      const double e = comp.log_prior_empty + log_z_empty +
                       detail::leave_one_out(tot.finite_empty, tot.zeros_empty, cm.log_rho_empty[j]);
      cm.extrinsic[j] = detail::to_particle_message(buf, e, c, j);
    }
    if (!comp.is_new()) {
      for (std::size_t l = 0; l < n; ++l)
        buf[l] = comp.log_prior[l] + (tot.zeros[l] > 0 ? kNegInf : tot.finite[l]);
      const double e = comp.log_prior_empty + (tot.zeros_empty > 0 ? kNegInf : tot.finite_empty);
      cm.chi = detail::to_particle_message(buf, e, c);
    }
  }
  return s;
}

/// Beliefs: prior x zeta x prod_j rho (no zeta for new components).
inline std::vector<Belief> compute_beliefs(const UpdateProblem& prob, const MessageState& s) {
  const std::size_t nc = prob.components.size();
  if (s.components.size() != nc) throw InvalidArgument("compute_beliefs: message state does not match problem");
  if (prob.m > 0 && s.rounds == 0) throw InvalidArgument("compute_beliefs: run at least one iteration first");
  std::vector<Belief> out(nc);
  std::vector<double> buf, log_z;
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& comp = prob.components[c];
    const auto& cm = s.components[c];
    const std::size_t n = comp.size();
    log_z.assign(n, 0.0);
    double log_z_empty = 0.0;
    if (!comp.is_new()) detail::log_zeta(comp, detail::fresh_mu_products(cm), log_z, log_z_empty);
    buf.resize(n);
    double e = comp.log_prior_empty + log_z_empty;
    for (std::size_t l = 0; l < n; ++l) buf[l] = comp.log_prior[l] + log_z[l];
    for (std::size_t j = 0; j < cm.log_rho.size(); ++j) {
      for (std::size_t l = 0; l < n; ++l) buf[l] += cm.log_rho[j][l];
      e += cm.log_rho_empty[j];
    }
    const ParticleMessage pm = detail::to_particle_message(buf, e, c);
    out[c].existence = pm.existence;
    out[c].weights = pm.weights;
  }
  return out;
}

}  // namespace eot::bp
