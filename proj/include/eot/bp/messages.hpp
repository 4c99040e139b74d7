#pragma once

// Closed forms of the scalar messages on the association / detection part of
// the factor graph. Binary messages are stored as (value at 0, value at 1).
//
// Naming follows the role of each message:
//   theta_bar  likelihood factor -> alpha, normalized so theta_bar(0) = 1
//   mu         detection consistency factor Phi -> D
//   nu         D -> Phi
//   lambda_bar Phi -> alpha, normalized so lambda_bar(0) = 1
//   eta_psi    alpha -> association consistency factor Psi
//   xi         Psi -> alpha, xi(1) = 1
//   tau        combined message at alpha towards the likelihood factor
//   rho        likelihood factor -> Bernoulli state (evaluated per particle)
//   zeta       detection subgraph -> Bernoulli state (evaluated per particle)

#include <cmath>
#include <span>
#include <vector>

#include "eot/stats.hpp"

namespace eot::bp {

struct BinaryMessage {
  double at0 = 1.0;
  double at1 = 1.0;
};

/// theta_bar(1) for a likelihood factor without clutter term:
/// r_eps * sum_l w_l * rate_l * l(z | x_l); `weighted_likelihood` is the sum.
inline double theta_bar_legacy(double existence, double weighted_likelihood) {
  return existence * weighted_likelihood;
}

/// theta_bar(1) for the factor that also explains the measurement as clutter.
inline double theta_bar_own(double existence, double non_existence, double weighted_likelihood, double clutter) {
  return existence * weighted_likelihood / non_existence + clutter;
}

inline BinaryMessage phi_to_detection(double theta_bar1, double xi0, double xi1 = 1.0) {
  return {xi0, xi0 + theta_bar1 * xi1};
}

/// nu(D) = prod_{other branches} mu(D) * integral f^D(D | x) chi(x).
/// `detect_mass` = r_chi * sum w pD e^{-rate}; `miss_mass` = 1 - r_chi * sum w pD.
inline BinaryMessage detection_to_phi(double others_mu0, double others_mu1, double miss_mass, double detect_mass) {
  return {others_mu0 * miss_mass, others_mu1 * detect_mass};
}

/// lambda_bar(1) = nu(1) / (nu(0) + nu(1)), from log nu values.
inline double lambda_bar_from_log(double log_nu0, double log_nu1) {
  if (log_nu1 == kNegInf && log_nu0 == kNegInf) return std::nan("");
  if (log_nu1 == kNegInf) return 0.0;
  if (log_nu0 == kNegInf) return 1.0;
  return 1.0 / (1.0 + std::exp(log_nu0 - log_nu1));
}

inline double lambda_bar(const BinaryMessage& nu) { return nu.at1 / (nu.at0 + nu.at1); }

inline double eta_psi_existing(double theta_bar1, double lambda_bar1) { return theta_bar1 * lambda_bar1; }
inline double eta_psi_new(double theta_bar1) { return theta_bar1; }

/// kappa(beta) from Psi: eta(1) where beta selects the component, else 1.
inline double psi_to_beta(double eta1, bool beta_selects_component) { return beta_selects_component ? eta1 : 1.0; }

/// xi(0) for every member of an admissible set: sum of eta(1) over the others.
/// Prefix/suffix sums so that no subtraction of the own term takes place.
inline std::vector<double> exclusive_sums(std::span<const double> eta) {
  const std::size_t n = eta.size();
  std::vector<double> prefix(n + 1, 0.0), suffix(n + 1, 0.0), out(n);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + eta[i];
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + eta[i];
  for (std::size_t i = 0; i < n; ++i) out[i] = prefix[i] + suffix[i + 1];
  return out;
}

inline BinaryMessage tau_existing(double lambda_bar1, double xi0) { return {xi0, lambda_bar1}; }
inline BinaryMessage tau_new(double xi0) { return {xi0, 1.0}; }

/// rho for a factor without clutter term; `gamma_ell` = rate * l(z | x).
inline double rho_legacy_present(double gamma_ell, const BinaryMessage& tau) { return gamma_ell * tau.at1 + tau.at0; }
inline double rho_legacy_empty(const BinaryMessage& tau) { return tau.at0; }
inline double rho_own_present(double gamma_ell, const BinaryMessage& tau) { return gamma_ell * tau.at1; }
inline double rho_own_empty(double clutter, const BinaryMessage& tau) { return clutter * tau.at1 + tau.at0; }

inline double log_rho_legacy_present(double log_gamma_ell, const BinaryMessage& tau) {
  return log_add(log_gamma_ell + safe_log(tau.at1), safe_log(tau.at0));
}
inline double log_rho_own_present(double log_gamma_ell, const BinaryMessage& tau) {
  return log_gamma_ell + safe_log(tau.at1);
}

/// zeta at a present state: (1 - pD) prod mu(0) + pD e^{-rate} prod mu(1).
inline double zeta_present(double p_detect, double rate, double prod_mu0, double prod_mu1) {
  return (1.0 - p_detect) * prod_mu0 + p_detect * std::exp(-rate) * prod_mu1;
}
inline double zeta_empty(double prod_mu0) { return prod_mu0; }

inline double log_zeta_present(double p_detect, double rate, double log_prod_mu0, double log_prod_mu1) {
  return log_add(safe_log(1.0 - p_detect) + log_prod_mu0, safe_log(p_detect) - rate + log_prod_mu1);
}

/// Products over all entries and over all-but-one, in log space. Zeros are
/// counted separately so the exclusive product of the other entries stays
/// exact when exactly one factor vanishes.
struct LogProducts {
  double total = 0.0;
  std::vector<double> exclusive;
};

inline LogProducts log_products(std::span<const double> values) {
  double finite_sum = 0.0;
  int zeros = 0;
  for (double v : values) {
    if (v > 0.0)
      finite_sum += std::log(v);
    else
      ++zeros;
  }
  LogProducts out;
  out.total = zeros > 0 ? kNegInf : finite_sum;
  out.exclusive.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool self_zero = !(values[i] > 0.0);
    const int others = zeros - (self_zero ? 1 : 0);
    out.exclusive[i] = others > 0 ? kNegInf : (self_zero ? finite_sum : finite_sum - std::log(values[i]));
  }
  return out;
}

}  // namespace eot::bp
