// Closed-form scalar messages against brute-force sum-product over the factor
// truth tables, with randomly drawn incoming messages.

#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "eot/bp/messages.hpp"

using namespace eot;
using namespace eot::bp;

namespace {

constexpr double kTol = 1e-12;

struct RandomState {
  Rng rng{2024};
  std::uniform_real_distribution<double> u{0.01, 1.0}, big{0.01, 20.0};

  double prob() { return u(rng); }
  double pos() { return big(rng); }
  std::vector<double> weights(std::size_t n) {
    std::vector<double> w(n);
    double s = 0.0;
    for (auto& v : w) s += (v = u(rng));
    for (auto& v : w) v /= s;
    return w;
  }
};

// A Bernoulli message on a small discrete support; index 0 is the empty state.
struct Support {
  double r;
  std::vector<double> w, gamma_ell, pd, rate;
  double at(std::size_t s) const { return s == 0 ? 1.0 - r : r * w[s - 1]; }
  std::size_t size() const { return w.size() + 1; }
};

Support random_support(RandomState& st, std::size_t n = 4) {
  Support s;
  s.r = st.prob();
  s.w = st.weights(n);
  for (std::size_t l = 0; l < n; ++l) {
    s.gamma_ell.push_back(st.pos() * 0.05);
    s.pd.push_back(st.prob());
    s.rate.push_back(st.pos() * 0.3);
  }
  return s;
}

// Likelihood factor tables: (state index, alpha) -> value.
double legacy_table(const Support& s, std::size_t x, int a) {
  if (a == 0) return 1.0;
  return x == 0 ? 0.0 : s.gamma_ell[x - 1];
}
double own_table(const Support& s, double clutter, std::size_t x, int a) {
  if (x == 0) return a == 1 ? clutter : 1.0;
  return a == 1 ? s.gamma_ell[x - 1] : 0.0;
}
double detection_table(const Support& s, std::size_t x, int d) {
  if (x == 0) return d == 0 ? 1.0 : 0.0;
  return d == 1 ? s.pd[x - 1] * std::exp(-s.rate[x - 1]) : 1.0 - s.pd[x - 1];
}
double phi_table(int d, int a) { return (d == 0 && a == 1) ? 0.0 : 1.0; }

}  // namespace

TEST(Messages, WorkedExamples) {
  const std::vector<double> eta{2.0, 3.0};
  const auto xi = exclusive_sums(eta);
  EXPECT_DOUBLE_EQ(xi[0], 3.0);
  EXPECT_DOUBLE_EQ(xi[1], 2.0);
  const auto mu = phi_to_detection(0.5, 1.0);
  EXPECT_DOUBLE_EQ(mu.at0, 1.0);
  EXPECT_DOUBLE_EQ(mu.at1, 1.5);
}

TEST(Messages, ThetaBarLegacyMatchesTable) {
  RandomState st;
  for (int t = 0; t < 100; ++t) {
    const auto s = random_support(st);
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t x = 0; x < s.size(); ++x) {
      m0 += legacy_table(s, x, 0) * s.at(x);
      m1 += legacy_table(s, x, 1) * s.at(x);
    }
    double wl = 0.0;
    for (std::size_t l = 0; l < s.w.size(); ++l) wl += s.w[l] * s.gamma_ell[l];
    EXPECT_NEAR(theta_bar_legacy(s.r, wl), m1 / m0, kTol);
  }
}

TEST(Messages, ThetaBarOwnMatchesTable) {
  RandomState st;
  for (int t = 0; t < 100; ++t) {
    const auto s = random_support(st);
    const double clutter = st.pos() * 1e-3;
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t x = 0; x < s.size(); ++x) {
      m0 += own_table(s, clutter, x, 0) * s.at(x);
      m1 += own_table(s, clutter, x, 1) * s.at(x);
    }
    double wl = 0.0;
    for (std::size_t l = 0; l < s.w.size(); ++l) wl += s.w[l] * s.gamma_ell[l];
    EXPECT_NEAR(theta_bar_own(s.r, 1.0 - s.r, wl, clutter), m1 / m0, kTol * (1.0 + m1 / m0));
  }
}

TEST(Messages, PhiToDetectionMatchesTable) {
  RandomState st;
  for (int t = 0; t < 100; ++t) {
    const double th = st.pos(), xi0 = st.pos(), xi1 = st.pos();
    // incoming to Phi from alpha: theta_bar(alpha) * xi(alpha)
    const double in[2] = {1.0 * xi0, th * xi1};
    double mu[2] = {0.0, 0.0};
    for (int d = 0; d < 2; ++d)
      for (int a = 0; a < 2; ++a) mu[d] += phi_table(d, a) * in[a];
    const auto got = phi_to_detection(th, xi0, xi1);
    EXPECT_NEAR(got.at0, mu[0], kTol);
    EXPECT_NEAR(got.at1, mu[1], kTol * mu[1]);
  }
}

TEST(Messages, DetectionToPhiMatchesTable) {
  RandomState st;
  for (int t = 0; t < 100; ++t) {
    const auto chi = random_support(st);
    const double o0 = st.pos(), o1 = st.pos();
    double nu[2] = {0.0, 0.0};
    for (int d = 0; d < 2; ++d)
      for (std::size_t x = 0; x < chi.size(); ++x) nu[d] += detection_table(chi, x, d) * chi.at(x);
    nu[0] *= o0;
    nu[1] *= o1;
    double detect = 0.0, pd_mass = 0.0;
    for (std::size_t l = 0; l < chi.w.size(); ++l) {
      detect += chi.w[l] * chi.pd[l] * std::exp(-chi.rate[l]);
      pd_mass += chi.w[l] * chi.pd[l];
    }
    const auto got = detection_to_phi(o0, o1, 1.0 - chi.r * pd_mass, chi.r * detect);
    EXPECT_NEAR(got.at0, nu[0], kTol * (1.0 + nu[0]));
    EXPECT_NEAR(got.at1, nu[1], kTol * (1.0 + nu[1]));

    // Phi -> alpha, normalized at alpha = 0.
    double lam[2] = {0.0, 0.0};
    for (int a = 0; a < 2; ++a)
      for (int d = 0; d < 2; ++d) lam[a] += phi_table(d, a) * nu[d];
    const double expect = lam[1] / lam[0];
    EXPECT_NEAR(lambda_bar(got), expect, kTol);
    EXPECT_NEAR(lambda_bar_from_log(std::log(nu[0]), std::log(nu[1])), expect, kTol);
  }
}

TEST(Messages, LambdaBarFromLogEdgeCases) {
  EXPECT_EQ(lambda_bar_from_log(0.0, kNegInf), 0.0);
  EXPECT_EQ(lambda_bar_from_log(kNegInf, 0.0), 1.0);
  EXPECT_TRUE(std::isnan(lambda_bar_from_log(kNegInf, kNegInf)));
}

TEST(Messages, AssociationMessagesMatchTables) {
  RandomState st;
  std::uniform_int_distribution<int> count(1, 5);
  for (int t = 0; t < 100; ++t) {
    const int n = count(st.rng);
    std::vector<double> theta(n), lam(n), eta(n);
    std::vector<bool> is_new(n);
    for (int i = 0; i < n; ++i) {
      theta[i] = st.pos();
      lam[i] = st.prob();
      is_new[i] = st.prob() < 0.4;
      // alpha -> Psi: product of theta_bar(alpha) and, for existing, lambda_bar(alpha);
      // both are pinned to 1 at alpha = 0.
      eta[i] = theta[i] * (is_new[i] ? 1.0 : lam[i]);
      EXPECT_NEAR(is_new[i] ? eta_psi_new(theta[i]) : eta_psi_existing(theta[i], lam[i]), eta[i], kTol);
    }
    // Brute force Psi_i -> alpha_i through beta.
    const auto xi0 = exclusive_sums(eta);
    for (int i = 0; i < n; ++i) {
      double x[2] = {0.0, 0.0};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < n; ++b) {
          const double psi = (a == 1) == (b == i) ? 1.0 : 0.0;
          double others = 1.0;
          for (int k = 0; k < n; ++k)
            if (k != i) others *= psi_to_beta(eta[k], b == k);
          x[a] += psi * others;
        }
      EXPECT_NEAR(xi0[i], x[0] / x[1], kTol * (1.0 + x[0] / x[1]));

      // alpha -> likelihood factor
      const auto tau = is_new[i] ? tau_new(xi0[i]) : tau_existing(lam[i], xi0[i]);
      const double t0 = x[0] / x[1] * 1.0, t1 = 1.0 * (is_new[i] ? 1.0 : lam[i]);
      EXPECT_NEAR(tau.at0, t0, kTol * (1.0 + t0));
      EXPECT_NEAR(tau.at1, t1, kTol);
    }
  }
}

TEST(Messages, RhoMatchesTables) {
  RandomState st;
  for (int t = 0; t < 100; ++t) {
    const auto s = random_support(st);
    const BinaryMessage tau{st.pos(), st.prob()};
    const double clutter = st.pos() * 1e-3;
    for (std::size_t x = 0; x < s.size(); ++x) {
      const double leg = legacy_table(s, x, 0) * tau.at0 + legacy_table(s, x, 1) * tau.at1;
      const double own = own_table(s, clutter, x, 0) * tau.at0 + own_table(s, clutter, x, 1) * tau.at1;
      if (x == 0) {
        EXPECT_NEAR(rho_legacy_empty(tau), leg, kTol * (1.0 + leg));
        EXPECT_NEAR(rho_own_empty(clutter, tau), own, kTol * (1.0 + own));
      } else {
        const double g = s.gamma_ell[x - 1];
        EXPECT_NEAR(rho_legacy_present(g, tau), leg, kTol * (1.0 + leg));
        EXPECT_NEAR(rho_own_present(g, tau), own, kTol * (1.0 + own));
        EXPECT_NEAR(std::exp(log_rho_legacy_present(std::log(g), tau)), leg, kTol * (1.0 + leg));
        EXPECT_NEAR(std::exp(log_rho_own_present(std::log(g), tau)), own, kTol * (1.0 + own));
      }
    }
  }
}

TEST(Messages, ZetaMatchesTable) {
  RandomState st;
  for (int t = 0; t < 100; ++t) {
    const auto s = random_support(st);
    const double m0 = st.pos(), m1 = st.pos();
    for (std::size_t x = 0; x < s.size(); ++x) {
      const double z = detection_table(s, x, 0) * m0 + detection_table(s, x, 1) * m1;
      if (x == 0) {
        EXPECT_NEAR(zeta_empty(m0), z, kTol);
      } else {
        EXPECT_NEAR(zeta_present(s.pd[x - 1], s.rate[x - 1], m0, m1), z, kTol * (1.0 + z));
        EXPECT_NEAR(std::exp(log_zeta_present(s.pd[x - 1], s.rate[x - 1], std::log(m0), std::log(m1))), z,
                    kTol * (1.0 + z));
      }
    }
  }
}

TEST(Messages, ExclusiveProducts) {
  const std::vector<double> v{2.0, 0.0, 4.0};
  const auto p = log_products(v);
  EXPECT_EQ(p.total, kNegInf);
  EXPECT_EQ(p.exclusive[0], kNegInf);
  EXPECT_NEAR(p.exclusive[1], std::log(8.0), 1e-15);
  EXPECT_EQ(p.exclusive[2], kNegInf);
  const std::vector<double> w{2.0, 3.0, 5.0};
  const auto q = log_products(w);
  EXPECT_NEAR(q.total, std::log(30.0), 1e-14);
  EXPECT_NEAR(q.exclusive[1], std::log(10.0), 1e-14);
}
