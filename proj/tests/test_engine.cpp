#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

#include "support/factor_graph.hpp"
#include "support/instances.hpp"

using namespace eot;
using namespace eot::testing;

namespace {

double existence_from_graph(const std::vector<std::vector<double>>& beliefs, int var) { return 1.0 - beliefs[var][0]; }

}  // namespace

TEST(Engine, ZeroMeasurementsIsMisdetectionUpdate) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    auto inst = random_instance(rng, {1 + static_cast<std::size_t>(t % 2), 0, 4, 2});
    const auto prob = to_bp_problem(inst);
    EXPECT_EQ(prob.m, 0u);
    auto s = bp::initialize_messages(prob);
    const auto s1 = bp::run_bp_iteration(prob, s);
    const auto bel = bp::compute_beliefs(prob, s1);
    for (std::size_t c = 0; c < inst.n_prior(); ++c) {
      const auto& b = inst.prior[c];
      double l0 = 0.0;
      std::vector<double> w(b.states.size());
      for (std::size_t l = 0; l < b.states.size(); ++l) {
        w[l] = b.probs[l] * empty_set_likelihood(b.states[l], inst.params);
        l0 += w[l];
      }
      const double r = b.existence;
      EXPECT_NEAR(bel[c].existence, r * l0 / (1.0 - r + r * l0), 1e-12);
      for (std::size_t l = 0; l < w.size(); ++l) EXPECT_NEAR(bel[c].weights[l], w[l] / l0, 1e-12);
    }
  }
}

TEST(Engine, CertainDetectionWithVanishingRateKeepsPrior) {
  Rng rng(2);
  auto inst = random_instance(rng, {2, 0, 3, 1});
  inst.params.p_detect = 1.0;
  for (auto& b : inst.prior)
    for (auto& x : b.states) x.rate = 1e-13;
  const auto prob = to_bp_problem(inst);
  const auto s = bp::initialize_messages(prob);
  const auto bel = bp::compute_beliefs(prob, s);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(s.components[c].chi.existence, inst.prior[c].existence, 1e-12);
    EXPECT_NEAR(bel[c].existence, inst.prior[c].existence, 1e-10);
  }
}

TEST(Engine, SingleNewComponentMatchesClosedForm) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto inst = random_instance(rng, {0, 1, 3, 3});
    const auto bel = run_bp(to_bp_problem(inst), 3);
    double ell = 0.0, mass = 0.0;
    std::vector<double> w;
    for (const auto& pt : inst.intensity) {
      const double base = inst.params.detection_probability(pt.state) * std::exp(-pt.state.rate) * pt.weight;
      w.push_back(base * pt.state.rate * meas_likelihood(inst.measurements[0], pt.state));
      ell += w.back();
      mass += base;
    }
    const double lc = clutter_intensity_at(inst.measurements[0].value, inst.params);
    EXPECT_NEAR(bel[0].existence, ell / (ell + lc), 1e-12);
    for (std::size_t l = 0; l < w.size(); ++l) EXPECT_NEAR(bel[0].weights[l], w[l] / ell, 1e-12);
  }
}

TEST(Engine, TreeInstancesMatchOracle) {
  Rng rng(4);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto inst = random_instance(rng, {0, 1 + static_cast<std::size_t>(t % 2), 3, 4});
    const auto bel = run_bp(to_bp_problem(inst), 3);
    const auto orc = oracle::solve(inst);
    for (std::size_t c = 0; c < bel.size(); ++c) {
      worst = std::max(worst, std::abs(bel[c].existence - orc.projected[c].existence));
      if (orc.projected[c].existence > 0.0)
        for (std::size_t l = 0; l < bel[c].weights.size(); ++l)
          worst = std::max(worst, std::abs(bel[c].weights[l] - orc.projected[c].probs[l]));
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Engine, FixedPointEqualsGenericSumProduct) {
  // Loopy instances: the specialised schedule must converge to the same fixed
  // point as plain sum-product on the explicit graph.
  Rng rng(11);
  std::uniform_int_distribution<int> np(0, 2), mm(1, 3);
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    const auto inst = random_instance(rng, {static_cast<std::size_t>(np(rng)), static_cast<std::size_t>(mm(rng)), 3, 3});
    auto g = build_explicit_graph(inst);
    const auto gb = g.graph.run(600);
    const auto bel = run_bp(to_bp_problem(inst), 200);
    for (std::size_t c = 0; c < bel.size(); ++c) {
      const auto& q = gb[static_cast<std::size_t>(g.state[c])];
      worst = std::max(worst, std::abs(bel[c].existence - existence_from_graph(gb, g.state[c])));
      double present = 0.0;  // not 1 - q[0]: existence can be tiny
      for (std::size_t l = 1; l < q.size(); ++l) present += q[l];
      for (std::size_t l = 0; l < bel[c].weights.size(); ++l)
        worst = std::max(worst, std::abs(bel[c].weights[l] - q[l + 1] / present));
    }
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Engine, CertainDetectionEquivalence) {
  // With pD = 1 the detection variable carries no information beyond the state:
  // its D = 0 branch only sees the empty-state mass of chi.
  Rng rng(5);
  for (int t = 0; t < 40; ++t) {
    auto inst = random_instance(rng, {1 + static_cast<std::size_t>(t % 2), 1 + static_cast<std::size_t>(t % 3), 3, 3});
    inst.params.p_detect = 1.0;
    const auto prob = to_bp_problem(inst);
    auto prev = bp::initialize_messages(prob);
    for (int it = 0; it < 4; ++it) {
      const auto next = bp::run_bp_iteration(prob, prev);
      for (std::size_t c = 0; c < prob.n_prior; ++c) {
        const auto& pm = prev.components[c];
        const auto& cm = next.components[c];
        double detect = 0.0;
        for (std::size_t l = 0; l < prob.components[c].size(); ++l)
          detect += pm.chi.weights[l] * std::exp(-prob.components[c].rate[l]);
        const auto p0 = bp::log_products(cm.mu0), p1 = bp::log_products(cm.mu1);
        for (std::size_t j = 0; j < prob.m; ++j) {
          const double nu0 = std::exp(p0.exclusive[j]) * pm.chi.non_existence;
          const double nu1 = std::exp(p1.exclusive[j]) * pm.chi.existence * detect;
          EXPECT_NEAR(cm.lambda_bar[j], nu1 / (nu0 + nu1), 1e-12);
        }
      }
      prev = next;
    }
  }

  // Where no loop runs through the detection variables (no existing components,
  // or no measurements) the update equals the detection-free Poisson model.
  for (int t = 0; t < 40; ++t) {
    const bool no_prior = t % 2 == 0;
    auto inst = random_instance(rng, {no_prior ? 0u : 2u, no_prior ? 2u : 0u, 3, 3});
    inst.params.p_detect = 1.0;
    auto g = build_explicit_graph(inst, false);
    const auto gb = g.graph.run(400);
    const auto bel = run_bp(to_bp_problem(inst), 5);
    for (std::size_t c = 0; c < bel.size(); ++c)
      EXPECT_NEAR(bel[c].existence, existence_from_graph(gb, g.state[c]), 1e-10);
  }
}

TEST(Engine, IterationIsPure) {
  Rng rng(6);
  const auto inst = random_instance(rng, {2, 3, 3, 3});
  const auto prob = to_bp_problem(inst);
  auto s = bp::initialize_messages(prob);
  s = bp::run_bp_iteration(prob, s);
  const auto copy = s;
  const auto a = bp::run_bp_iteration(prob, s);
  const auto b = bp::run_bp_iteration(prob, copy);
  ASSERT_EQ(s.components.size(), copy.components.size());
  for (std::size_t c = 0; c < s.components.size(); ++c) {
    EXPECT_EQ(s.components[c].theta_bar, copy.components[c].theta_bar);
    EXPECT_EQ(a.components[c].theta_bar, b.components[c].theta_bar);
    EXPECT_EQ(a.components[c].xi0, b.components[c].xi0);
    for (std::size_t j = 0; j < a.components[c].extrinsic.size(); ++j) {
      EXPECT_EQ(a.components[c].extrinsic[j].existence, b.components[c].extrinsic[j].existence);
      EXPECT_EQ(a.components[c].extrinsic[j].weights, b.components[c].extrinsic[j].weights);
    }
  }
  EXPECT_EQ(a.rounds, s.rounds + 1);
}

TEST(Engine, ReorderingPreservesIntensityOnTrees) {
  // The exact posterior does not depend on measurement order; on trees the
  // first moment of the beliefs must not either.
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    auto inst = random_instance(rng, {0, 2, 3, 3});
    auto swapped = inst;
    std::swap(swapped.measurements[0], swapped.measurements[1]);
    const auto a = run_bp(to_bp_problem(inst), 3);
    const auto b = run_bp(to_bp_problem(swapped), 3);
    double ca = 0.0, cb = 0.0;
    std::vector<double> pa(inst.intensity.size(), 0.0), pb(pa);
    for (std::size_t c = 0; c < 2; ++c) {
      ca += a[c].existence, cb += b[c].existence;
      for (std::size_t l = 0; l < pa.size(); ++l) {
        pa[l] += a[c].existence * a[c].weights[l];
        pb[l] += b[c].existence * b[c].weights[l];
      }
    }
    EXPECT_NEAR(ca, cb, 1e-10);
    for (std::size_t l = 0; l < pa.size(); ++l) EXPECT_NEAR(pa[l], pb[l], 1e-10);
  }
}

TEST(Engine, ZeroCensorFloorWithoutReorderIsIdentity) {
  Rng rng(8);
  const auto inst = random_instance(rng, {2, 3, 3, 3});
  const auto prob = to_bp_problem(inst);
  const auto same = bp::censoring_and_reordering(prob, 0.0, false);
  const auto a = run_bp(prob, 3), b = run_bp(same, 3);
  for (std::size_t c = 0; c < a.size(); ++c) {
    EXPECT_EQ(a[c].existence, b[c].existence);
    EXPECT_EQ(a[c].weights, b[c].weights);
  }
}

TEST(Engine, MessagesStayFiniteOnSimulationScaleInstances) {
  Rng rng(9);
  ModelParams p;
  std::uniform_real_distribution<double> pos(-60.0, 60.0), u(0.0, 1.0);
  std::uniform_int_distribution<int> nobj(0, 3);
  for (int t = 0; t < 1000; ++t) {
    PmbDensity pmb;
    pmb.intensity = predict_intensity({}, p);
    MeasurementSet z;
    const int n = nobj(rng);
    for (int i = 0; i < n; ++i) {
      ObjectState truth;
      truth.kinematics.position = Vec2(pos(rng), pos(rng));
      truth.extent = sample_inverse_wishart2(p.birth_extent.dof, p.birth_extent.scale(), rng);
      truth.rate = 10.0;
      auto w = sample_object_measurements(truth, p, rng);
      z.insert(z.end(), w.begin(), w.end());
      BernoulliComponent b;
      b.existence = 0.2 + 0.79 * u(rng);
      b.label = static_cast<std::uint64_t>(i + 1);
      for (int l = 0; l < 20; ++l) {
        ObjectState x = truth;
        x.kinematics.position += sample_normal2(Vec2::Zero(), 4.0 * Mat2::Identity(), rng);
        x.rate = sample_gamma(1000.0, 100.0, rng);
        b.density.particles.push_back(x);
      }
      b.density.weights.assign(20, 1.0 / 20.0);
      pmb.bernoullis.push_back(b);
    }
    auto c = sample_clutter(p, rng);
    z.insert(z.end(), c.begin(), c.end());
    for (std::size_t j = 0; j < z.size(); ++j) z[j].index = static_cast<int>(j + 1);

    const auto prob = bp::build_update_problem(pmb, z, p, 20, rng);
    auto s = bp::initialize_messages(prob);
    for (int it = 0; it < 3; ++it) {
      s = bp::run_bp_iteration(prob, s);
      for (const auto& cm : s.components) {
        for (double v : cm.theta_bar) ASSERT_TRUE(std::isfinite(v) && v >= 0.0);
        for (double v : cm.xi0) ASSERT_TRUE(std::isfinite(v) && v >= 0.0);
        for (double v : cm.lambda_bar) ASSERT_TRUE(std::isfinite(v) && v >= 0.0);
        for (const auto& e : cm.extrinsic) ASSERT_TRUE(std::isfinite(e.existence) && e.existence >= 0.0);
      }
    }
    for (const auto& b : bp::compute_beliefs(prob, s)) {
      ASSERT_TRUE(b.existence >= 0.0 && b.existence <= 1.0);
      double sum = 0.0;
      for (double w : b.weights) sum += w;
      ASSERT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(Problem, NoMeasurements) {
  Rng rng(10);
  ModelParams p;
  PmbDensity pmb;
  pmb.intensity = predict_intensity({}, p);
  const auto prob = bp::build_update_problem(pmb, {}, p, 10, rng);
  EXPECT_EQ(prob.m, 0u);
  EXPECT_TRUE(prob.components.empty());
  EXPECT_THROW(bp::build_update_problem(pmb, {}, p, 0, rng), InvalidArgument);
}

TEST(Problem, NewComponentInitialExistenceByHand) {
  ModelParams p;
  const std::size_t L = 500;
  Rng rng(12);
  PmbDensity pmb;
  pmb.intensity = predict_intensity({}, p);
  const MeasurementSet z{{Vec2::Zero(), 1}};
  const auto prob = bp::build_update_problem(pmb, z, p, L, rng);
  const auto& comp = prob.components.at(0);
  ASSERT_EQ(comp.size(), L);

  // Independent evaluation of pD e^{-rate} lambda(x) / (L q(x)).
  const double dof = p.birth_extent.dof;
  const Mat2 psi = p.birth_extent.scale();
  auto log_iw = [&](const Mat2& x) {
    return 0.5 * dof * std::log(psi.determinant()) - dof * std::log(2.0) - 0.5 * std::log(std::numbers::pi) -
           std::lgamma(0.5 * dof) - std::lgamma(0.5 * (dof - 1.0)) - 0.5 * (dof + 3.0) * std::log(x.determinant()) -
           0.5 * (psi * x.inverse()).trace();
  };
  auto log_gauss = [](const Vec2& x, const Vec2& mu, const Mat2& cov) {
    return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.determinant()) -
           0.5 * (x - mu).dot(cov.inverse() * (x - mu));
  };
  const double k = p.birth_rate_prior.shape, beta = p.birth_rate_prior.rate;
  auto log_gam = [&](double x) { return k * std::log(beta) - std::lgamma(k) + (k - 1.0) * std::log(x) - beta * x; };
  double mass = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const ObjectState& x = comp.particles[l];
    const double common = log_gauss(x.velocity(), p.birth_velocity.mean, p.birth_velocity.covariance) + log_iw(x.extent) +
                          log_gam(x.rate);
    const double log_lambda = std::log(p.birth_rate) - std::log(p.region.area()) + common;
    const double log_q = log_gauss(x.position(), Vec2::Zero(), p.birth_extent.mean) + common;
    const double v = std::exp(std::log(p.p_detect) - x.rate + log_lambda - log_q) / static_cast<double>(L);
    EXPECT_NEAR(std::exp(comp.log_prior[l]), v, 1e-10 * v);
    mass += v;
  }
  const auto s = bp::initialize_messages(prob);
  EXPECT_NEAR(s.components[0].extrinsic[0].existence, mass / (1.0 + mass), 1e-12);
}
