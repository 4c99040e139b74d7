#include <gtest/gtest.h>

#include "support/instances.hpp"

using namespace eot;
using namespace eot::testing;

TEST(Oracle, LocalHypothesesForTwoMeasurements) {
  Rng rng(1);
  const auto inst = random_instance(rng, {0, 2, 3, 3});
  const auto locals = oracle::enumerate_local_hypotheses(inst);
  ASSERT_EQ(locals.size(), 2u);
  // Non-existence plus the listed sets.
  ASSERT_EQ(locals[0].size(), 2u);
  EXPECT_EQ(locals[0][1].measurement_indices(), (std::vector<int>{1}));
  ASSERT_EQ(locals[1].size(), 3u);
  EXPECT_EQ(locals[1][1].measurement_indices(), (std::vector<int>{2}));
  EXPECT_EQ(locals[1][2].measurement_indices(), (std::vector<int>{1, 2}));

  // Singleton weight: clutter plus <lambda, l(z|.)>.
  double ell = 0.0;
  for (const auto& pt : inst.intensity) {
    const auto& x = pt.state;
    ell += pt.weight * inst.params.detection_probability(x) * std::exp(-x.rate) * x.rate *
           meas_likelihood(inst.measurements[0], x);
  }
  EXPECT_NEAR(locals[0][1].weight, clutter_intensity_at(inst.measurements[0].value, inst.params) + ell, 1e-15);
}

TEST(Oracle, GlobalHypothesisCounts) {
  Rng rng(2);
  auto a = random_instance(rng, {0, 2, 2, 2});
  auto ga = oracle::enumerate_global_hypotheses(a, oracle::enumerate_local_hypotheses(a));
  ASSERT_EQ(ga.size(), 2u);

  auto b = random_instance(rng, {1, 1, 2, 2});
  const auto lb = oracle::enumerate_local_hypotheses(b);
  EXPECT_EQ(lb[0].size(), 2u);
  EXPECT_EQ(oracle::enumerate_global_hypotheses(b, lb).size(), 2u);

  auto c = random_instance(rng, {2, 0, 2, 2});
  EXPECT_EQ(oracle::enumerate_global_hypotheses(c, oracle::enumerate_local_hypotheses(c)).size(), 1u);
}

TEST(Oracle, GlobalsPartitionMeasurementsAndSumToOne) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto inst = random_instance(rng, {static_cast<std::size_t>(t % 3), 1 + static_cast<std::size_t>(t % 3), 2, 2});
    const auto r = oracle::solve(inst);
    double total = 0.0;
    for (const auto& g : r.globals) {
      total += g.weight;
      std::uint32_t seen = 0;
      for (std::size_t c = 0; c < g.choice.size(); ++c) {
        const std::uint32_t mask = r.locals[c][g.choice[c]].mask;
        EXPECT_EQ(seen & mask, 0u);
        seen |= mask;
      }
      EXPECT_EQ(seen, (1u << inst.m()) - 1u);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);

    // Projection keeps the expected existence and gives normalized weights.
    const auto wbar = oracle::marginal_local_weights(r.globals, r.locals);
    for (std::size_t c = 0; c < r.locals.size(); ++c) {
      double expect = 0.0, wsum = 0.0;
      for (std::size_t h = 0; h < r.locals[c].size(); ++h) {
        expect += wbar[c][h] * r.locals[c][h].result.existence;
        wsum += wbar[c][h];
      }
      EXPECT_NEAR(wsum, 1.0, 1e-12);
      EXPECT_NEAR(r.projected[c].existence, expect, 1e-12);
      double psum = 0.0;
      for (double v : r.projected[c].probs) psum += v;
      EXPECT_NEAR(psum, 1.0, 1e-12);
    }
  }
}

TEST(Oracle, ProjectionExamples) {
  oracle::LocalHypotheses locals(1);
  oracle::LocalHypothesis present, absent;
  present.result = {1.0, {ObjectState{}}, {1.0}};
  absent.result = {0.0, {ObjectState{}}, {1.0}};
  locals[0] = {present, absent};
  const std::vector<oracle::GlobalHypothesis> globals{{{0}, 0.7}, {{1}, 0.3}};
  EXPECT_NEAR(oracle::pmb_project(globals, locals)[0].existence, 0.7, 1e-15);
  const std::vector<oracle::GlobalHypothesis> single{{{0}, 1.0}};
  const auto id = oracle::pmb_project(single, locals);
  EXPECT_EQ(id[0].existence, 1.0);
  EXPECT_EQ(id[0].probs, present.result.probs);
}

TEST(Oracle, GuardRefusesLargeInstances) {
  Rng rng(4);
  const auto inst = random_instance(rng, {1, 7, 2, 2});
  EXPECT_THROW(oracle::enumerate_local_hypotheses(inst), GuardExceeded);
}

TEST(Factorized, ZeroConfigurations) {
  Rng rng(5);
  const auto inst = random_instance(rng, {1, 2, 2, 2});
  oracle::Configuration cfg;
  cfg.state = {0, -1, 0};
  cfg.detection = {1};
  cfg.alpha = {{1, 0}, {0}, {0, 1}};
  cfg.beta = {0, 2};
  EXPECT_GT(oracle::factorized_joint_mass(inst, cfg), 0.0);
  auto bad = cfg;
  bad.beta = {1, 2};  // alpha says component 0 owns z1
  EXPECT_EQ(oracle::factorized_joint_mass(inst, bad), 0.0);
  bad = cfg;
  bad.detection = {0};  // missed but associated
  EXPECT_EQ(oracle::factorized_joint_mass(inst, bad), 0.0);
}

TEST(Factorized, HandProductOneComponentOneMeasurement) {
  Rng rng(6);
  auto inst = random_instance(rng, {1, 1, 1, 1});
  const auto& b = inst.prior[0];
  const auto& x = b.states[0];
  const auto& z = inst.measurements[0];
  const double pd = inst.params.p_detect;

  // Existing component detected with z, new component absent.
  oracle::Configuration cfg{{0, -1}, {1}, {{1}, {0}}, {0}};
  const double hand = b.existence * b.probs[0] * pd * std::exp(-x.rate) * x.rate * meas_likelihood(z, x);
  EXPECT_NEAR(oracle::factorized_joint_mass(inst, cfg), hand, 1e-15 * hand);

  // z is clutter, existing component present but missed.
  oracle::Configuration clutter{{0, -1}, {0}, {{0}, {1}}, {1}};
  const double hand2 = b.existence * b.probs[0] * (1.0 - pd) * clutter_intensity_at(z.value, inst.params);
  EXPECT_NEAR(oracle::factorized_joint_mass(inst, clutter), hand2, 1e-15 * hand2);
}

TEST(Factorized, EquivalenceWithHypothesisForm) {
  Rng rng(7);
  std::uniform_int_distribution<int> np(0, 2), mm(0, 3), sup(1, 4);
  for (int t = 0; t < 50; ++t) {
    auto inst = random_instance(rng, {static_cast<std::size_t>(np(rng)), static_cast<std::size_t>(mm(rng)),
                                      static_cast<std::size_t>(sup(rng)), static_cast<std::size_t>(sup(rng))});
    if (t % 10 == 0) inst.params.p_detect = 1.0;
    const auto rep = oracle::check_factorization_equivalence(inst);
    EXPECT_LT(rep.max_relative_error, 1e-10);
    EXPECT_LT(rep.max_pointwise_error, 1e-10);
    EXPECT_EQ(rep.max_infeasible_mass, 0.0);
  }
}

TEST(Oracle, MisdetectionMatchesBpExactly) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto inst = random_instance(rng, {1 + static_cast<std::size_t>(t % 3), 0, 4, 2});
    const auto r = oracle::solve(inst);
    const auto prob = to_bp_problem(inst);
    const auto bel = bp::compute_beliefs(prob, bp::run_bp_iteration(prob, bp::initialize_messages(prob)));
    for (std::size_t c = 0; c < inst.n_prior(); ++c) {
      EXPECT_NEAR(bel[c].existence, r.projected[c].existence, 1e-15);
      for (std::size_t l = 0; l < bel[c].weights.size(); ++l)
        EXPECT_NEAR(bel[c].weights[l], r.projected[c].probs[l], 1e-15);
    }
  }
}

TEST(Oracle, IntensityPosteriorIsMisdetectionScaling) {
  Rng rng(9);
  const auto inst = random_instance(rng, {0, 1, 2, 3});
  const auto post = oracle::intensity_posterior(inst);
  for (std::size_t l = 0; l < post.size(); ++l)
    EXPECT_DOUBLE_EQ(post[l], inst.intensity[l].weight * empty_set_likelihood(inst.intensity[l].state, inst.params));
}
