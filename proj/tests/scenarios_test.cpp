#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "seqnpa/scenarios.hpp"

using namespace seqnpa;
using namespace seqnpa::scenarios;
using Eigen::Matrix2cd;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;

namespace {

const double kSqrt2 = std::sqrt(2.0);

// Density-matrix computation of p(b1 b2 | y1 y2, z), written out independently.
double oracle_probability(double eta, int b1, int b2, int y1, int y2, int z) {
  Matrix2cd id = Matrix2cd::Identity(), sx, sz;
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;
  // Bloch vectors of |0>, |+>, |->, |1>.
  const double rx[4] = {0, 1, -1, 0}, rz[4] = {1, 0, 0, -1};
  const Matrix2cd rho = 0.5 * (id + rx[z] * sx + rz[z] * sz);
  const auto proj = [&](int y, int b) {
    const double dx = (y ? -1.0 : 1.0) / kSqrt2, dz = 1.0 / kSqrt2, s = b ? -1.0 : 1.0;
    return Matrix2cd(0.5 * (id + s * (dx * sx + dz * sz)));
  };
  const Matrix2cd k = std::sqrt((1 + eta) / 2) * proj(y1, b1) + std::sqrt((1 - eta) / 2) * proj(y1, 1 - b1);
  return (proj(y2, b2) * k * rho * k.adjoint()).trace().real();
}

// Bob_1 always answers 0 and never disturbs; Bob_2 measures sharply; Eve knows b1.
Realization constant_bob1_realization() {
  const Realization honest = simulator_realization(1.0);
  Realization r;
  for (int z = 0; z < 4; ++z) r.states.push_back(Eigen::Vector2cd(honest.states[z][0], honest.states[z][2]));
  r.op = [](const SiteOperator& op) -> MatrixXcd {
    if (op.party == 1) return op.outcomes[0] == 0 ? Matrix2cd(Matrix2cd::Identity()) : Matrix2cd(Matrix2cd::Zero());
    if (op.outcomes[0] != 0) return Matrix2cd::Zero();
    const double dx = (op.inputs[1] ? -1.0 : 1.0) / kSqrt2, dz = 1.0 / kSqrt2, s = op.outcomes[1] ? -1.0 : 1.0;
    Matrix2cd n;
    n << dz, dx, dx, -dz;
    return 0.5 * (Matrix2cd::Identity() + s * n);
  };
  return r;
}

SeqDistribution deterministic_distribution() {
  SeqDistribution d;
  for (int y1 = 0; y1 < 2; ++y1)
    for (int y2 = 0; y2 < 2; ++y2)
      for (int z = 0; z < 4; ++z) d(bit(z, 0), bit(z, 1), y1, y2, z) = 1.0;
  return d;
}

}  // namespace

TEST(ClosedForm, Values) {
  EXPECT_NEAR(tradeoff_closed_form(0.5), (2 + kSqrt2) / 4, 1e-15);
  EXPECT_NEAR(tradeoff_closed_form(0.75), (5 + kSqrt2) / 8, 1e-15);
  EXPECT_NEAR(tradeoff_closed_form(0.75), 0.801777, 1e-6);
  EXPECT_NEAR(tradeoff_closed_form(qrac_optimum()), (4 + kSqrt2) / 8, 1e-7);
  EXPECT_THROW(tradeoff_closed_form(0.8536), ScenarioError);  // radicand -4.8e-4
  EXPECT_THROW(tradeoff_closed_form(0.49), ScenarioError);
  EXPECT_THROW(tradeoff_closed_form(0.86), ScenarioError);
}

TEST(ClosedForm, DomainEnds) {
  EXPECT_NEAR(qrac_optimum(), 0.853553, 1e-6);
  EXPECT_NEAR(dv_tau_max(), 0.8218, 1e-4);
  EXPECT_NEAR(tradeoff_closed_form(dv_tau_max()), 0.75, 1e-12);
}

TEST(Linspace, EndsIncluded) {
  const auto v = linspace(0.5, 0.8, 4);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_DOUBLE_EQ(v.front(), 0.5);
  EXPECT_DOUBLE_EQ(v.back(), 0.8);
  EXPECT_NEAR(v[1], 0.6, 1e-15);
  EXPECT_EQ(linspace(0.3, 0.9, 1), std::vector<double>{0.3});
}

TEST(QracSet, Sizes) {
  EXPECT_EQ(qrac_set(SetChoice::kS1).size(), 17);
  EXPECT_EQ(qrac_set(SetChoice::kS1Prime).size(), 11);
}

TEST(Simulator, MatchesDensityMatrixOracle) {
  for (double eta : {0.0, 0.25, 0.5, 0.7, 1.0}) {
    const SeqDistribution d = simulate_pobs(eta);
    double worst = 0.0;
    for (int b1 = 0; b1 < 2; ++b1)
      for (int b2 = 0; b2 < 2; ++b2)
        for (int y1 = 0; y1 < 2; ++y1)
          for (int y2 = 0; y2 < 2; ++y2)
            for (int z = 0; z < 4; ++z)
              worst = std::max(worst, std::abs(d(b1, b2, y1, y2, z) - oracle_probability(eta, b1, b2, y1, y2, z)));
    EXPECT_LT(worst, 1e-14) << eta;
  }
}

TEST(Simulator, SuccessProbabilities) {
  for (double eta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const SeqDistribution d = simulate_pobs(eta);
    EXPECT_NO_THROW(d.validate());
    EXPECT_NEAR(d.bob1_success(), 0.5 + eta * kSqrt2 / 4, 1e-9);
    EXPECT_NEAR(d.bob2_success(), tradeoff_closed_form(d.bob1_success()), 1e-6);
  }
  EXPECT_NEAR(simulate_pobs(0.0).bob2_success(), 0.8536, 1e-4);
  EXPECT_NEAR(simulate_pobs(1.0).bob1_success(), 0.8536, 1e-4);
  EXPECT_THROW(simulate_pobs(-0.1), ScenarioError);
  EXPECT_THROW(simulate_pobs(1.1), ScenarioError);
}

TEST(Simulator, RealizationReproducesDistribution) {
  const MomentModel m = build_model(qrac_set(SetChoice::kS1), GramSpec::qrac());
  for (double eta : {0.2, 0.9}) {
    const MatrixXd g = moment_matrix(m, simulator_realization(eta));
    const auto vars = m.variables_of(g);
    const SeqDistribution d = simulate_pobs(eta);
    for (int y = 0; y < 4; ++y)
      for (int b = 0; b < 4; ++b)
        for (int z = 0; z < 4; ++z)
          EXPECT_NEAR(prob_expr(m, {{b >> 1, b & 1}}, {{y >> 1, y & 1}}, z).evaluate(vars),
                      d(b >> 1, b & 1, y >> 1, y & 1, z), 1e-12);
    EXPECT_TRUE(check_assignment(m, g).feasible(1e-12));
  }
}

TEST(SeqDistribution, Validation) {
  EXPECT_NO_THROW(SeqDistribution::uniform().validate());
  SeqDistribution d = SeqDistribution::uniform();
  d(0, 0, 0, 0, 0) = -0.1;
  EXPECT_THROW(d.validate(), ScenarioError);
  d = SeqDistribution::uniform();
  d(0, 0, 0, 0, 0) += 0.1;
  d(1, 0, 0, 0, 0) -= 0.1;  // normalized but Bob_1's marginal now depends on y2
  EXPECT_THROW(d.validate(), ScenarioError);
}

TEST(Fixture, BundledDistributionIsSimulatorOutput) {
  const SeqDistribution bundled = cli::bundled_distribution();
  const SeqDistribution d = simulate_pobs(0.7);
  for (int b1 = 0; b1 < 2; ++b1)
    for (int b2 = 0; b2 < 2; ++b2)
      for (int y1 = 0; y1 < 2; ++y1)
        for (int y2 = 0; y2 < 2; ++y2)
          for (int z = 0; z < 4; ++z) EXPECT_EQ(bundled(b1, b2, y1, y2, z), d(b1, b2, y1, y2, z));
}

TEST(Membership, Examples) {
  EXPECT_EQ(membership_test(simulate_pobs(0.7), GramSpec::qrac(), 1).verdict, Verdict::kFeasible);
  EXPECT_EQ(membership_test(SeqDistribution::uniform(), GramSpec::qrac(), 1).verdict, Verdict::kFeasible);
  EXPECT_EQ(membership_test(deterministic_distribution(), GramSpec::qrac(), 1).verdict, Verdict::kInfeasibleAtLevel);
  EXPECT_EQ(to_string(Verdict::kFeasible), "feasible");
  EXPECT_EQ(to_string(Verdict::kInfeasibleAtLevel), "infeasible-at-level");
}

TEST(Membership, RejectsInvalidDistribution) {
  SeqDistribution d;
  EXPECT_THROW(membership_test(d, GramSpec::qrac(), 1), ScenarioError);
}

TEST(Tradeoff, InteriorPoints) {
  const ScenarioCurve c = qrac_tradeoff({0.6, 0.75}, SetChoice::kS1);
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_TRUE(c.ok());
  EXPECT_NEAR(c.points[0].values.at("p2_sdp"), 0.8463, 1e-4);
  EXPECT_NEAR(c.points[1].values.at("p2_sdp"), 0.8018, 1e-4);
  for (const auto& p : c.points) {
    EXPECT_NEAR(p.values.at("p2_sdp"), p.values.at("p2_closed_form"), 1e-6);
    EXPECT_GT(p.iterations, 0);
  }
  const ScenarioCurve r = qrac_tradeoff({0.6, 0.75}, SetChoice::kS1Prime);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_NEAR(r.points[i].values.at("p2_sdp"), c.points[i].values.at("p2_sdp"), 1e-4);
}

TEST(Tradeoff, RejectsOutOfDomain) {
  EXPECT_THROW(qrac_tradeoff({0.4}, SetChoice::kS1), ScenarioError);
  EXPECT_THROW(dv_min_entropies({0.7}), ScenarioError);
  EXPECT_THROW(eve_full_entropies({1.5}), ScenarioError);
}

TEST(Tradeoff, SolvesPassIndependentCheck) {
  int solves = 0;
  Options opt;
  opt.on_solve = [&](const sdp::SdpProblem& p, const sdp::SdpSolution& s) {
    ++solves;
    if (s.status == sdp::Status::kOptimal) {
      const auto rep = sdp::check_solution(p, s, 1e-6);
      EXPECT_TRUE(rep.passed) << rep.summary();
    }
  };
  qrac_tradeoff({0.8}, SetChoice::kS1, opt);
  EXPECT_EQ(solves, 1);
}

TEST(EveTradeoff, ConstantBob1HasNoRandomness) {
  // A feasible model of the tau = 0.5 problem in which Eve always knows b1.
  const NetworkShape shape = NetworkShape::qrac().with_party({1}, {2});
  const MomentModel m = build_model(level_set(shape, 1), GramSpec::qrac());
  const MatrixXd g = moment_matrix(m, constant_bob1_realization());
  EXPECT_TRUE(check_assignment(m, g).feasible(1e-12));
  const auto vars = m.variables_of(g);
  EXPECT_NEAR(bob1_success(m).evaluate(vars), 0.5, 1e-12);
  EXPECT_NEAR(bob2_success(m).evaluate(vars), tradeoff_closed_form(0.5), 1e-12);
  const double guess = prob_expr(m, {{0}, {0}}, {{0, 0}, {0}}, 0).evaluate(vars) +
                       prob_expr(m, {{1}, {1}}, {{0, 0}, {0}}, 0).evaluate(vars);
  EXPECT_NEAR(guess, 1.0, 1e-12);

  const ScenarioCurve c = eve_tradeoff_entropies({0.5});
  ASSERT_EQ(c.points.size(), 1u);
  const auto& v = c.points[0].values;
  EXPECT_NEAR(v.at("Hlocal_b1"), 0.0, 1e-4);
  EXPECT_GE(v.at("Hglobal"), v.at("Hlocal_b1") - 1e-6);
  EXPECT_GE(v.at("Hglobal"), v.at("Hlocal_b2") - 1e-6);
  for (auto& [k, h] : v) {
    EXPECT_GE(h, -1e-6) << k;
    EXPECT_LE(h, 2.0) << k;
  }
}

TEST(EveFull, SharpnessZero) {
  const ScenarioCurve c = eve_full_entropies({0.0});
  ASSERT_EQ(c.points.size(), 1u);
  const auto& v = c.points[0].values;
  EXPECT_NEAR(v.at("tau_of_eta"), 0.5, 1e-15);
  EXPECT_NEAR(v.at("Hlocal_b1"), 0.0, 1e-4);
  EXPECT_GE(v.at("Hglobal"), v.at("Hlocal_b2") - 1e-6);
  EXPECT_LE(v.at("Hglobal"), 2.0);
}

TEST(EveFull, TargetsAreValidated) {
  EXPECT_THROW(eve_full_entropies({0.5}, {}, EveTargets{2, 0, 0}), ScenarioError);
  EXPECT_THROW(eve_full_entropies({0.5}, {}, EveTargets{0, 0, 4}), ScenarioError);
}

TEST(DvRandomness, NoRandomnessAtClassicalBound) {
  const ScenarioCurve c = dv_min_entropies({0.75});
  ASSERT_EQ(c.points.size(), 1u);
  const auto& v = c.points[0].values;
  EXPECT_LE(v.at("Hb1"), 0.02);
  EXPECT_LE(v.at("Hb2"), 0.02);
  EXPECT_LE(v.at("Hb1b2"), 0.02);
  EXPECT_GE(v.at("Hb1b2"), std::max(v.at("Hb1"), v.at("Hb2")) - 1e-6);
}
