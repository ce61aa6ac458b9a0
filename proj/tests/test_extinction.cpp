#include <gtest/gtest.h>

#include <cmath>

#include "mbranch/error.hpp"
#include "mbranch/extinction.hpp"
#include "support.hpp"

using namespace mbranch;
using namespace mbtest;

namespace {

MarkedSets death_marks(const ProcessSpec& s) { return pure_death_marks(s); }

MarkAssignment vals(const MarkedSets& m, double y, double z) {
  return MarkAssignment::from_values(m, {y, z});
}

}  // namespace

TEST(ExtinctionProb, SubcriticalExampleDiesOut) {
  const RootResult r = extinction_prob(subcritical());
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.monotone);
  EXPECT_NEAR(r.q[0], 1.0, 1e-9);
  EXPECT_NEAR(r.q[1], 1.0, 1e-9);
}

TEST(ExtinctionProb, SupercriticalExampleFromQuadratic) {
  // Minimal root of 0.64 s^2 - s + 0.36 = 0, then q1 = (q2 - alpha) / beta.
  const double q2 = (1.0 - std::sqrt(1.0 - 4 * 0.64 * 0.36)) / (2 * 0.64);
  const double q1 = (q2 - 0.2) / 0.8;
  const RootResult r = extinction_prob(supercritical());
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.q[0], q1, 1e-9);
  EXPECT_NEAR(r.q[1], q2, 1e-9);
  EXPECT_NEAR(q1, 0.453125, 1e-15);
  EXPECT_NEAR(q2, 0.5625, 1e-15);
  EXPECT_LE(r.residual, 2 * kDefaultRootTol);
}

TEST(ExtinctionProb, PureDeathIsCertain) {
  const ProcessSpec s = validate_spec(1, {law(1.0, {{{0}, 1.0}})});
  const RootResult r = extinction_prob(s);
  EXPECT_EQ(r.q[0], 1.0);
  EXPECT_EQ(r.iterations, 2u);
}

TEST(ExtinctionProb, IterationCapReportsNonconvergence) {
  // Critical single-type law converges like 1/n.
  const ProcessSpec s = validate_spec(1, {law(1.0, {{{0}, 0.5}, {{2}, 0.5}})});
  const RootResult r = extinction_prob(s, 1e-12, 1000);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1000u);
  EXPECT_GT(r.q[0], 0.99);
  EXPECT_LT(r.q[0], 1.0);
}

TEST(ExtinctionProb, RejectsNonpositiveTolerance) {
  EXPECT_THROW(extinction_prob(subcritical(), 0.0), Error);
}

TEST(MarkedRoot, AllOnesEqualsExtinction) {
  for (const ProcessSpec& s : {subcritical(), supercritical()}) {
    const MarkedSets m = death_marks(s);
    const RootResult a = marked_root(s, m, MarkAssignment::ones(m));
    const RootResult b = extinction_prob(s);
    EXPECT_EQ(a.q, b.q);
  }
}

TEST(MarkedRoot, ZeroValuesGiveZeroRoot) {
  const ProcessSpec s = subcritical();
  const RootResult r = marked_root(s, death_marks(s), vals(death_marks(s), 0.0, 0.0));
  EXPECT_EQ(r.q[0], 0.0);
  EXPECT_EQ(r.q[1], 0.0);
}

TEST(MarkedRoot, HalfValuesMatchQuadraticSolution) {
  // Independent route: eliminate u from q v^2 - u + p y = 0, beta u - v + alpha z = 0
  // to get q beta v^2 - v + (p beta y + alpha z) = 0; take the smaller root.
  const double p = 0.5, a = 0.5, q = 0.5, b = 0.5, y = 0.5, z = 0.5;
  const double c = p * b * y + a * z;
  const double v = (1.0 - std::sqrt(1.0 - 4 * q * b * c)) / (2 * q * b);
  const double u = (v - a * z) / b;
  const ProcessSpec s = subcritical();
  const RootResult r = marked_root(s, death_marks(s), vals(death_marks(s), y, z));
  EXPECT_NEAR(r.q[0], u, 1e-10);
  EXPECT_NEAR(r.q[1], v, 1e-10);
  EXPECT_NEAR(r.q[0], 0.3377223, 1e-7);
  EXPECT_NEAR(r.q[1], 0.4188612, 1e-7);
}

TEST(MarkedRoot, ResidualWithinThetaMaxTol) {
  const ProcessSpec s = supercritical();
  const MarkedSets m = death_marks(s);
  const MarkAssignment v = vals(m, 0.3, 0.8);
  const RootResult r = marked_root(s, m, v);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_LE(std::abs(gf_B_marked(s, m, v, k, r.q)), s.theta_max() * kDefaultRootTol * 2);
  }
}

TEST(MinimalRoot, WorksOnMarkedSystemDirectly) {
  const ProcessSpec s = supercritical();
  const RootResult r = minimal_root(MarkedSystem(s), 1e-10, 100000);
  EXPECT_NEAR(r.q[1], 0.5625, 1e-8);
}
