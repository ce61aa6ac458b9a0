#include <gtest/gtest.h>

#include <cmath>

#include "mbranch/error.hpp"
#include "mbranch/extinction.hpp"
#include "mbranch/flow.hpp"
#include "support.hpp"

using namespace mbranch;
using namespace mbtest;

namespace {

struct Fixture {
  ProcessSpec spec = subcritical();
  MarkedSets marks = pure_death_marks(spec);
  MarkAssignment half = MarkAssignment::from_values(marks, {0.5, 0.5});
};

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace

TEST(Drift, VanishesAtOneWithUnitMarks) {
  Fixture f;
  const auto d = drift(f.spec, f.marks, MarkAssignment::ones(f.marks), ones(2));
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[1], 0.0);
}

TEST(Drift, HalfMarksAtOne) {
  Fixture f;
  const auto d = drift(f.spec, f.marks, f.half, ones(2));
  EXPECT_NEAR(d[0], -0.25, 1e-15);
  EXPECT_NEAR(d[1], -0.25, 1e-15);
}

TEST(Drift, VanishesAtMarkedRoot) {
  Fixture f;
  const RootResult r = marked_root(f.spec, f.marks, f.half);
  const auto d = drift(f.spec, f.marks, f.half, r.q);
  EXPECT_LE(std::abs(d[0]), 1e-11);
  EXPECT_LE(std::abs(d[1]), 1e-11);
}

TEST(DefaultStep, DividesHorizonAndRespectsCap) {
  const ProcessSpec s = validate_spec(1, {law(4.0, {{{0}, 0.5}, {{2}, 0.5}})});
  for (double t : {0.3, 1.0, 2.7, 13.0}) {
    const double h = default_step(s, t);
    EXPECT_LE(h, 0.01 / 4.0 + 1e-15);
    EXPECT_LE(h, t / 100.0 + 1e-15);
    const double n = t / h;
    EXPECT_NEAR(n, std::round(n), 1e-9);
  }
}

TEST(Integrate, ZeroHorizonReturnsStartExactly) {
  Fixture f;
  const std::vector<double> x0{0.3, 0.7};
  const FlowResult r = integrate(f.spec, f.marks, f.half, x0, 0.0);
  EXPECT_EQ(r.g, x0);
  EXPECT_EQ(r.steps, 0u);
}

TEST(Integrate, OneIsStationaryWithUnitMarks) {
  Fixture f;
  const FlowResult r = integrate(f.spec, f.marks, MarkAssignment::ones(f.marks), ones(2), 7.0);
  EXPECT_EQ(r.g, ones(2));
  EXPECT_EQ(r.max_clamp, 0.0);
}

TEST(Integrate, LongHorizonApproachesMarkedRoot) {
  Fixture f;
  const FlowResult r = integrate(f.spec, f.marks, f.half, ones(2), 50.0);
  const RootResult root = marked_root(f.spec, f.marks, f.half);
  EXPECT_NEAR(r.g[0], root.q[0], 1e-6);
  EXPECT_NEAR(r.g[1], root.q[1], 1e-6);
  EXPECT_NEAR(r.g[0], 0.3377223, 1e-6);
  EXPECT_NEAR(r.g[1], 0.4188612, 1e-6);
  EXPECT_LE(r.max_clamp, 1e-9);
}

TEST(Integrate, OversizedStepIsAnIntegratorError) {
  const ProcessSpec s = validate_spec(1, {law(5.0, {{{0}, 1.0}})});
  const MarkedSets m = pure_death_marks(s);
  try {
    integrate(s, m, MarkAssignment::from_values(m, {0.0}), ones(1), 4.0, 2.0);
    FAIL() << "expected an integrator error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Integrator);
  }
}

TEST(Integrate, RejectsBadArguments) {
  Fixture f;
  EXPECT_THROW(integrate(f.spec, f.marks, f.half, ones(2), -1.0), Error);
  EXPECT_THROW(integrate(f.spec, f.marks, f.half, std::vector<double>{1.2, 0.0}, 1.0), Error);
  EXPECT_THROW(integrate(f.spec, f.marks, f.half, ones(3), 1.0), Error);
}

TEST(Integrate, FourthOrderConvergence) {
  Fixture f;
  const double t = 2.0;
  const double h = 0.2;
  const auto a = integrate(f.spec, f.marks, f.half, ones(2), t, h).g;
  const auto b = integrate(f.spec, f.marks, f.half, ones(2), t, h / 2).g;
  const auto c = integrate(f.spec, f.marks, f.half, ones(2), t, h / 4).g;
  const double ratio = l1(a, b) / l1(b, c);
  EXPECT_NEAR(ratio, 16.0, 2.0);
}

TEST(Picard, ZerothIterateIsPureDecay) {
  Fixture f;
  const auto u = picard(f.spec, f.marks, f.half, ones(2), 1.0, 0);
  EXPECT_NEAR(u[0], std::exp(-1.0), 1e-15);
  EXPECT_NEAR(u[1], std::exp(-1.0), 1e-15);
}

TEST(Picard, ManyIteratesMatchRungeKutta) {
  Fixture f;
  for (double t : {0.5, 1.0, 2.0}) {
    const auto p = picard(f.spec, f.marks, f.half, ones(2), t, 30);
    const auto g = integrate(f.spec, f.marks, f.half, ones(2), t).g;
    EXPECT_NEAR(p[0], g[0], 1e-6) << t;
    EXPECT_NEAR(p[1], g[1], 1e-6) << t;
  }
}

TEST(Picard, SuccessiveDifferencesObeyBound) {
  Fixture f;
  const PicardParams pp = picard_params(f.spec, f.marks, f.half);
  EXPECT_DOUBLE_EQ(pp.M, 2.0);
  for (double t : {0.25, 0.5, 1.0}) {
    const auto it = picard_iterates(f.spec, f.marks, f.half, ones(2), t, 11);
    for (std::size_t n = 0; n + 1 < it.size(); ++n) {
      EXPECT_LE(l1(it[n + 1], it[n]), picard_bound(pp, 2, n, t) + 1e-6) << "t=" << t << " n=" << n;
    }
  }
}

TEST(Picard, LipschitzConstantFromDerivativesAtOne) {
  // Nonlinear parts 0.5 y + 0.5 x2^2 and 0.5 z + 0.5 x1 have gradient l1
  // norms 1 and 0.5 at one; L is the larger.
  Fixture f;
  const PicardParams pp = picard_params(f.spec, f.marks, f.half);
  EXPECT_NEAR(pp.L, 1.0, 1e-15);
}

TEST(Limit, HalfMarksConvergeToClosedForm) {
  Fixture f;
  const LimitResult r = limit(f.spec, f.marks, f.half);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.agrees);
  EXPECT_NEAR(r.g[0], 0.3377223, 1e-7);
  EXPECT_NEAR(r.g[1], 0.4188612, 1e-7);
}

TEST(Limit, ZeroMarksConvergeToZero) {
  Fixture f;
  const LimitResult r = limit(f.spec, f.marks, MarkAssignment::from_values(f.marks, {0.0, 0.0}));
  EXPECT_NEAR(r.g[0], 0.0, 1e-9);
  EXPECT_NEAR(r.g[1], 0.0, 1e-9);
}

TEST(Limit, DomainRules) {
  Fixture f;
  EXPECT_THROW(limit(f.spec, f.marks, MarkAssignment::from_values(f.marks, {0.5, 1.0})), Error);
  const MarkedSets none = MarkedSets::none(f.spec);
  EXPECT_THROW(limit(f.spec, none, MarkAssignment::ones(none)), Error);
}
