#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "mbranch/error.hpp"
#include "mbranch/extinction.hpp"
#include "mbranch/model.hpp"
#include "support.hpp"

using namespace mbranch;
using namespace mbtest;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an mbranch::Error";
  return ErrorCode::InvalidArgument;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

MarkedSets death_marks(const ProcessSpec& spec) {
  return MarkedSets::validate(spec, {{{0, 0}}, {{0, 0}}});
}

}  // namespace

TEST(ValidateSpec, ExampleRatesDerivedFromProbabilities) {
  const ProcessSpec s = subcritical();
  EXPECT_EQ(s.dim(), 2u);
  EXPECT_DOUBLE_EQ(s.rate(0, {0, 0}), 0.5);
  EXPECT_DOUBLE_EQ(s.rate(0, {0, 2}), 0.5);
  EXPECT_DOUBLE_EQ(s.rate(0, {1, 0}), -1.0);
  EXPECT_DOUBLE_EQ(s.rate(0, {1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(s.rate(1, {0, 1}), -1.0);
  EXPECT_DOUBLE_EQ(s.rate(1, {1, 0}), 0.5);
}

TEST(ValidateSpec, ProbabilitiesSummingToPointNineRejected) {
  std::vector<TypeLaw> laws{law(1.0, {{{0}, 0.4}, {{2}, 0.5}})};
  EXPECT_EQ(code_of([&] { validate_spec(1, laws); }), ErrorCode::Validation);
  EXPECT_NE(message_of([&] { validate_spec(1, laws); }).find("types[0]"), std::string::npos);
}

TEST(ValidateSpec, SingleTypeSpecIsValid) {
  const ProcessSpec s = validate_spec(1, {law(2.0, {{{0}, 0.5}, {{2}, 0.5}})});
  EXPECT_EQ(s.dim(), 1u);
  EXPECT_DOUBLE_EQ(s.rate(0, {2}), 1.0);
  EXPECT_DOUBLE_EQ(s.rate(0, {1}), -2.0);
}

TEST(ValidateSpec, RejectsEachBrokenInvariant) {
  // wrong number of laws
  EXPECT_EQ(code_of([] { validate_spec(2, {law(1.0, {{{0, 0}, 1.0}})}); }), ErrorCode::Validation);
  // zero dimension
  EXPECT_EQ(code_of([] { validate_spec(0, {}); }), ErrorCode::Validation);
  // nonpositive theta
  EXPECT_EQ(code_of([] { validate_spec(1, {law(-1.0, {{{0}, 1.0}})}); }), ErrorCode::Validation);
  EXPECT_EQ(code_of([] { validate_spec(1, {law(0.0, {{{0}, 1.0}})}); }), ErrorCode::Validation);
  // duplicate vector
  EXPECT_EQ(code_of([] { validate_spec(1, {law(1.0, {{{2}, 0.5}, {{2}, 0.5}})}); }),
            ErrorCode::Validation);
  // e_k present
  EXPECT_EQ(code_of([] { validate_spec(1, {law(1.0, {{{1}, 0.5}, {{0}, 0.5}})}); }),
            ErrorCode::Validation);
  // vector of the wrong length
  EXPECT_EQ(code_of([] { validate_spec(1, {law(1.0, {{{0, 0}, 1.0}})}); }), ErrorCode::Validation);
  // probability out of range
  EXPECT_EQ(code_of([] { validate_spec(1, {law(1.0, {{{0}, 1.5}, {{2}, -0.5}})}); }),
            ErrorCode::Validation);
}

TEST(ValidateSpec, OffspringOrderDoesNotMatter) {
  const ProcessSpec a = validate_spec(1, {law(1.0, {{{0}, 0.25}, {{3}, 0.75}})});
  const ProcessSpec b = validate_spec(1, {law(1.0, {{{3}, 0.75}, {{0}, 0.25}})});
  EXPECT_EQ(a, b);
}

TEST(GfB, ConservationAtOne) {
  for (double p : {0.1, 0.5, 0.9}) {
    const ProcessSpec s = example_spec(example_params(p, 0.3));
    EXPECT_EQ(gf_B(s, 0, ones(2)), 0.0);
    EXPECT_EQ(gf_B(s, 1, ones(2)), 0.0);
  }
}

TEST(GfB, HandEvaluatedExamplePoints) {
  const ProcessSpec s = subcritical();
  const std::vector<double> x{0.5, 0.5};
  EXPECT_NEAR(gf_B(s, 0, x), 0.125, 1e-15);
  EXPECT_NEAR(gf_B(s, 1, x), 0.25, 1e-15);
}

TEST(GfB, RejectsBadTypeIndex) {
  EXPECT_EQ(code_of([] { gf_B(subcritical(), 2, ones(2)); }), ErrorCode::InvalidArgument);
}

TEST(GfBMarked, AllOnesReducesToUnmarked) {
  const ProcessSpec s = subcritical();
  const MarkedSets m = death_marks(s);
  const MarkAssignment v = MarkAssignment::ones(m);
  for (double a : {0.0, 0.3, 1.0}) {
    const std::vector<double> x{a, 1.0 - a / 2};
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(gf_B_marked(s, m, v, k, x), gf_B(s, k, x), 1e-15);
  }
}

TEST(GfBMarked, HandEvaluatedPureDeathValues) {
  const ProcessSpec s = subcritical();
  const MarkedSets m = MarkedSets::validate(s, {{{0, 0}}, {}});
  EXPECT_NEAR(gf_B_marked(s, m, MarkAssignment::from_values(m, {0.0}), 0, ones(2)), -0.5, 1e-15);
  EXPECT_NEAR(gf_B_marked(s, m, MarkAssignment::from_values(m, {0.5}), 0, ones(2)), -0.25, 1e-15);
}

TEST(GfBMarked, MissingOrOutOfRangeValuesRejected) {
  const ProcessSpec s = subcritical();
  const MarkedSets m = death_marks(s);
  EXPECT_EQ(code_of([&] { MarkAssignment::from_values(m, {0.5}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { MarkAssignment::from_values(m, {0.5, 1.5}); }), ErrorCode::Validation);
  EXPECT_EQ(code_of([&] { MarkAssignment::from_values(m, {-0.1, 0.5}); }), ErrorCode::Validation);
}

TEST(MarkedSetsTest, VectorOutsideSupportNamesPath) {
  const ProcessSpec s = subcritical();
  const std::string msg =
      message_of([&] { MarkedSets::validate(s, {{{1, 1}}, {}}); });
  EXPECT_NE(msg.find("marks[0][0]"), std::string::npos) << msg;
  EXPECT_EQ(code_of([&] { MarkedSets::validate(s, {{{0, 0}, {0, 0}}, {}}); }),
            ErrorCode::Validation);
}

TEST(MarkedSetsTest, SlotsRunTypeByType) {
  const ProcessSpec s = subcritical();
  const MarkedSets m = MarkedSets::validate(s, {{{0, 2}, {0, 0}}, {{1, 0}}});
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.offset(1), 2u);
  EXPECT_EQ(m.slot(0, {0, 0}), 0u);  // sorted within a type
  EXPECT_EQ(m.slot(0, {0, 2}), 1u);
  EXPECT_EQ(m.slot(1, {1, 0}), 2u);
  EXPECT_FALSE(m.slot(1, {0, 0}).has_value());
  EXPECT_EQ(m.entry(2).first, 1u);
}

TEST(Jacobian, ExampleAtOne) {
  for (double p : {0.2, 0.5, 0.7}) {
    for (double a : {0.1, 0.6}) {
      const ExampleParams e = example_params(p, a);
      const MeanMatrix m = jacobian(example_spec(e), ones(2));
      EXPECT_NEAR(m(0, 0), -1.0, 1e-15);
      EXPECT_NEAR(m(0, 1), 2 * e.q(), 1e-15);
      EXPECT_NEAR(m(1, 0), e.beta(), 1e-15);
      EXPECT_NEAR(m(1, 1), -1.0, 1e-15);
    }
  }
}

TEST(Jacobian, RhoForSubcriticalExample) {
  EXPECT_NEAR(jacobian(subcritical(), ones(2)).rho, std::sqrt(0.5) - 1.0, 1e-12);
  EXPECT_NEAR(jacobian(subcritical(), ones(2)).rho, -0.2928932, 1e-7);
}

TEST(Jacobian, AtZero) {
  const MeanMatrix m = jacobian(subcritical(), std::vector<double>{0.0, 0.0});
  EXPECT_EQ(m(0, 0), -1.0);
  EXPECT_EQ(m(0, 1), 0.0);
  EXPECT_EQ(m(1, 0), 0.5);
  EXPECT_EQ(m(1, 1), -1.0);
  EXPECT_NEAR(m.rho, -1.0, 1e-15);
}

TEST(MaxEigenvalue, MatchesEigenOnRandomMetzlerMatrices) {
  Gen g(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 3 + g.index(4);
    std::vector<double> a(d * d);
    Eigen::MatrixXd m(d, d);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        a[i * d + j] = i == j ? g.uniform(-3.0, 1.0) : g.uniform(0.05, 2.0);
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i * d + j];
      }
    }
    const Eigen::VectorXcd ev = m.eigenvalues();
    double best = -1e300;
    for (Eigen::Index i = 0; i < ev.size(); ++i) best = std::max(best, ev[i].real());
    EXPECT_NEAR(max_eigenvalue(a, d), best, 1e-9) << "trial " << trial;
  }
}

TEST(MaxEigenvalue, TwoByTwoClosedForm) {
  const std::vector<double> a{-1.0, 2.0, 3.0, 0.5};
  Eigen::Matrix2d m;
  m << -1.0, 2.0, 3.0, 0.5;
  const auto ev = m.eigenvalues();
  EXPECT_NEAR(max_eigenvalue(a, 2), std::max(ev[0].real(), ev[1].real()), 1e-14);
  EXPECT_DOUBLE_EQ(max_eigenvalue(std::vector<double>{-0.25}, 1), -0.25);
}

TEST(Classify, ExampleFixtures) {
  EXPECT_EQ(classify(subcritical()).kind, CriticalityClass::Subcritical);
  const Criticality sup = classify(supercritical());
  EXPECT_EQ(sup.kind, CriticalityClass::Supercritical);
  EXPECT_NEAR(sup.rho_one, std::sqrt(1.28) - 1.0, 1e-12);
  const double q = std::sqrt(0.5);
  const Criticality crit = classify(example_spec(example_params(1.0 - q, 1.0 - q)));
  EXPECT_EQ(crit.kind, CriticalityClass::Critical);
  EXPECT_EQ(crit.tol, kDefaultCriticalityTol);
  EXPECT_STREQ(to_string(crit.kind), "critical");
}

TEST(Classify, ToleranceBandIsHonoured) {
  const ProcessSpec s = example_spec(example_params(0.3, 0.3));
  const double rho = classify(s).rho_one;
  EXPECT_EQ(classify(s, std::abs(rho) * 2).kind, CriticalityClass::Critical);
  EXPECT_EQ(code_of([&] { classify(s, 0.0); }), ErrorCode::InvalidArgument);
}

TEST(PositiveRegularity, Cases) {
  EXPECT_TRUE(check_positive_regularity(subcritical()));
  const ProcessSpec decoupled =
      validate_spec(2, {law(1.0, {{{0, 0}, 0.5}, {{2, 0}, 0.5}}), law(1.0, {{{0, 0}, 0.4}, {{0, 3}, 0.6}})});
  EXPECT_FALSE(check_positive_regularity(decoupled));
  EXPECT_TRUE(check_positive_regularity(validate_spec(1, {law(1.0, {{{0}, 1.0}})})));
}

TEST(Monomial, ZeroToTheZeroIsOne) {
  EXPECT_EQ(monomial(std::vector<double>{0.0, 0.5}, {0, 2}), 0.25);
  EXPECT_EQ(monomial(std::vector<double>{0.0, 0.0}, {0, 0}), 1.0);
  EXPECT_EQ(format_vector({1, 0, 2}), "(1,0,2)");
}
