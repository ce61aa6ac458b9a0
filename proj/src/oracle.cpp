#include "mbranch/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "mbranch/error.hpp"

namespace mbranch {

namespace {

// Rounding slack for the discriminant, which is exactly (1 - 2 q beta)^2 at
// y = z = 1 and can come out a few ulps negative at criticality.
constexpr double kDiscriminantSlack = 1e-14;

double discriminant(const ExampleParams& ep, double y, double z) {
  if (!(y >= 0.0 && y <= 1.0 && z >= 0.0 && z <= 1.0)) {
    fail(ErrorCode::Domain, "mark values must lie in [0,1]");
  }
  const double qb = ep.q() * ep.beta();
  const double disc = 1.0 - 4.0 * qb * (ep.p * ep.beta() * y + ep.alpha * z);
  if (disc < -kDiscriminantSlack) {
    fail(ErrorCode::Domain, "negative discriminant in the closed-form root");
  }
  return std::max(disc, 0.0);
}

}  // namespace

ExampleParams example_params(double p, double alpha) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::Validation, "builtin.p: must lie in (0,1)");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::Validation, "builtin.alpha: must lie in (0,1)");
  return ExampleParams{p, alpha};
}

ProcessSpec example_spec(const ExampleParams& ep) {
  std::vector<TypeLaw> laws(2);
  laws[0].theta = 1.0;
  laws[0].offspring = {{{0, 0}, ep.p}, {{0, 2}, ep.q()}};
  laws[1].theta = 1.0;
  laws[1].offspring = {{{0, 0}, ep.alpha}, {{1, 0}, ep.beta()}};
  return validate_spec(2, std::move(laws));
}

double example_rho(const ExampleParams& ep) { return std::sqrt(2.0 * ep.q() * ep.beta()) - 1.0; }

std::pair<double, double> example_uv(const ExampleParams& ep, double y, double z) {
  const double root = std::sqrt(discriminant(ep, y, z));
  const double q = ep.q();
  const double beta = ep.beta();
  const double u = (1.0 - root) / (2.0 * q * beta * beta) - ep.alpha * z / beta;
  const double v = (1.0 - root) / (2.0 * q * beta);
  return {u, v};
}

std::pair<double, double> example_conditional_uv(const ExampleParams& ep, double y, double z) {
  const double q = ep.q();
  const double beta = ep.beta();
  if (!(2.0 * q * beta > 1.0)) {
    fail(ErrorCode::Domain, "conditional closed forms apply only when 2 q beta > 1");
  }
  const double root = std::sqrt(discriminant(ep, y, z));
  const double u =
      (1.0 - root - 2.0 * q * beta * ep.alpha * z) / (2.0 * (1.0 - 2.0 * q * beta + q * beta * beta));
  const double v = (1.0 - root) / (2.0 * (1.0 - q * beta));
  return {u, v};
}

}  // namespace mbranch
