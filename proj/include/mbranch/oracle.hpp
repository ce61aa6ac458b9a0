#pragma once

#include <utility>

#include "mbranch/model.hpp"

namespace mbranch {

/// The two-type birth-death fixture with closed-form answers:
///   B_1(x) = p - x_1 + q x_2^2,   B_2(x) = alpha - x_2 + beta x_1,
/// with q = 1 - p and beta = 1 - alpha. Type 1 dies or splits into two
/// type-2 children; type 2 dies or turns into one type-1 individual.
struct ExampleParams {
  double p = 0.5;
  double alpha = 0.5;

  double q() const noexcept { return 1.0 - p; }
  double beta() const noexcept { return 1.0 - alpha; }
};

/// Throws Error(Validation) unless 0 < p, alpha < 1.
ExampleParams example_params(double p, double alpha);

ProcessSpec example_spec(const ExampleParams& params);

/// sqrt(2 q beta) - 1
double example_rho(const ExampleParams& params);

/// Closed-form root (u, v) of
///   q v^2 - u + p y = 0,   beta u - v + alpha z = 0
/// taking the smaller branch of the quadratic in v: the pure-death marked
/// root at (y, z). Throws Error(Domain) on a negative discriminant.
std::pair<double, double> example_uv(const ExampleParams& params, double y, double z);

/// The supercritical (2 q beta > 1) conditional displays
///   u / q_1 = (1 - sqrt(D) - 2 q beta alpha z) / (2 (1 - 2 q beta + q beta^2)),
///   v / q_2 = (1 - sqrt(D)) / (2 (1 - q beta)),
/// evaluated as written. Throws Error(Domain) when 2 q beta <= 1.
std::pair<double, double> example_conditional_uv(const ExampleParams& params, double y,
                                                 double z);

}  // namespace mbranch
