#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mbranch/model.hpp"

namespace mbranch {

/// Largest box excursion a completed RK4 step may be projected back from.
constexpr double kMaxClampExcursion = 1e-6;

/// G(t, x, v): the per-ancestor joint generating function of the population
/// and the marked-event counters.
struct FlowResult {
  std::vector<double> g;
  double t = 0.0;
  std::size_t steps = 0;
  double max_clamp = 0.0;
};

/// Right-hand side of the backward equation, du_k/dt = B_k(u, v) + Bbar_k(u).
std::vector<double> drift(const ProcessSpec& spec, const MarkedSets& marks,
                          const MarkAssignment& values, std::span<const double> u);

/// min(0.01 / theta_max, t / 100), shrunk so that it divides t.
double default_step(const ProcessSpec& spec, double t);

/// Fixed-step classical RK4 from u(0) = x0 to time t. Each completed step is
/// projected onto [0,1]^d and the excursion recorded; an excursion above
/// kMaxClampExcursion throws Error(Integrator). A step h <= 0 selects
/// default_step.
FlowResult integrate(const ProcessSpec& spec, const MarkedSets& marks,
                     const MarkAssignment& values, std::span<const double> x0, double t,
                     double h = 0.0);

FlowResult integrate(const MarkedSystem& system, std::span<const double> x0, double t,
                     double h);

/// Constants of the successive-approximation error bound.
struct PicardParams {
  double M = 0.0;  // sum of split rates
  double L = 0.0;  // l1 Lipschitz constant of the nonlinear part on the box
};

PicardParams picard_params(const ProcessSpec& spec, const MarkedSets& marks,
                           const MarkAssignment& values);

/// M (d L)^n t^(n+1) / (n+1)!, the bound on ||u^(n+1)(t) - u^(n)(t)||_1.
double picard_bound(const PicardParams& params, std::size_t dim, std::size_t n, double t);

/// Picard iterates 0..n evaluated at time t.
///
/// u^(0)_k(s) = x_k exp(-theta_k s) and
///   u^(n)_k(s) = exp(-theta_k s) [x_k + int_0^s exp(theta_k r) theta_k f_k(u^(n-1)(r)) dr],
/// with the integral evaluated by composite Simpson on a uniform grid of at
/// least 1000 intervals per unit time. This is an independent check on
/// integrate(), not a production path.
std::vector<std::vector<double>> picard_iterates(const ProcessSpec& spec,
                                                 const MarkedSets& marks,
                                                 const MarkAssignment& values,
                                                 std::span<const double> x0, double t,
                                                 std::size_t n);

std::vector<double> picard(const ProcessSpec& spec, const MarkedSets& marks,
                           const MarkAssignment& values, std::span<const double> x0, double t,
                           std::size_t n);

struct LimitResult {
  std::vector<double> g;     // last checkpoint of the flow from x0 = 1
  std::vector<double> root;  // marked_root for the same values
  double horizon = 0.0;
  bool converged = false;    // checkpoints settled before the horizon cap
  bool agrees = false;       // |g - root|_inf <= 10 tol
};

/// Follows G(t, 1, v) with doubling horizons until successive checkpoints
/// differ by at most tol in l1, then compares against marked_root.
/// Requires at least one marked vector and every value in [0,1).
LimitResult limit(const ProcessSpec& spec, const MarkedSets& marks,
                  const MarkAssignment& values, double tol = 1e-9);

}  // namespace mbranch
