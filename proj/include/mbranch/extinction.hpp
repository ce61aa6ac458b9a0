#pragma once

#include <cstddef>
#include <vector>

#include "mbranch/model.hpp"

namespace mbranch {

constexpr double kDefaultRootTol = 1e-12;
constexpr std::size_t kDefaultRootMaxIter = 1'000'000;

/// Minimal root of a monotone fixed-point system on the unit box.
struct RootResult {
  std::vector<double> q;
  double residual = 0.0;  // max_k |B_k(q)| of the system that was solved
  std::size_t iterations = 0;
  bool converged = false;
  bool monotone = true;  // every iterate dominated its successor
};

/// Extinction probabilities: the minimal nonnegative root of B(x) = 0,
/// reached by iterating the offspring generating functions from 0.
/// A result with converged == false is still returned when max_iter runs
/// out (slow convergence near criticality).
RootResult extinction_prob(const ProcessSpec& spec, double tol = kDefaultRootTol,
                           std::size_t max_iter = kDefaultRootMaxIter);

/// Unique root of the marked system B_k(x, v) + Bbar_k(x) = 0 in the box,
/// i.e. the joint PGF of the counters at extinction. Values equal to one are
/// accepted; the iteration from 0 still selects the minimal root.
RootResult marked_root(const ProcessSpec& spec, const MarkedSets& marks,
                       const MarkAssignment& values, double tol = kDefaultRootTol,
                       std::size_t max_iter = kDefaultRootMaxIter);

/// The shared iteration x <- f(x) from x = 0 behind both entry points.
RootResult minimal_root(const MarkedSystem& system, double tol, std::size_t max_iter);

}  // namespace mbranch
