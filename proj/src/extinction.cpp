#include "mbranch/extinction.hpp"

#include <algorithm>
#include <cmath>

#include "mbranch/error.hpp"

namespace mbranch {

RootResult minimal_root(const MarkedSystem& system, double tol, std::size_t max_iter) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "root tolerance must be positive");
  const std::size_t d = system.dim();
  RootResult r;
  std::vector<double> x(d, 0.0);
  std::vector<double> next(d);
  while (r.iterations < max_iter) {
    double change = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      next[k] = std::min(1.0, system.offspring_pgf(k, x));
      if (next[k] < x[k]) r.monotone = false;
      change += std::abs(next[k] - x[k]);
    }
    x.swap(next);
    ++r.iterations;
    if (change <= tol) {
      r.converged = true;
      break;
    }
  }
  double residual = 0.0;
  for (std::size_t k = 0; k < d; ++k) residual = std::max(residual, std::abs(system.value(k, x)));
  r.q = std::move(x);
  r.residual = residual;
  return r;
}

RootResult extinction_prob(const ProcessSpec& spec, double tol, std::size_t max_iter) {
  return minimal_root(MarkedSystem(spec), tol, max_iter);
}

RootResult marked_root(const ProcessSpec& spec, const MarkedSets& marks,
                       const MarkAssignment& values, double tol, std::size_t max_iter) {
  return minimal_root(MarkedSystem(spec, marks, values), tol, max_iter);
}

}  // namespace mbranch
