#include "mbranch/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mbranch/error.hpp"
#include "mbranch/extinction.hpp"

namespace mbranch {

namespace {

constexpr double kPicardGridPerUnitTime = 1000.0;

void check_box(std::span<const double> x, std::size_t d, const char* what) {
  if (x.size() != d) fail(ErrorCode::InvalidArgument, std::string(what) + " has wrong dimension");
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorCode::InvalidArgument, std::string(what) + " must lie in [0,1]^d");
    }
  }
}

// Running integral of uniformly sampled f at every grid node: composite
// Simpson at even nodes, Simpson plus a trailing 3/8 panel at odd nodes.
std::vector<double> cumulative_simpson(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  if (n < 3) {
    if (n == 2) out[1] = 0.5 * h * (f[0] + f[1]);
    return out;
  }
  out[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
  for (std::size_t m = 2; m < n; m += 2) {
    out[m] = out[m - 2] + h / 3.0 * (f[m - 2] + 4.0 * f[m - 1] + f[m]);
  }
  for (std::size_t m = 3; m < n; m += 2) {
    out[m] = out[m - 3] + 3.0 * h / 8.0 * (f[m - 3] + 3.0 * f[m - 2] + 3.0 * f[m - 1] + f[m]);
  }
  return out;
}

}  // namespace

std::vector<double> drift(const ProcessSpec& spec, const MarkedSets& marks,
                          const MarkAssignment& values, std::span<const double> u) {
  if (u.size() != spec.dim()) fail(ErrorCode::InvalidArgument, "point has wrong dimension");
  std::vector<double> out(spec.dim());
  MarkedSystem(spec, marks, values).drift(u, out);
  return out;
}

double default_step(const ProcessSpec& spec, double t) {
  const double cap = 0.01 / spec.theta_max();
  if (t <= 0.0) return cap;
  const double h = std::min(cap, t / 100.0);
  const double steps = std::ceil(t / h * (1.0 - 1e-12));
  return t / steps;
}

FlowResult integrate(const ProcessSpec& spec, const MarkedSets& marks,
                     const MarkAssignment& values, std::span<const double> x0, double t,
                     double h) {
  if (h <= 0.0) h = default_step(spec, t);
  return integrate(MarkedSystem(spec, marks, values), x0, t, h);
}

FlowResult integrate(const MarkedSystem& system, std::span<const double> x0, double t,
                     double h) {
  const std::size_t d = system.dim();
  check_box(x0, d, "initial point");
  if (!(t >= 0.0) || !std::isfinite(t)) {
    fail(ErrorCode::InvalidArgument, "time must be finite and nonnegative");
  }
  if (!(h > 0.0)) fail(ErrorCode::InvalidArgument, "step size must be positive");

  FlowResult r;
  r.t = t;
  r.g.assign(x0.begin(), x0.end());
  if (t == 0.0) return r;

  const auto steps = static_cast<std::size_t>(std::ceil(t / h * (1.0 - 1e-12)));
  h = t / static_cast<double>(steps);

  std::vector<double> u = r.g;
  std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
  for (std::size_t s = 0; s < steps; ++s) {
    system.drift(u, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
    system.drift(tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
    system.drift(tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = u[i] + h * k3[i];
    system.drift(tmp, k4);
    for (std::size_t i = 0; i < d; ++i) {
      double next = u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      double excursion = 0.0;
      if (next < 0.0) {
        excursion = -next;
        next = 0.0;
      } else if (next > 1.0) {
        excursion = next - 1.0;
        next = 1.0;
      }
      r.max_clamp = std::max(r.max_clamp, excursion);
      u[i] = next;
    }
    if (r.max_clamp > kMaxClampExcursion) {
      std::ostringstream msg;
      msg << "integrator left the unit box by " << r.max_clamp << " at step " << s + 1
          << "; retry with a smaller step than " << h;
      fail(ErrorCode::Integrator, msg.str());
    }
  }
  r.steps = steps;
  r.g = std::move(u);
  return r;
}

PicardParams picard_params(const ProcessSpec& spec, const MarkedSets& marks,
                           const MarkAssignment& values) {
  const MarkedSystem system(spec, marks, values);
  const std::size_t d = spec.dim();
  const std::vector<double> one(d, 1.0);
  PicardParams p;
  p.M = spec.theta_sum();
  // The nonlinear part theta_k f_k has nonnegative coefficients, so its
  // partial derivatives on the box peak at 1.
  for (std::size_t k = 0; k < d; ++k) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      row += system.theta(k) * system.offspring_pgf_derivative(k, j, one);
    }
    p.L = std::max(p.L, row);
  }
  return p;
}

double picard_bound(const PicardParams& params, std::size_t dim, std::size_t n, double t) {
  // Accumulate the ratio term by term to stay finite for large n.
  double bound = params.M * t;
  const double rate = static_cast<double>(dim) * params.L;
  for (std::size_t i = 1; i <= n; ++i) bound *= rate * t / static_cast<double>(i + 1);
  return bound;
}

std::vector<std::vector<double>> picard_iterates(const ProcessSpec& spec,
                                                 const MarkedSets& marks,
                                                 const MarkAssignment& values,
                                                 std::span<const double> x0, double t,
                                                 std::size_t n) {
  const std::size_t d = spec.dim();
  check_box(x0, d, "initial point");
  if (!(t >= 0.0) || !std::isfinite(t)) {
    fail(ErrorCode::InvalidArgument, "time must be finite and nonnegative");
  }
  const MarkedSystem system(spec, marks, values);

  auto intervals = static_cast<std::size_t>(std::ceil(kPicardGridPerUnitTime * t));
  intervals = std::max<std::size_t>(intervals, 2);
  if (intervals % 2) ++intervals;
  const double h = t / static_cast<double>(intervals);
  const std::size_t nodes = intervals + 1;

  // path[m * d + k] = u_k at grid node m
  std::vector<double> path(nodes * d);
  for (std::size_t m = 0; m < nodes; ++m) {
    const double s = h * static_cast<double>(m);
    for (std::size_t k = 0; k < d; ++k) path[m * d + k] = x0[k] * std::exp(-spec.theta(k) * s);
  }

  std::vector<std::vector<double>> out;
  out.reserve(n + 1);
  out.emplace_back(path.end() - static_cast<std::ptrdiff_t>(d), path.end());

  std::vector<double> next(nodes * d);
  std::vector<double> integrand(nodes);
  for (std::size_t it = 1; it <= n; ++it) {
    for (std::size_t k = 0; k < d; ++k) {
      const double theta = spec.theta(k);
      for (std::size_t m = 0; m < nodes; ++m) {
        const double s = h * static_cast<double>(m);
        std::span<const double> u(path.data() + m * d, d);
        integrand[m] = std::exp(theta * s) * theta * system.offspring_pgf(k, u);
      }
      const std::vector<double> acc = cumulative_simpson(integrand, h);
      for (std::size_t m = 0; m < nodes; ++m) {
        const double s = h * static_cast<double>(m);
        next[m * d + k] = std::exp(-theta * s) * (x0[k] + acc[m]);
      }
    }
    path.swap(next);
    out.emplace_back(path.end() - static_cast<std::ptrdiff_t>(d), path.end());
  }
  return out;
}

std::vector<double> picard(const ProcessSpec& spec, const MarkedSets& marks,
                           const MarkAssignment& values, std::span<const double> x0, double t,
                           std::size_t n) {
  return picard_iterates(spec, marks, values, x0, t, n).back();
}

LimitResult limit(const ProcessSpec& spec, const MarkedSets& marks,
                  const MarkAssignment& values, double tol) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "limit tolerance must be positive");
  if (marks.size() == 0) {
    fail(ErrorCode::Domain, "the long-time limit needs at least one marked vector");
  }
  if (!values.all_below_one()) {
    fail(ErrorCode::Domain, "the long-time limit needs every mark value in [0,1)");
  }
  const MarkedSystem system(spec, marks, values);
  const double theta_max = spec.theta_max();
  const double cap = std::ldexp(1.0, 20) / theta_max;

  LimitResult r;
  double elapsed = 1.0 / theta_max;
  std::vector<double> current(spec.dim(), 1.0);
  current = integrate(system, current, elapsed, default_step(spec, elapsed)).g;
  while (true) {
    // Autonomy: advancing the state at time S by S more lands on time 2S.
    std::vector<double> next = integrate(system, current, elapsed, default_step(spec, elapsed)).g;
    elapsed *= 2.0;
    double change = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) change += std::abs(next[k] - current[k]);
    current = std::move(next);
    if (change <= tol) {
      r.converged = true;
      break;
    }
    if (2.0 * elapsed > cap) break;
  }
  r.g = std::move(current);
  r.horizon = elapsed;
  r.root = marked_root(spec, marks, values).q;
  double gap = 0.0;
  for (std::size_t k = 0; k < r.g.size(); ++k) gap = std::max(gap, std::abs(r.g[k] - r.root[k]));
  r.agrees = gap <= 10.0 * tol;
  return r;
}

}  // namespace mbranch
