#include "mbranch/pgf.hpp"

#include <cmath>

#include "mbranch/error.hpp"
#include "mbranch/extinction.hpp"

namespace mbranch {

namespace {

void check_start(const ProcessSpec& spec, const StartState& start) {
  if (start.size() != spec.dim()) {
    fail(ErrorCode::InvalidArgument, "start state has " + std::to_string(start.size()) +
                                         " entries, expected " + std::to_string(spec.dim()));
  }
}

double product_power(const std::vector<double>& base, const StartState& start) {
  double value = 1.0;
  for (std::size_t k = 0; k < base.size(); ++k) {
    if (start[k] != 0) value *= std::pow(base[k], static_cast<double>(start[k]));
  }
  return value;
}

MarkedSets marks_by_support(const ProcessSpec& spec, auto&& vector_for_type) {
  std::vector<std::vector<OffspringVector>> sets(spec.dim());
  for (std::size_t k = 0; k < spec.dim(); ++k) {
    OffspringVector j = vector_for_type(k);
    if (spec.find(k, j)) sets[k].push_back(std::move(j));
  }
  return MarkedSets::validate(spec, std::move(sets));
}

}  // namespace

HorizonPgf horizon_pgf(const ProcessSpec& spec, const MarkedSets& marks,
                       const MarkAssignment& values, const StartState& start, double t,
                       double h) {
  check_start(spec, start);
  const std::vector<double> one(spec.dim(), 1.0);
  HorizonPgf r;
  r.flow = integrate(spec, marks, values, one, t, h);
  r.value = product_power(r.flow.g, start);
  return r;
}

HorizonPgf marginal_pgf(const ProcessSpec& spec, const MarkedSets& marks,
                        const std::map<MarkKey, double>& partial, const StartState& start,
                        double t, double h) {
  return horizon_pgf(spec, marks, MarkAssignment::from_partial(marks, partial, 1.0), start, t,
                     h);
}

ExtinctionPgf extinction_pgf(const ProcessSpec& spec, const MarkedSets& marks,
                             const MarkAssignment& values, const StartState& start) {
  check_start(spec, start);
  if (!values.all_below_one()) {
    fail(ErrorCode::Domain,
         "extinction PGFs take mark values in [0,1); unmark a vector instead of assigning 1");
  }
  ExtinctionPgf r;
  r.criticality = classify(spec);

  const RootResult marked = marked_root(spec, marks, values);
  if (!marked.converged) {
    fail(ErrorCode::NonConvergence, "marked root iteration did not converge");
  }
  r.q_marked = marked.q;

  if (r.criticality.kind != CriticalityClass::Supercritical) {
    r.value = product_power(marked.q, start);
    return r;
  }

  const RootResult q = extinction_prob(spec);
  if (!q.converged) fail(ErrorCode::NonConvergence, "extinction iteration did not converge");
  r.q_used = q.q;
  r.conditioned = true;
  std::vector<double> ratio(spec.dim(), 1.0);
  for (std::size_t k = 0; k < spec.dim(); ++k) {
    if (start[k] == 0) continue;
    if (q.q[k] <= 0.0) {
      fail(ErrorCode::Domain, "type " + std::to_string(k + 1) +
                                  " never goes extinct; conditioning on extinction is void");
    }
    ratio[k] = marked.q[k] / q.q[k];
  }
  r.value = product_power(ratio, start);
  return r;
}

MarkedSets pure_death_marks(const ProcessSpec& spec) {
  return marks_by_support(spec, [&](std::size_t) { return OffspringVector(spec.dim(), 0); });
}

MarkedSets twins_marks(const ProcessSpec& spec) {
  return marks_by_support(spec, [&](std::size_t k) {
    OffspringVector j(spec.dim(), 0);
    j[k] = 2;
    return j;
  });
}

}  // namespace mbranch
