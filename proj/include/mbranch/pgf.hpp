#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mbranch/flow.hpp"
#include "mbranch/model.hpp"

namespace mbranch {

/// Initial population per type; all zeros is the absorbed state.
using StartState = std::vector<std::uint64_t>;

struct HorizonPgf {
  double value = 1.0;
  FlowResult flow;  // per-ancestor G(t, 1, v)
};

/// E[prod v^counters(t) | X(0) = start] = prod_k g_k(t, 1, v)^{start_k}.
HorizonPgf horizon_pgf(const ProcessSpec& spec, const MarkedSets& marks,
                       const MarkAssignment& values, const StartState& start, double t,
                       double h = 0.0);

/// horizon_pgf with every unassigned mark set to one.
HorizonPgf marginal_pgf(const ProcessSpec& spec, const MarkedSets& marks,
                        const std::map<MarkKey, double>& partial, const StartState& start,
                        double t, double h = 0.0);

struct ExtinctionPgf {
  double value = 1.0;
  bool conditioned = false;     // divided by the extinction probabilities
  std::vector<double> q_used;   // extinction probabilities used for conditioning
  std::vector<double> q_marked; // marked root at the given values
  Criticality criticality;
};

/// E[prod v^counters(tau) | X(0) = start], conditioned on tau < infinity in
/// the supercritical case.
///
/// The multi-ancestor form prod_k (q_k(v) / q_k)^{start_k} follows from the
/// independence of lines of descent: given extinction, each line goes
/// extinct on its own. Mark values must lie in [0,1); to marginalize a mark,
/// drop it from the sets instead of assigning one.
ExtinctionPgf extinction_pgf(const ProcessSpec& spec, const MarkedSets& marks,
                             const MarkAssignment& values, const StartState& start);

/// R_k = {0} for every type that can die childless.
MarkedSets pure_death_marks(const ProcessSpec& spec);

/// R_k = {2 e_k} for every type that can give birth to same-type twins.
MarkedSets twins_marks(const ProcessSpec& spec);

}  // namespace mbranch
