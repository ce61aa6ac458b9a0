#include "mbranch/mbranch.h"

#include <algorithm>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "mbranch/config.hpp"
#include "mbranch/error.hpp"
#include "mbranch/extinction.hpp"
#include "mbranch/flow.hpp"
#include "mbranch/model.hpp"
#include "mbranch/oracle.hpp"
#include "mbranch/pgf.hpp"
#include "mbranch/simulate.hpp"

struct mb_spec {
  mbranch::ProcessSpec spec;
};

struct mb_marks {
  mbranch::MarkedSets marks;
};

struct mb_extinction_counts {
  mbranch::ExtinctionCounts counts;
  mbranch::MarkedSets marks;
  std::vector<const std::pair<const std::vector<std::uint64_t>, std::uint64_t>*> index;
};

namespace {

using namespace mbranch;

thread_local std::string g_last_error;

mb_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return MB_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return MB_ERR_PARSE;
    case ErrorCode::Validation: return MB_ERR_VALIDATION;
    case ErrorCode::NonConvergence: return MB_ERR_NONCONVERGENCE;
    case ErrorCode::Truncation: return MB_ERR_TRUNCATION;
    case ErrorCode::Integrator: return MB_ERR_INTEGRATOR;
    case ErrorCode::Domain: return MB_ERR_DOMAIN;
    case ErrorCode::Io: return MB_ERR_IO;
  }
  return MB_ERR_INTERNAL;
}

mb_status set_error(mb_status status, const std::string& what) {
  g_last_error = what;
  return status;
}

// Runs body() and turns exceptions into status codes.
template <class Body>
mb_status guarded(Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(MB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(MB_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) fail(ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

std::span<const double> point(const mb_spec* spec, const double* x) {
  require(x, "x");
  return {x, spec->spec.dim()};
}

MarkAssignment assignment(const mb_marks* marks, const double* values) {
  const std::size_t n = marks->marks.size();
  if (n == 0) return MarkAssignment::from_values(marks->marks, {});
  require(values, "values");
  return MarkAssignment::from_values(marks->marks, std::vector<double>(values, values + n));
}

StartState start_state(const mb_spec* spec, const uint64_t* start) {
  require(start, "start");
  return StartState(start, start + spec->spec.dim());
}

void check_pair(const mb_spec* spec, const mb_marks* marks) {
  require(spec, "spec");
  require(marks, "marks");
  if (marks->marks.dim() != spec->spec.dim()) {
    fail(ErrorCode::InvalidArgument, "marks were built for a spec of another dimension");
  }
}

void copy_out(const std::vector<double>& v, double* out) {
  if (out) std::copy(v.begin(), v.end(), out);
}

void fill_estimate(const McEstimate& e, mb_estimate* out) {
  out->mean = e.mean;
  out->std_error = e.std_error;
  out->replicas = e.replicas;
  out->seed = e.seed;
  out->truncated = e.truncated;
  out->reliable = e.reliable ? 1 : 0;
}

McOptions options_from(const mb_mc_options* o) {
  require(o, "options");
  McOptions opts;
  opts.replicas = o->replicas;
  opts.seed = o->seed;
  opts.max_pop = o->max_pop == 0 ? kDefaultMaxPop : o->max_pop;
  opts.threads = o->threads;
  return opts;
}

void fill_root(const RootResult& r, double* q_out, mb_root_info* info) {
  copy_out(r.q, q_out);
  if (info) {
    info->residual = r.residual;
    info->iterations = r.iterations;
    info->converged = r.converged ? 1 : 0;
    info->monotone = r.monotone ? 1 : 0;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* mb_version(void) { return "1.0.0"; }

const char* mb_last_error(void) { return g_last_error.c_str(); }

const char* mb_status_name(mb_status status) {
  switch (status) {
    case MB_OK: return "ok";
    case MB_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case MB_ERR_PARSE: return "parse";
    case MB_ERR_VALIDATION: return "validation";
    case MB_ERR_NONCONVERGENCE: return "nonconvergence";
    case MB_ERR_TRUNCATION: return "truncation";
    case MB_ERR_INTEGRATOR: return "integrator";
    case MB_ERR_DOMAIN: return "domain";
    case MB_ERR_IO: return "io";
    case MB_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void mb_string_free(char* s) { delete[] s; }

mb_status mb_spec_create(size_t dim, const double* theta, const size_t* support_sizes,
                         const uint32_t* offspring, const double* probs, mb_spec** out) {
  return guarded([&] {
    require(out, "out");
    require(theta, "theta");
    require(support_sizes, "support_sizes");
    require(offspring, "offspring");
    require(probs, "probs");
    std::vector<TypeLaw> laws(dim);
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < dim; ++k) {
      laws[k].theta = theta[k];
      for (std::size_t n = 0; n < support_sizes[k]; ++n, ++cursor) {
        Offspring o;
        o.j.assign(offspring + cursor * dim, offspring + (cursor + 1) * dim);
        o.p = probs[cursor];
        laws[k].offspring.push_back(std::move(o));
      }
    }
    *out = new mb_spec{validate_spec(dim, std::move(laws))};
    return MB_OK;
  });
}

mb_status mb_spec_example(double p, double alpha, mb_spec** out) {
  return guarded([&] {
    require(out, "out");
    *out = new mb_spec{example_spec(example_params(p, alpha))};
    return MB_OK;
  });
}

void mb_spec_free(mb_spec* spec) { delete spec; }

size_t mb_spec_dim(const mb_spec* spec) { return spec ? spec->spec.dim() : 0; }

mb_status mb_config_load(const char* path, mb_spec** spec, mb_marks** marks) {
  return guarded([&] {
    require(path, "path");
    require(spec, "spec");
    require(marks, "marks");
    Config cfg = load_config(path);
    *spec = new mb_spec{std::move(cfg.spec)};
    *marks = new mb_marks{std::move(cfg.marks)};
    return MB_OK;
  });
}

mb_status mb_config_parse(const char* text, mb_spec** spec, mb_marks** marks) {
  return guarded([&] {
    require(text, "text");
    require(spec, "spec");
    require(marks, "marks");
    Config cfg = parse_config(text);
    *spec = new mb_spec{std::move(cfg.spec)};
    *marks = new mb_marks{std::move(cfg.marks)};
    return MB_OK;
  });
}

mb_status mb_config_canonical(const mb_spec* spec, const mb_marks* marks, char** json_out) {
  return guarded([&] {
    check_pair(spec, marks);
    require(json_out, "json_out");
    *json_out = dup_string(canonical_json(spec->spec, marks->marks));
    return MB_OK;
  });
}

mb_status mb_marks_create(const mb_spec* spec, const size_t* sizes, const uint32_t* vectors,
                          mb_marks** out) {
  return guarded([&] {
    require(spec, "spec");
    require(sizes, "sizes");
    require(out, "out");
    const std::size_t d = spec->spec.dim();
    std::vector<std::vector<OffspringVector>> sets(d);
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < d; ++k) {
      if (sizes[k] != 0) require(vectors, "vectors");
      for (std::size_t i = 0; i < sizes[k]; ++i, ++cursor) {
        sets[k].emplace_back(vectors + cursor * d, vectors + (cursor + 1) * d);
      }
    }
    *out = new mb_marks{MarkedSets::validate(spec->spec, std::move(sets))};
    return MB_OK;
  });
}

mb_status mb_marks_pure_death(const mb_spec* spec, mb_marks** out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    *out = new mb_marks{pure_death_marks(spec->spec)};
    return MB_OK;
  });
}

mb_status mb_marks_twins(const mb_spec* spec, mb_marks** out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    *out = new mb_marks{twins_marks(spec->spec)};
    return MB_OK;
  });
}

void mb_marks_free(mb_marks* marks) { delete marks; }

size_t mb_marks_count(const mb_marks* marks) { return marks ? marks->marks.size() : 0; }

mb_status mb_marks_entry(const mb_marks* marks, size_t slot, size_t* type, uint32_t* vector_out) {
  return guarded([&] {
    require(marks, "marks");
    auto [k, j] = marks->marks.entry(slot);
    if (type) *type = k;
    if (vector_out) std::copy(j.begin(), j.end(), vector_out);
    return MB_OK;
  });
}

mb_status mb_values_parse(const mb_marks* marks, const char* text, mb_missing_marks missing,
                          double* values_out) {
  return guarded([&] {
    require(marks, "marks");
    require(text, "text");
    const MarkAssignment a = assign_mark_values(
        marks->marks, text,
        missing == MB_MISSING_REJECT ? MissingMarks::Reject : MissingMarks::AssignOne);
    if (a.size() != 0) require(values_out, "values_out");
    std::copy(a.values().begin(), a.values().end(), values_out);
    return MB_OK;
  });
}

mb_status mb_gf(const mb_spec* spec, size_t k, const double* x, double* out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    *out = gf_B(spec->spec, k, point(spec, x));
    return MB_OK;
  });
}

mb_status mb_gf_marked(const mb_spec* spec, const mb_marks* marks, const double* values,
                       size_t k, const double* x, double* out) {
  return guarded([&] {
    check_pair(spec, marks);
    require(out, "out");
    *out = gf_B_marked(spec->spec, marks->marks, assignment(marks, values), k, point(spec, x));
    return MB_OK;
  });
}

mb_status mb_jacobian(const mb_spec* spec, const double* x, double* entries_out,
                      double* rho_out) {
  return guarded([&] {
    require(spec, "spec");
    const MeanMatrix m = jacobian(spec->spec, point(spec, x));
    copy_out(m.entries, entries_out);
    if (rho_out) *rho_out = m.rho;
    return MB_OK;
  });
}

mb_status mb_classify(const mb_spec* spec, double tol, mb_criticality* kind, double* rho_one) {
  return guarded([&] {
    require(spec, "spec");
    const Criticality c = classify(spec->spec, tol > 0.0 ? tol : kDefaultCriticalityTol);
    if (kind) {
      *kind = c.kind == CriticalityClass::Supercritical ? MB_SUPERCRITICAL
              : c.kind == CriticalityClass::Critical    ? MB_CRITICAL
                                                        : MB_SUBCRITICAL;
    }
    if (rho_one) *rho_one = c.rho_one;
    return MB_OK;
  });
}

mb_status mb_positive_regularity(const mb_spec* spec, int* out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    *out = check_positive_regularity(spec->spec) ? 1 : 0;
    return MB_OK;
  });
}

mb_status mb_extinction(const mb_spec* spec, double tol, uint64_t max_iter, double* q_out,
                        mb_root_info* info) {
  return guarded([&] {
    require(spec, "spec");
    const RootResult r = extinction_prob(spec->spec, tol > 0.0 ? tol : kDefaultRootTol,
                                         max_iter ? max_iter : kDefaultRootMaxIter);
    fill_root(r, q_out, info);
    if (!r.converged) {
      return set_error(MB_ERR_NONCONVERGENCE, "extinction iteration hit its cap before converging");
    }
    return MB_OK;
  });
}

mb_status mb_marked_root(const mb_spec* spec, const mb_marks* marks, const double* values,
                         double tol, uint64_t max_iter, double* q_out, mb_root_info* info) {
  return guarded([&] {
    check_pair(spec, marks);
    const RootResult r =
        marked_root(spec->spec, marks->marks, assignment(marks, values),
                    tol > 0.0 ? tol : kDefaultRootTol, max_iter ? max_iter : kDefaultRootMaxIter);
    fill_root(r, q_out, info);
    if (!r.converged) {
      return set_error(MB_ERR_NONCONVERGENCE, "marked root iteration hit its cap before converging");
    }
    return MB_OK;
  });
}

mb_status mb_flow_integrate(const mb_spec* spec, const mb_marks* marks, const double* values,
                            const double* x0, double t, double h, double* g_out,
                            mb_flow_info* info) {
  return guarded([&] {
    check_pair(spec, marks);
    const FlowResult r =
        integrate(spec->spec, marks->marks, assignment(marks, values), point(spec, x0), t, h);
    copy_out(r.g, g_out);
    if (info) {
      info->t = r.t;
      info->steps = r.steps;
      info->max_clamp = r.max_clamp;
    }
    return MB_OK;
  });
}

mb_status mb_flow_picard(const mb_spec* spec, const mb_marks* marks, const double* values,
                         const double* x0, double t, uint64_t n, double* out) {
  return guarded([&] {
    check_pair(spec, marks);
    copy_out(picard(spec->spec, marks->marks, assignment(marks, values), point(spec, x0), t, n),
             out);
    return MB_OK;
  });
}

mb_status mb_flow_limit(const mb_spec* spec, const mb_marks* marks, const double* values,
                        double tol, double* g_out, double* root_out, mb_limit_info* info) {
  return guarded([&] {
    check_pair(spec, marks);
    const LimitResult r =
        limit(spec->spec, marks->marks, assignment(marks, values), tol > 0.0 ? tol : 1e-9);
    copy_out(r.g, g_out);
    copy_out(r.root, root_out);
    if (info) {
      info->horizon = r.horizon;
      info->converged = r.converged ? 1 : 0;
      info->agrees = r.agrees ? 1 : 0;
    }
    if (!r.converged || !r.agrees) {
      return set_error(MB_ERR_NONCONVERGENCE,
                       r.converged ? "flow limit disagrees with the marked root"
                                   : "flow did not settle before the horizon cap");
    }
    return MB_OK;
  });
}

mb_status mb_horizon_pgf(const mb_spec* spec, const mb_marks* marks, const double* values,
                         const uint64_t* start, double t, double* value, mb_flow_info* info) {
  return guarded([&] {
    check_pair(spec, marks);
    require(value, "value");
    const HorizonPgf r = horizon_pgf(spec->spec, marks->marks, assignment(marks, values),
                                     start_state(spec, start), t);
    *value = r.value;
    if (info) {
      info->t = r.flow.t;
      info->steps = r.flow.steps;
      info->max_clamp = r.flow.max_clamp;
    }
    return MB_OK;
  });
}

mb_status mb_extinction_pgf(const mb_spec* spec, const mb_marks* marks, const double* values,
                            const uint64_t* start, double* value, int* conditioned,
                            double* q_used_out) {
  return guarded([&] {
    check_pair(spec, marks);
    require(value, "value");
    const ExtinctionPgf r = extinction_pgf(spec->spec, marks->marks, assignment(marks, values),
                                           start_state(spec, start));
    *value = r.value;
    if (conditioned) *conditioned = r.conditioned ? 1 : 0;
    copy_out(r.q_used, q_used_out);
    return MB_OK;
  });
}

mb_status mb_mc_pgf(const mb_spec* spec, const mb_marks* marks, const double* values,
                    const uint64_t* start, double t, const mb_mc_options* options,
                    mb_estimate* out) {
  return guarded([&] {
    check_pair(spec, marks);
    require(out, "out");
    const McEstimate e = mc_pgf(spec->spec, marks->marks, assignment(marks, values),
                                start_state(spec, start), t, options_from(options));
    fill_estimate(e, out);
    if (!e.reliable) {
      return set_error(MB_ERR_TRUNCATION, "more than 0.1% of replicas exceeded max_pop");
    }
    return MB_OK;
  });
}

mb_status mb_mc_extinction(const mb_spec* spec, const mb_marks* marks, const uint64_t* start,
                           const mb_mc_options* options, mb_extinction_counts** out) {
  return guarded([&] {
    check_pair(spec, marks);
    require(out, "out");
    auto* result = new mb_extinction_counts{
        mc_extinction_counts(spec->spec, marks->marks, start_state(spec, start),
                             options_from(options)),
        marks->marks,
        {}};
    for (const auto& entry : result->counts.counts) result->index.push_back(&entry);
    *out = result;
    return MB_OK;
  });
}

void mb_extinction_counts_free(mb_extinction_counts* counts) { delete counts; }

mb_status mb_extinction_counts_absorbed(const mb_extinction_counts* counts, mb_estimate* out) {
  return guarded([&] {
    require(counts, "counts");
    require(out, "out");
    fill_estimate(counts->counts.absorbed_fraction(), out);
    return MB_OK;
  });
}

size_t mb_extinction_counts_size(const mb_extinction_counts* counts) {
  return counts ? counts->index.size() : 0;
}

mb_status mb_extinction_counts_entry(const mb_extinction_counts* counts, size_t index,
                                     uint64_t* counters_out, uint64_t* occurrences,
                                     double* probability) {
  return guarded([&] {
    require(counts, "counts");
    if (index >= counts->index.size()) fail(ErrorCode::InvalidArgument, "index out of range");
    const auto& [counters, n] = *counts->index[index];
    if (counters_out) std::copy(counters.begin(), counters.end(), counters_out);
    if (occurrences) *occurrences = n;
    if (probability) *probability = counts->counts.pmf(counters);
    return MB_OK;
  });
}

mb_status mb_extinction_counts_pgf(const mb_extinction_counts* counts, const double* values,
                                   mb_estimate* unconditional, mb_estimate* conditional) {
  return guarded([&] {
    require(counts, "counts");
    const std::size_t n = counts->marks.size();
    if (n != 0) require(values, "values");
    const MarkAssignment a = MarkAssignment::from_values(
        counts->marks, n ? std::vector<double>(values, values + n) : std::vector<double>{});
    if (unconditional) fill_estimate(counts->counts.pgf(a), unconditional);
    if (conditional) fill_estimate(counts->counts.conditional_pgf(a), conditional);
    return MB_OK;
  });
}

}  // extern "C"
