/*
 * C interface to the mbranch library: multi-type Markov branching processes
 * with counted ("marked") split events.
 *
 * Objects are opaque handles created by mb_*_create / mb_*_load functions and
 * released with the matching mb_*_free. Every fallible call returns an
 * mb_status; on failure a description is available from mb_last_error() on
 * the calling thread until its next failing call.
 *
 * Type indices are 0-based. Mark values are passed as arrays in "slot" order:
 * all marked vectors of type 0 (sorted lexicographically), then type 1, and
 * so on; mb_marks_count / mb_marks_entry enumerate the slots.
 */
#ifndef MBRANCH_MBRANCH_H
#define MBRANCH_MBRANCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define MB_API __declspec(dllexport)
#elif defined(__GNUC__)
#  define MB_API __attribute__((visibility("default")))
#else
#  define MB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mb_status {
  MB_OK = 0,
  MB_ERR_INVALID_ARGUMENT = 1,
  MB_ERR_PARSE = 2,
  MB_ERR_VALIDATION = 3,
  MB_ERR_NONCONVERGENCE = 4,
  MB_ERR_TRUNCATION = 5,
  MB_ERR_INTEGRATOR = 6,
  MB_ERR_DOMAIN = 7,
  MB_ERR_IO = 8,
  MB_ERR_INTERNAL = 99
} mb_status;

typedef enum mb_criticality {
  MB_SUBCRITICAL = 0,
  MB_CRITICAL = 1,
  MB_SUPERCRITICAL = 2
} mb_criticality;

typedef enum mb_missing_marks {
  MB_MISSING_ASSIGN_ONE = 0,
  MB_MISSING_REJECT = 1
} mb_missing_marks;

typedef struct mb_spec mb_spec;
typedef struct mb_marks mb_marks;
typedef struct mb_extinction_counts mb_extinction_counts;

typedef struct mb_root_info {
  double residual;
  uint64_t iterations;
  int converged;
  int monotone;
} mb_root_info;

typedef struct mb_flow_info {
  double t;
  uint64_t steps;
  double max_clamp;
} mb_flow_info;

typedef struct mb_limit_info {
  double horizon;
  int converged;
  int agrees;
} mb_limit_info;

typedef struct mb_estimate {
  double mean;
  double std_error;
  uint64_t replicas;
  uint64_t seed;
  uint64_t truncated;
  int reliable;
} mb_estimate;

typedef struct mb_mc_options {
  uint64_t replicas;
  uint64_t seed;
  uint64_t max_pop;  /* 0 selects the default of 1e6 */
  unsigned threads;  /* 0 selects the hardware concurrency */
} mb_mc_options;

MB_API const char* mb_version(void);
MB_API const char* mb_last_error(void);
MB_API const char* mb_status_name(mb_status status);

/* Release strings returned through char** out-parameters. */
MB_API void mb_string_free(char* s);

/* ---- specs --------------------------------------------------------------- */

/* support_sizes[k] entries of law k; offspring is the concatenation of all
 * offspring vectors (dim entries each) and probs the matching probabilities. */
MB_API mb_status mb_spec_create(size_t dim, const double* theta, const size_t* support_sizes,
                                const uint32_t* offspring, const double* probs, mb_spec** out);
MB_API mb_status mb_spec_example(double p, double alpha, mb_spec** out);
MB_API void mb_spec_free(mb_spec* spec);
MB_API size_t mb_spec_dim(const mb_spec* spec);

/* Reads a JSON config ("-" for stdin) into a spec and its marked sets. */
MB_API mb_status mb_config_load(const char* path, mb_spec** spec, mb_marks** marks);
MB_API mb_status mb_config_parse(const char* text, mb_spec** spec, mb_marks** marks);
MB_API mb_status mb_config_canonical(const mb_spec* spec, const mb_marks* marks, char** json_out);

/* ---- marked sets ---------------------------------------------------------- */

/* sizes[k] vectors for type k, concatenated in `vectors` (dim entries each). */
MB_API mb_status mb_marks_create(const mb_spec* spec, const size_t* sizes,
                                 const uint32_t* vectors, mb_marks** out);
MB_API mb_status mb_marks_pure_death(const mb_spec* spec, mb_marks** out);
MB_API mb_status mb_marks_twins(const mb_spec* spec, mb_marks** out);
MB_API void mb_marks_free(mb_marks* marks);
MB_API size_t mb_marks_count(const mb_marks* marks);
MB_API mb_status mb_marks_entry(const mb_marks* marks, size_t slot, size_t* type,
                                uint32_t* vector_out);

/* Parses "TYPE:(j1,...,jd)=VALUE;..." (TYPE 1-based) into values_out, which
 * must hold mb_marks_count entries. */
MB_API mb_status mb_values_parse(const mb_marks* marks, const char* text,
                                 mb_missing_marks missing, double* values_out);

/* ---- model ---------------------------------------------------------------- */

MB_API mb_status mb_gf(const mb_spec* spec, size_t k, const double* x, double* out);
MB_API mb_status mb_gf_marked(const mb_spec* spec, const mb_marks* marks, const double* values,
                              size_t k, const double* x, double* out);
/* entries_out: dim*dim row-major; either output may be NULL. */
MB_API mb_status mb_jacobian(const mb_spec* spec, const double* x, double* entries_out,
                             double* rho_out);
MB_API mb_status mb_classify(const mb_spec* spec, double tol, mb_criticality* kind,
                             double* rho_one);
MB_API mb_status mb_positive_regularity(const mb_spec* spec, int* out);

/* ---- roots ---------------------------------------------------------------- */

/* q_out holds dim entries. tol <= 0 and max_iter == 0 select the defaults.
 * A result that did not converge is still written; the call then returns
 * MB_ERR_NONCONVERGENCE. */
MB_API mb_status mb_extinction(const mb_spec* spec, double tol, uint64_t max_iter, double* q_out,
                               mb_root_info* info);
MB_API mb_status mb_marked_root(const mb_spec* spec, const mb_marks* marks, const double* values,
                                double tol, uint64_t max_iter, double* q_out, mb_root_info* info);

/* ---- flow ----------------------------------------------------------------- */

/* h <= 0 selects the default step. */
MB_API mb_status mb_flow_integrate(const mb_spec* spec, const mb_marks* marks,
                                   const double* values, const double* x0, double t, double h,
                                   double* g_out, mb_flow_info* info);
MB_API mb_status mb_flow_picard(const mb_spec* spec, const mb_marks* marks, const double* values,
                                const double* x0, double t, uint64_t n, double* out);
MB_API mb_status mb_flow_limit(const mb_spec* spec, const mb_marks* marks, const double* values,
                               double tol, double* g_out, double* root_out, mb_limit_info* info);

/* ---- generating functions ------------------------------------------------- */

MB_API mb_status mb_horizon_pgf(const mb_spec* spec, const mb_marks* marks, const double* values,
                                const uint64_t* start, double t, double* value,
                                mb_flow_info* info);
/* q_used_out (dim entries, may be NULL) receives the extinction probabilities
 * when the result is conditioned. */
MB_API mb_status mb_extinction_pgf(const mb_spec* spec, const mb_marks* marks,
                                   const double* values, const uint64_t* start, double* value,
                                   int* conditioned, double* q_used_out);

/* ---- simulation ----------------------------------------------------------- */

/* Returns MB_ERR_TRUNCATION (with the estimate written) when more than 0.1%
 * of replicas hit max_pop. */
MB_API mb_status mb_mc_pgf(const mb_spec* spec, const mb_marks* marks, const double* values,
                           const uint64_t* start, double t, const mb_mc_options* options,
                           mb_estimate* out);

MB_API mb_status mb_mc_extinction(const mb_spec* spec, const mb_marks* marks,
                                  const uint64_t* start, const mb_mc_options* options,
                                  mb_extinction_counts** out);
MB_API void mb_extinction_counts_free(mb_extinction_counts* counts);
MB_API mb_status mb_extinction_counts_absorbed(const mb_extinction_counts* counts,
                                               mb_estimate* out);
/* Number of distinct counter vectors seen among absorbed replicas. */
MB_API size_t mb_extinction_counts_size(const mb_extinction_counts* counts);
/* counters_out holds mb_marks_count entries; frequency is among absorbed. */
MB_API mb_status mb_extinction_counts_entry(const mb_extinction_counts* counts, size_t index,
                                            uint64_t* counters_out, uint64_t* occurrences,
                                            double* probability);
/* Unconditional (over all replicas) and conditional (over absorbed) PGFs. */
MB_API mb_status mb_extinction_counts_pgf(const mb_extinction_counts* counts,
                                          const double* values, mb_estimate* unconditional,
                                          mb_estimate* conditional);

#ifdef __cplusplus
}
#endif

#endif /* MBRANCH_MBRANCH_H */
