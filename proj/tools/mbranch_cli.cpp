// mbranch-cli: command-line front end to libmbranch.
//
// Every command reads a JSON config (-c FILE, "-" for stdin) and prints a
// JSON report with sorted keys and 17-digit floats. Exit codes:
//   0 success, 1 usage or parse error, 2 validation error,
//   3 solver nonconvergence, 4 simulation truncation.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mbranch/json_format.hpp"
#include "mbranch/mbranch.h"

namespace {

using nlohmann::json;

struct CliError {
  mb_status status;
  std::string message;
};

void check(mb_status s) {
  if (s != MB_OK) throw CliError{s, mb_last_error()};
}

[[noreturn]] void usage_error(const std::string& message) {
  throw CliError{MB_ERR_INVALID_ARGUMENT, message};
}

int exit_code(mb_status s) {
  switch (s) {
    case MB_ERR_VALIDATION:
    case MB_ERR_DOMAIN:
      return 2;
    case MB_ERR_NONCONVERGENCE:
    case MB_ERR_INTEGRATOR:
      return 3;
    case MB_ERR_TRUNCATION:
      return 4;
    default:
      return 1;
  }
}

struct SpecDeleter {
  void operator()(mb_spec* p) const { mb_spec_free(p); }
};
struct MarksDeleter {
  void operator()(mb_marks* p) const { mb_marks_free(p); }
};
struct CountsDeleter {
  void operator()(mb_extinction_counts* p) const { mb_extinction_counts_free(p); }
};

struct Flags {
  std::string config;
  std::optional<double> tol;
  std::uint64_t seed = 0;
  std::uint64_t reps = 100000;
  std::optional<double> t;
  std::string start;
  std::optional<std::string> values;
  std::uint64_t max_pop = 0;
  unsigned threads = 0;
  std::string out;
};

struct Loaded {
  std::unique_ptr<mb_spec, SpecDeleter> spec;
  std::unique_ptr<mb_marks, MarksDeleter> marks;
  std::size_t dim = 0;
  std::string canonical;
};

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw CliError{MB_ERR_INTERNAL, "SHA-256 digest failed"};
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

Loaded load(const Flags& flags) {
  if (flags.config.empty()) usage_error("-c FILE is required");
  mb_spec* spec = nullptr;
  mb_marks* marks = nullptr;
  check(mb_config_load(flags.config.c_str(), &spec, &marks));
  Loaded l;
  l.spec.reset(spec);
  l.marks.reset(marks);
  l.dim = mb_spec_dim(spec);
  char* text = nullptr;
  check(mb_config_canonical(spec, marks, &text));
  l.canonical = text;
  mb_string_free(text);
  return l;
}

std::vector<std::uint64_t> parse_start(const Flags& flags, std::size_t dim) {
  std::vector<std::uint64_t> start;
  if (flags.start.empty()) {
    start.assign(dim, 0);
    start[0] = 1;
    return start;
  }
  std::stringstream in(flags.start);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      if (item.empty() || item.find('-') != std::string::npos) throw std::invalid_argument(item);
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      usage_error("--start: bad count \"" + item + "\"");
    }
    if (used != item.size()) usage_error("--start: bad count \"" + item + "\"");
    start.push_back(v);
  }
  if (start.size() != dim) {
    usage_error("--start has " + std::to_string(start.size()) + " entries, expected " +
                std::to_string(dim));
  }
  return start;
}

std::vector<double> mark_values(const Loaded& l, const Flags& flags, mb_missing_marks missing) {
  std::vector<double> values(mb_marks_count(l.marks.get()), 1.0);
  if (flags.values) {
    check(mb_values_parse(l.marks.get(), flags.values->c_str(), missing, values.data()));
  } else if (missing == MB_MISSING_REJECT && !values.empty()) {
    throw CliError{MB_ERR_VALIDATION, "--values must assign every marked vector"};
  }
  return values;
}

std::string vector_label(std::size_t type, const std::vector<std::uint32_t>& j) {
  std::string s = std::to_string(type + 1) + ":(";
  for (std::size_t i = 0; i < j.size(); ++i) s += (i ? "," : "") + std::to_string(j[i]);
  return s + ")";
}

json marks_json(const Loaded& l, const std::vector<double>* values) {
  json out = json::array();
  std::vector<std::uint32_t> j(l.dim);
  for (std::size_t s = 0; s < mb_marks_count(l.marks.get()); ++s) {
    std::size_t type = 0;
    check(mb_marks_entry(l.marks.get(), s, &type, j.data()));
    json entry = {{"slot", s}, {"type", type + 1}, {"j", j}, {"label", vector_label(type, j)}};
    if (values) entry["value"] = (*values)[s];
    out.push_back(std::move(entry));
  }
  return out;
}

json estimate_json(const mb_estimate& e) {
  return {{"mean", e.mean},
          {"std_error", e.std_error},
          {"replicas", e.replicas},
          {"seed", e.seed},
          {"truncated", e.truncated},
          {"truncated_fraction",
           e.replicas ? static_cast<double>(e.truncated) / static_cast<double>(e.replicas) : 0.0},
          {"reliable", e.reliable != 0}};
}

mb_mc_options mc_options(const Flags& flags) {
  mb_mc_options o{};
  o.replicas = flags.reps;
  o.seed = flags.seed;
  o.max_pop = flags.max_pop;
  o.threads = flags.threads;
  return o;
}

const char* criticality_name(mb_criticality c) {
  switch (c) {
    case MB_SUBCRITICAL: return "subcritical";
    case MB_CRITICAL: return "critical";
    case MB_SUPERCRITICAL: return "supercritical";
  }
  return "unknown";
}

struct Report {
  json results = json::object();
  json diagnostics = json::object();
};

double root_tol(const Flags& flags) { return flags.tol.value_or(0.0); }

Report cmd_validate(const Loaded& l, const Flags&) {
  Report r;
  int regular = 0;
  check(mb_positive_regularity(l.spec.get(), &regular));
  r.results["d"] = l.dim;
  r.results["marks"] = marks_json(l, nullptr);
  r.results["positively_regular"] = regular != 0;
  r.results["canonical_config"] = json::parse(l.canonical);
  return r;
}

Report cmd_classify(const Loaded& l, const Flags& flags) {
  Report r;
  mb_criticality kind{};
  double rho = 0.0;
  check(mb_classify(l.spec.get(), flags.tol.value_or(0.0), &kind, &rho));
  std::vector<double> ones(l.dim, 1.0), m(l.dim * l.dim);
  check(mb_jacobian(l.spec.get(), ones.data(), m.data(), nullptr));
  json rows = json::array();
  for (std::size_t i = 0; i < l.dim; ++i) {
    rows.push_back(std::vector<double>(m.begin() + i * l.dim, m.begin() + (i + 1) * l.dim));
  }
  int regular = 0;
  check(mb_positive_regularity(l.spec.get(), &regular));
  r.results["rho"] = rho;
  r.results["class"] = criticality_name(kind);
  r.results["jacobian_at_one"] = rows;
  r.results["positively_regular"] = regular != 0;
  r.diagnostics["tol"] = flags.tol.value_or(1e-10);
  return r;
}

json root_diagnostics(const mb_root_info& info) {
  return {{"residual", info.residual},
          {"iterations", info.iterations},
          {"converged", info.converged != 0},
          {"monotone", info.monotone != 0}};
}

Report cmd_extinction(const Loaded& l, const Flags& flags) {
  Report r;
  std::vector<double> q(l.dim);
  mb_root_info info{};
  check(mb_extinction(l.spec.get(), root_tol(flags), 0, q.data(), &info));
  mb_criticality kind{};
  double rho = 0.0;
  check(mb_classify(l.spec.get(), 0.0, &kind, &rho));
  r.results["q"] = q;
  r.results["class"] = criticality_name(kind);
  r.results["rho"] = rho;
  r.diagnostics = root_diagnostics(info);
  return r;
}

Report cmd_marked_root(const Loaded& l, const Flags& flags) {
  Report r;
  const auto values = mark_values(l, flags, MB_MISSING_ASSIGN_ONE);
  std::vector<double> q(l.dim);
  mb_root_info info{};
  check(mb_marked_root(l.spec.get(), l.marks.get(), values.data(), root_tol(flags), 0, q.data(),
                       &info));
  r.results["root"] = q;
  r.results["marks"] = marks_json(l, &values);
  r.diagnostics = root_diagnostics(info);

  bool below_one = !values.empty();
  for (double v : values) below_one = below_one && v < 1.0;
  if (below_one) {
    std::vector<double> g(l.dim), root(l.dim);
    mb_limit_info li{};
    const mb_status s = mb_flow_limit(l.spec.get(), l.marks.get(), values.data(),
                                      flags.tol.value_or(0.0), g.data(), root.data(), &li);
    if (s != MB_OK && s != MB_ERR_NONCONVERGENCE) check(s);
    double gap = 0.0;
    for (std::size_t k = 0; k < l.dim; ++k) gap = std::max(gap, std::abs(g[k] - root[k]));
    r.results["flow_limit"] = g;
    r.diagnostics["flow_limit"] = {{"horizon", li.horizon},
                                   {"converged", li.converged != 0},
                                   {"agrees", li.agrees != 0},
                                   {"max_abs_gap", gap}};
  }
  return r;
}

json flow_diagnostics(const mb_flow_info& info) {
  return {{"t", info.t}, {"steps", info.steps}, {"max_clamp", info.max_clamp}};
}

double require_t(const Flags& flags) {
  if (!flags.t) usage_error("--t is required for this command");
  return *flags.t;
}

Report cmd_pgf(const Loaded& l, const Flags& flags) {
  Report r;
  const double t = require_t(flags);
  const auto start = parse_start(flags, l.dim);
  const auto values = mark_values(l, flags, MB_MISSING_ASSIGN_ONE);
  double value = 0.0;
  mb_flow_info info{};
  check(mb_horizon_pgf(l.spec.get(), l.marks.get(), values.data(), start.data(), t, &value, &info));
  std::vector<double> ones(l.dim, 1.0), g(l.dim);
  check(mb_flow_integrate(l.spec.get(), l.marks.get(), values.data(), ones.data(), t, 0.0,
                          g.data(), nullptr));
  r.results["value"] = value;
  r.results["per_ancestor"] = g;
  r.results["start"] = start;
  r.results["t"] = t;
  r.results["marks"] = marks_json(l, &values);
  r.diagnostics = flow_diagnostics(info);
  return r;
}

Report cmd_extinction_pgf(const Loaded& l, const Flags& flags) {
  Report r;
  const auto start = parse_start(flags, l.dim);
  const auto values = mark_values(l, flags, MB_MISSING_REJECT);
  double value = 0.0;
  int conditioned = 0;
  std::vector<double> q_used(l.dim, 1.0), root(l.dim);
  check(mb_extinction_pgf(l.spec.get(), l.marks.get(), values.data(), start.data(), &value,
                          &conditioned, q_used.data()));
  mb_root_info info{};
  check(mb_marked_root(l.spec.get(), l.marks.get(), values.data(), root_tol(flags), 0,
                       root.data(), &info));
  r.results["value"] = value;
  r.results["conditioned"] = conditioned != 0;
  r.results["marked_root"] = root;
  if (conditioned) r.results["q"] = q_used;
  r.results["start"] = start;
  r.results["marks"] = marks_json(l, &values);
  r.diagnostics = root_diagnostics(info);
  return r;
}

json counts_json(const Loaded& l, const mb_extinction_counts* counts) {
  json pmf = json::array();
  const std::size_t n = mb_marks_count(l.marks.get());
  std::vector<std::uint64_t> counters(n);
  for (std::size_t i = 0; i < mb_extinction_counts_size(counts); ++i) {
    std::uint64_t occurrences = 0;
    double p = 0.0;
    check(mb_extinction_counts_entry(counts, i, counters.data(), &occurrences, &p));
    pmf.push_back({{"counters", counters}, {"occurrences", occurrences}, {"probability", p}});
  }
  return pmf;
}

Report cmd_simulate(const Loaded& l, const Flags& flags) {
  Report r;
  const auto start = parse_start(flags, l.dim);
  const auto values = mark_values(l, flags, MB_MISSING_ASSIGN_ONE);
  const mb_mc_options opts = mc_options(flags);
  r.results["start"] = start;
  r.results["marks"] = marks_json(l, &values);
  if (flags.t) {
    mb_estimate e{};
    check(mb_mc_pgf(l.spec.get(), l.marks.get(), values.data(), start.data(), *flags.t, &opts, &e));
    r.results["t"] = *flags.t;
    r.results["estimate"] = estimate_json(e);
    r.diagnostics["truncated_fraction"] = r.results["estimate"]["truncated_fraction"];
    return r;
  }
  mb_extinction_counts* raw = nullptr;
  check(mb_mc_extinction(l.spec.get(), l.marks.get(), start.data(), &opts, &raw));
  std::unique_ptr<mb_extinction_counts, CountsDeleter> counts(raw);
  mb_estimate absorbed{}, unconditional{}, conditional{};
  check(mb_extinction_counts_absorbed(counts.get(), &absorbed));
  check(mb_extinction_counts_pgf(counts.get(), values.data(), &unconditional, &conditional));
  r.results["absorbed_fraction"] = estimate_json(absorbed);
  r.results["pgf"] = estimate_json(unconditional);
  r.results["conditional_pgf"] = estimate_json(conditional);
  r.results["pmf"] = counts_json(l, counts.get());
  r.diagnostics["escaped_fraction"] = 1.0 - absorbed.mean;
  return r;
}

Report cmd_compare(const Loaded& l, const Flags& flags) {
  Report r;
  const auto start = parse_start(flags, l.dim);
  const mb_mc_options opts = mc_options(flags);
  double analytic = 0.0;
  mb_estimate mc{};
  std::vector<double> values;
  if (flags.t) {
    values = mark_values(l, flags, MB_MISSING_ASSIGN_ONE);
    mb_flow_info info{};
    check(mb_horizon_pgf(l.spec.get(), l.marks.get(), values.data(), start.data(), *flags.t,
                         &analytic, &info));
    check(mb_mc_pgf(l.spec.get(), l.marks.get(), values.data(), start.data(), *flags.t, &opts, &mc));
    r.results["t"] = *flags.t;
    r.results["target"] = "horizon";
    r.diagnostics["flow"] = flow_diagnostics(info);
  } else {
    values = mark_values(l, flags, MB_MISSING_REJECT);
    int conditioned = 0;
    check(mb_extinction_pgf(l.spec.get(), l.marks.get(), values.data(), start.data(), &analytic,
                            &conditioned, nullptr));
    mb_extinction_counts* raw = nullptr;
    check(mb_mc_extinction(l.spec.get(), l.marks.get(), start.data(), &opts, &raw));
    std::unique_ptr<mb_extinction_counts, CountsDeleter> counts(raw);
    mb_estimate unconditional{}, conditional{};
    check(mb_extinction_counts_pgf(counts.get(), values.data(), &unconditional, &conditional));
    mc = conditioned ? conditional : unconditional;
    r.results["target"] = conditioned ? "extinction_conditional" : "extinction";
  }
  const double delta = mc.mean - analytic;
  r.results["analytic"] = analytic;
  r.results["mc"] = estimate_json(mc);
  r.results["delta"] = delta;
  r.results["pass"] = std::abs(delta) <= 4.0 * mc.std_error;
  r.results["start"] = start;
  r.results["marks"] = marks_json(l, &values);
  r.diagnostics["truncated_fraction"] = r.results["mc"]["truncated_fraction"];
  return r;
}

json flags_json(const std::string& command, const Flags& f) {
  json args = {{"config", f.config}, {"seed", f.seed}, {"reps", f.reps},
               {"threads", f.threads}, {"max_pop", f.max_pop}};
  if (f.tol) args["tol"] = *f.tol;
  if (f.t) args["t"] = *f.t;
  if (!f.start.empty()) args["start"] = f.start;
  if (f.values) args["values"] = *f.values;
  return {{"name", command}, {"args", args}};
}

void add_common_flags(CLI::App* sub, Flags& f) {
  sub->add_option("-c,--config", f.config, "config file, - for stdin")->required();
  sub->add_option("--tol", f.tol, "solver tolerance");
  sub->add_option("--seed", f.seed, "master seed for simulations");
  sub->add_option("--reps", f.reps, "Monte Carlo replicas")->check(CLI::PositiveNumber);
  sub->add_option("--t", f.t, "time horizon")->check(CLI::NonNegativeNumber);
  sub->add_option("--start", f.start, "initial population i1,...,id (default e1)");
  sub->add_option("--values", f.values, "mark values TYPE:(j1,...,jd)=VALUE;...");
  sub->add_option("--max-pop", f.max_pop, "population cap for simulations");
  sub->add_option("--threads", f.threads, "simulation threads, 0 for all cores");
  sub->add_option("--out", f.out, "write the report to FILE instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  using Handler = Report (*)(const Loaded&, const Flags&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
      {"validate", "parse and canonicalize a config", cmd_validate},
      {"classify", "criticality from the Jacobian at 1", cmd_classify},
      {"extinction", "extinction probabilities", cmd_extinction},
      {"marked-root", "joint PGF of mark counts at extinction", cmd_marked_root},
      {"pgf", "joint PGF of mark counts at a horizon", cmd_pgf},
      {"extinction-pgf", "PGF of mark counts at extinction for a start state",
       cmd_extinction_pgf},
      {"simulate", "Monte Carlo estimates", cmd_simulate},
      {"compare", "analytic value against Monte Carlo", cmd_compare},
  };

  CLI::App app{"Marked split-event statistics for multi-type Markov branching processes"};
  app.set_version_flag("--version", std::string(mb_version()));
  app.require_subcommand(1);
  Flags flags;
  for (const auto& [name, help, handler] : commands) add_common_flags(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Handler handler = nullptr;
  for (const auto& [name, help, h] : commands) {
    if (name == chosen->get_name()) handler = h;
  }

  try {
    const auto started = std::chrono::steady_clock::now();
    const Loaded loaded = load(flags);
    Report report = handler(loaded, flags);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    json doc = {{"command", flags_json(chosen->get_name(), flags)},
                {"input_digest", sha256_hex(loaded.canonical)},
                {"results", std::move(report.results)},
                {"diagnostics", std::move(report.diagnostics)},
                {"wall_time", wall},
                {"version", mb_version()}};
    const std::string text = mbranch::dump_json(doc, 2) + "\n";
    if (flags.out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(flags.out, std::ios::binary);
      if (!out || !(out << text)) throw CliError{MB_ERR_IO, "cannot write " + flags.out};
    }
    return 0;
  } catch (const CliError& e) {
    std::cerr << "mbranch-cli: " << mb_status_name(e.status) << " error: " << e.message << "\n";
    return exit_code(e.status);
  } catch (const std::exception& e) {
    std::cerr << "mbranch-cli: error: " << e.what() << "\n";
    return 1;
  }
}
