#include "mbranch/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "mbranch/error.hpp"

namespace mbranch {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Calls fn(i) for every replica index; each thread owns a contiguous block,
// and fn writes only to slot i, so the result does not depend on threads.
template <class Fn>
void for_each_replica(std::size_t replicas, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, replicas));
  if (threads <= 1) {
    for (std::size_t i = 0; i < replicas; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (replicas + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(replicas, begin + chunk);
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

void check_options(const McOptions& options, const StartState& start) {
  if (options.replicas == 0) fail(ErrorCode::InvalidArgument, "replica count must be positive");
  const std::uint64_t size = std::accumulate(start.begin(), start.end(), std::uint64_t{0});
  if (options.max_pop < size) {
    fail(ErrorCode::InvalidArgument, "max_pop is below the initial population");
  }
}

double mark_product(const MarkAssignment& values, const std::vector<std::uint64_t>& counters) {
  double v = 1.0;
  for (std::size_t s = 0; s < counters.size(); ++s) {
    if (counters[s] != 0) v *= std::pow(values[s], static_cast<double>(counters[s]));
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

ReplicaStream::ReplicaStream(std::uint64_t seed, std::uint64_t replica)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(~replica))) {}

double ReplicaStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double ReplicaStream::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

AliasTable::AliasTable(std::span<const double> probabilities) {
  const std::size_t n = probabilities.size();
  if (n == 0) fail(ErrorCode::InvalidArgument, "alias table needs at least one outcome");
  const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  accept_.assign(n, 1.0);
  alias_.resize(n);
  std::iota(alias_.begin(), alias_.end(), std::size_t{0});

  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = probabilities[i] / total * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t lo = small.back();
    small.pop_back();
    const std::size_t hi = large.back();
    large.pop_back();
    accept_[lo] = scaled[lo];
    alias_[lo] = hi;
    scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0;
    (scaled[hi] < 1.0 ? small : large).push_back(hi);
  }
  // Leftovers are one up to rounding.
  for (std::size_t i : small) accept_[i] = 1.0;
  for (std::size_t i : large) accept_[i] = 1.0;
}

std::size_t AliasTable::sample(ReplicaStream& rng) const {
  const std::size_t n = accept_.size();
  const auto i = std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)));
  return rng.uniform() < accept_[i] ? i : alias_[i];
}

double AliasTable::probability(std::size_t i) const {
  double mass = accept_.at(i);
  for (std::size_t m = 0; m < accept_.size(); ++m) {
    if (m != i && alias_[m] == i) mass += 1.0 - accept_[m];
  }
  return mass / static_cast<double>(accept_.size());
}

std::uint64_t ChainState::population() const {
  return std::accumulate(x.begin(), x.end(), std::uint64_t{0});
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(const ProcessSpec& spec, const MarkedSets& marks) {
  const std::size_t d = spec.dim();
  if (marks.dim() != d) fail(ErrorCode::InvalidArgument, "marked sets do not match the spec");
  theta_.resize(d);
  tables_.reserve(d);
  entries_.resize(d);
  counters_ = marks.size();
  for (std::size_t k = 0; k < d; ++k) {
    const TypeLaw& law = spec.law(k);
    theta_[k] = law.theta;
    std::vector<double> probs;
    for (const Offspring& o : law.offspring) {
      probs.push_back(o.p);
      Entry e;
      e.j = o.j;
      e.size_delta = std::accumulate(o.j.begin(), o.j.end(), std::int64_t{0}) - 1;
      e.slot = marks.slot(k, o.j);
      entries_[k].push_back(std::move(e));
    }
    tables_.emplace_back(probs);
  }
}

ChainState Simulator::initial(const StartState& start) const {
  if (start.size() != dim()) {
    fail(ErrorCode::InvalidArgument, "start state has " + std::to_string(start.size()) +
                                         " entries, expected " + std::to_string(dim()));
  }
  ChainState s;
  s.x = start;
  s.counters.assign(counters_, 0);
  return s;
}

double Simulator::total_rate(const ChainState& state) const {
  double rate = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) rate += static_cast<double>(state.x[k]) * theta_[k];
  return rate;
}

void Simulator::split(ChainState& state, std::uint64_t& population, ReplicaStream& rng) const {
  double pick = rng.uniform() * total_rate(state);
  std::size_t k = 0;
  for (; k + 1 < dim(); ++k) {
    const double w = static_cast<double>(state.x[k]) * theta_[k];
    if (pick < w) break;
    pick -= w;
  }
  // Rounding can land the pick past the last occupied type.
  while (state.x[k] == 0) k = (k == 0) ? dim() - 1 : k - 1;

  const Entry& e = entries_[k][tables_[k].sample(rng)];
  state.x[k] -= 1;
  for (std::size_t i = 0; i < dim(); ++i) state.x[i] += e.j[i];
  population = static_cast<std::uint64_t>(static_cast<std::int64_t>(population) + e.size_delta);
  if (e.slot) ++state.counters[*e.slot];
}

ChainState Simulator::step(const ChainState& state, ReplicaStream& rng) const {
  std::uint64_t population = state.population();
  if (population == 0) fail(ErrorCode::InvalidArgument, "no event can fire from the absorbed state");
  ChainState next = state;
  next.clock += rng.exponential(total_rate(next));
  split(next, population, rng);
  return next;
}

SimOutcome Simulator::run(const StartState& start, double horizon, std::uint64_t max_pop,
                          ReplicaStream& rng) const {
  if (!(horizon > 0.0)) fail(ErrorCode::InvalidArgument, "horizon must be positive");
  SimOutcome out;
  out.final = initial(start);
  ChainState& s = out.final;
  std::uint64_t population = s.population();
  if (population > max_pop) fail(ErrorCode::InvalidArgument, "max_pop is below the initial population");

  while (true) {
    if (population == 0) {
      out.absorbed = true;
      out.tau = s.clock;
      return out;
    }
    const double dt = rng.exponential(total_rate(s));
    if (s.clock + dt > horizon) {
      s.clock = horizon;
      return out;
    }
    s.clock += dt;
    split(s, population, rng);
    if (population > max_pop) {
      out.truncated = true;
      return out;
    }
  }
}

std::vector<Transition> Simulator::transitions(const ChainState& state) const {
  std::vector<Transition> out;
  for (std::size_t k = 0; k < dim(); ++k) {
    if (state.x[k] == 0) continue;
    for (std::size_t n = 0; n < entries_[k].size(); ++n) {
      const Entry& e = entries_[k][n];
      Transition t;
      t.type = k;
      t.offspring = n;
      t.x = state.x;
      t.x[k] -= 1;
      for (std::size_t i = 0; i < dim(); ++i) t.x[i] += e.j[i];
      t.counters = state.counters;
      if (e.slot) ++t.counters[*e.slot];
      t.rate = static_cast<double>(state.x[k]) * theta_[k] * tables_[k].probability(n);
      out.push_back(std::move(t));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators

McEstimate summarize(std::span<const double> samples) {
  McEstimate e;
  e.replicas = samples.size();
  if (samples.empty()) return e;
  double sum = 0.0;
  for (double v : samples) sum += v;
  const double n = static_cast<double>(samples.size());
  e.mean = sum / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return e;
}

McEstimate mc_pgf(const ProcessSpec& spec, const MarkedSets& marks,
                  const MarkAssignment& values, const StartState& start, double t,
                  const McOptions& options) {
  check_options(options, start);
  if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "horizon must be nonnegative");
  if (values.size() != marks.size()) {
    fail(ErrorCode::InvalidArgument, "mark values do not match the marked sets");
  }
  const Simulator sim(spec, marks);
  std::vector<double> samples(options.replicas, 1.0);
  std::vector<char> truncated(options.replicas, 0);
  if (t > 0.0) {
    for_each_replica(options.replicas, options.threads, [&](std::size_t i) {
      ReplicaStream rng(options.seed, i);
      const SimOutcome o = sim.run(start, t, options.max_pop, rng);
      samples[i] = mark_product(values, o.final.counters);
      truncated[i] = o.truncated;
    });
  }
  McEstimate e = summarize(samples);
  e.seed = options.seed;
  e.truncated = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
  e.reliable = e.truncated_fraction() <= kTruncationThreshold;
  return e;
}

ExtinctionCounts mc_extinction_counts(const ProcessSpec& spec, const MarkedSets& marks,
                                      const StartState& start, const McOptions& options) {
  check_options(options, start);
  const Simulator sim(spec, marks);
  struct Replica {
    bool absorbed = false;
    std::vector<std::uint64_t> counters;
  };
  std::vector<Replica> results(options.replicas);
  for_each_replica(options.replicas, options.threads, [&](std::size_t i) {
    ReplicaStream rng(options.seed, i);
    SimOutcome o = sim.run(start, std::numeric_limits<double>::infinity(), options.max_pop, rng);
    results[i].absorbed = o.absorbed;
    if (o.absorbed) results[i].counters = std::move(o.final.counters);
  });

  ExtinctionCounts c;
  c.replicas = options.replicas;
  c.seed = options.seed;
  for (const Replica& r : results) {
    if (r.absorbed) {
      ++c.absorbed;
      ++c.counts[r.counters];
    } else {
      ++c.escaped;
    }
  }
  return c;
}

double ExtinctionCounts::pmf(const std::vector<std::uint64_t>& counters) const {
  if (absorbed == 0) return 0.0;
  auto it = counts.find(counters);
  return it == counts.end() ? 0.0
                            : static_cast<double>(it->second) / static_cast<double>(absorbed);
}

namespace {

// Mean and standard error of a sample given as (value, multiplicity) pairs.
McEstimate summarize_weighted(const std::vector<std::pair<double, std::uint64_t>>& groups,
                              std::size_t n) {
  McEstimate e;
  e.replicas = n;
  if (n == 0) return e;
  double sum = 0.0;
  for (const auto& [v, c] : groups) sum += v * static_cast<double>(c);
  const double dn = static_cast<double>(n);
  e.mean = sum / dn;
  if (n > 1) {
    double ss = 0.0;
    for (const auto& [v, c] : groups) ss += (v - e.mean) * (v - e.mean) * static_cast<double>(c);
    e.std_error = std::sqrt(ss / (dn - 1.0)) / std::sqrt(dn);
  }
  return e;
}

}  // namespace

McEstimate ExtinctionCounts::absorbed_fraction() const {
  McEstimate e = summarize_weighted({{1.0, absorbed}, {0.0, escaped}}, replicas);
  e.seed = seed;
  e.truncated = escaped;
  return e;
}

McEstimate ExtinctionCounts::pgf(const MarkAssignment& values) const {
  std::vector<std::pair<double, std::uint64_t>> groups;
  for (const auto& [l, count] : counts) groups.emplace_back(mark_product(values, l), count);
  groups.emplace_back(0.0, escaped);
  McEstimate e = summarize_weighted(groups, replicas);
  e.seed = seed;
  e.truncated = escaped;
  return e;
}

McEstimate ExtinctionCounts::conditional_pgf(const MarkAssignment& values) const {
  std::vector<std::pair<double, std::uint64_t>> groups;
  for (const auto& [l, count] : counts) groups.emplace_back(mark_product(values, l), count);
  McEstimate e = summarize_weighted(groups, absorbed);
  e.seed = seed;
  e.truncated = escaped;
  return e;
}

}  // namespace mbranch
