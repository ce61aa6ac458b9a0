#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mbranch/model.hpp"
#include "mbranch/pgf.hpp"

namespace mbranch {

constexpr std::uint64_t kDefaultMaxPop = 1'000'000;

/// Truncated fraction above which a Monte Carlo estimate is unreliable.
constexpr double kTruncationThreshold = 1e-3;

/// Independent random stream for one replica. The engine seed is a
/// SplitMix64 mix of (master seed, replica index), so replica r sees the same
/// numbers no matter which thread runs it.
class ReplicaStream {
 public:
  ReplicaStream(std::uint64_t seed, std::uint64_t replica);

  /// Uniform on [0,1) with 53 random bits.
  double uniform();
  double exponential(double rate);

 private:
  std::mt19937_64 engine_;
};

/// Walker/Vose alias table: O(1) sampling from a finite distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> probabilities);

  std::size_t sample(ReplicaStream& rng) const;

  /// Probability of outcome i as encoded by the table.
  double probability(std::size_t i) const;

  std::size_t size() const noexcept { return accept_.size(); }

 private:
  std::vector<double> accept_;
  std::vector<std::size_t> alias_;
};

/// Population plus one counter per marked vector (MarkedSets slot order).
struct ChainState {
  std::vector<std::uint64_t> x;
  std::vector<std::uint64_t> counters;
  double clock = 0.0;

  std::uint64_t population() const;

  friend bool operator==(const ChainState&, const ChainState&) = default;
};

struct SimOutcome {
  ChainState final;
  bool absorbed = false;
  std::optional<double> tau;
  bool truncated = false;
};

/// One jump of the augmented chain out of a given state.
struct Transition {
  std::size_t type = 0;          // splitting type
  std::size_t offspring = 0;     // index into law(type).offspring
  std::vector<std::uint64_t> x;  // target population
  std::vector<std::uint64_t> counters;
  double rate = 0.0;
};

/// Exact event-driven simulation of (X(t), counters(t)).
class Simulator {
 public:
  Simulator(const ProcessSpec& spec, const MarkedSets& marks);

  std::size_t dim() const noexcept { return theta_.size(); }
  std::size_t counter_count() const noexcept { return counters_; }

  ChainState initial(const StartState& start) const;

  /// One split event: exponential holding time at total rate sum_k x_k theta_k,
  /// splitting type chosen proportionally to x_k theta_k, offspring drawn from
  /// the type's law, counter bumped iff the offspring vector is marked.
  /// Throws Error(InvalidArgument) on the absorbed state.
  ChainState step(const ChainState& state, ReplicaStream& rng) const;

  /// Steps until the clock would pass `horizon` (the state is frozen at the
  /// horizon), the population hits zero, or it exceeds max_pop.
  SimOutcome run(const StartState& start, double horizon, std::uint64_t max_pop,
                 ReplicaStream& rng) const;

  /// Outgoing jumps of `state` with the rates the sampler realizes,
  /// offspring probabilities read back from the alias tables.
  std::vector<Transition> transitions(const ChainState& state) const;

  double total_rate(const ChainState& state) const;

 private:
  // Picks the splitting type and offspring and applies them; clock untouched.
  void split(ChainState& state, std::uint64_t& population, ReplicaStream& rng) const;

  std::vector<double> theta_;
  std::vector<AliasTable> tables_;
  // per type, per offspring entry: the vector, its size delta and mark slot
  struct Entry {
    OffspringVector j;
    std::int64_t size_delta = 0;
    std::optional<std::size_t> slot;
  };
  std::vector<std::vector<Entry>> entries_;
  std::size_t counters_ = 0;
};

struct McOptions {
  std::size_t replicas = 100'000;
  std::uint64_t seed = 0;
  std::uint64_t max_pop = kDefaultMaxPop;
  unsigned threads = 1;  // 0 picks the hardware concurrency
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(replicas)
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  std::size_t truncated = 0;
  bool reliable = true;  // truncated fraction <= kTruncationThreshold

  double truncated_fraction() const {
    return replicas ? static_cast<double>(truncated) / static_cast<double>(replicas) : 0.0;
  }
};

/// Mean and standard error of per-replica samples, folded in index order.
McEstimate summarize(std::span<const double> samples);

/// Monte Carlo estimate of E[prod v^counters(t) | X(0) = start].
McEstimate mc_pgf(const ProcessSpec& spec, const MarkedSets& marks,
                  const MarkAssignment& values, const StartState& start, double t,
                  const McOptions& options);

/// Law of the counters at extinction, estimated from replicas run without a
/// horizon. Replicas that exceed max_pop are reported as escaped.
struct ExtinctionCounts {
  std::size_t replicas = 0;
  std::size_t absorbed = 0;
  std::size_t escaped = 0;
  std::uint64_t seed = 0;
  std::map<std::vector<std::uint64_t>, std::uint64_t> counts;  // absorbed replicas only

  /// Empirical probability of a counter vector among absorbed replicas.
  double pmf(const std::vector<std::uint64_t>& counters) const;

  McEstimate absorbed_fraction() const;

  /// Mean over all replicas of 1{absorbed} prod v^counters: estimates the
  /// marked root q(v) itself.
  McEstimate pgf(const MarkAssignment& values) const;

  /// Mean over absorbed replicas only: estimates E[prod v^counters | tau < inf].
  McEstimate conditional_pgf(const MarkAssignment& values) const;
};

ExtinctionCounts mc_extinction_counts(const ProcessSpec& spec, const MarkedSets& marks,
                                      const StartState& start, const McOptions& options);

}  // namespace mbranch
