#pragma once

// Shared fixtures and hand-rolled random generators for the test suites.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "mbranch/model.hpp"
#include "mbranch/oracle.hpp"
#include "mbranch/pgf.hpp"

namespace mbtest {

using namespace mbranch;

inline ProcessSpec subcritical() { return example_spec(example_params(0.5, 0.5)); }
inline ProcessSpec supercritical() { return example_spec(example_params(0.2, 0.2)); }

inline TypeLaw law(double theta, std::vector<Offspring> offspring) {
  return TypeLaw{theta, std::move(offspring)};
}

/// Deterministic source of random specs, marks and points.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin(double p = 0.5) { return uniform() < p; }

  /// A valid spec of dimension d with 1..max_support offspring vectors per
  /// type, entries up to max_child, and random rates in [0.3, 3].
  ProcessSpec spec(std::size_t d, std::size_t max_support = 4, std::uint32_t max_child = 3) {
    std::vector<TypeLaw> laws(d);
    for (std::size_t k = 0; k < d; ++k) {
      laws[k].theta = uniform(0.3, 3.0);
      std::size_t available = 1;
      for (std::size_t i = 0; i < d; ++i) available *= max_child + 1;
      const std::size_t n = std::min(1 + index(max_support), available - 1);
      std::set<OffspringVector> seen;
      while (seen.size() < n) {
        OffspringVector j(d);
        for (auto& c : j) c = static_cast<std::uint32_t>(index(max_child + 1));
        // Keep vectors small on average so specs are not wildly supercritical.
        if (coin(0.3)) std::fill(j.begin(), j.end(), 0u);
        OffspringVector ek(d, 0);
        ek[k] = 1;
        if (j == ek) continue;
        seen.insert(j);
      }
      std::vector<double> w;
      for (std::size_t i = 0; i < n; ++i) w.push_back(uniform(0.05, 1.0));
      double total = 0.0;
      for (double v : w) total += v;
      std::size_t i = 0;
      double acc = 0.0;
      for (const auto& j : seen) {
        double p = w[i] / total;
        if (i + 1 == n) p = 1.0 - acc;  // exact sum
        acc += p;
        laws[k].offspring.push_back({j, p});
        ++i;
      }
    }
    return validate_spec(d, std::move(laws));
  }

  /// Each support vector is marked with probability 1/2.
  MarkedSets marks(const ProcessSpec& spec) {
    std::vector<std::vector<OffspringVector>> sets(spec.dim());
    for (std::size_t k = 0; k < spec.dim(); ++k) {
      for (const auto& o : spec.law(k).offspring) {
        if (coin()) sets[k].push_back(o.j);
      }
    }
    return MarkedSets::validate(spec, std::move(sets));
  }

  /// Values uniform on [lo, hi).
  MarkAssignment values(const MarkedSets& marks, double lo = 0.0, double hi = 1.0) {
    std::vector<double> v(marks.size());
    for (auto& x : v) x = uniform(lo, hi);
    return MarkAssignment::from_values(marks, std::move(v));
  }

  std::vector<double> point(std::size_t d, double lo = 0.0, double hi = 1.0) {
    std::vector<double> x(d);
    for (auto& v : x) v = uniform(lo, hi);
    return x;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Marks that contain at least one vector (needed for long-time limits).
inline MarkedSets nonempty_marks(Gen& g, const ProcessSpec& spec) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    MarkedSets m = g.marks(spec);
    if (m.size() > 0) return m;
  }
  std::vector<std::vector<OffspringVector>> sets(spec.dim());
  sets[0].push_back(spec.law(0).offspring.front().j);
  return MarkedSets::validate(spec, std::move(sets));
}

inline std::vector<double> ones(std::size_t d) { return std::vector<double>(d, 1.0); }

}  // namespace mbtest
