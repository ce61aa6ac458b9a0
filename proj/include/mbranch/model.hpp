#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mbranch {

/// Offspring counts per type; length equals the dimension of the spec.
using OffspringVector = std::vector<std::uint32_t>;

struct Offspring {
  OffspringVector j;
  double p = 0.0;

  friend bool operator==(const Offspring&, const Offspring&) = default;
};

/// Split rate and finitely supported offspring distribution of one type.
struct TypeLaw {
  double theta = 0.0;
  std::vector<Offspring> offspring;

  friend bool operator==(const TypeLaw&, const TypeLaw&) = default;
};

/// A validated d-type Markov branching specification.
///
/// Offspring lists are stored sorted lexicographically by vector, so two
/// specs describing the same law compare equal regardless of input order.
/// The "no change" split e_k is never part of a law; its rate -theta_k is
/// implied.
class ProcessSpec {
 public:
  std::size_t dim() const noexcept { return laws_.size(); }
  const TypeLaw& law(std::size_t k) const { return laws_.at(k); }
  const std::vector<TypeLaw>& laws() const noexcept { return laws_; }
  double theta(std::size_t k) const { return laws_.at(k).theta; }
  double theta_max() const noexcept;
  double theta_sum() const noexcept;

  /// Transition rate b^{(k)}_j: theta_k p_j on the support, -theta_k at e_k,
  /// zero elsewhere.
  double rate(std::size_t k, const OffspringVector& j) const;

  /// Index of j in law(k).offspring, if present.
  std::optional<std::size_t> find(std::size_t k, const OffspringVector& j) const;

  friend bool operator==(const ProcessSpec&, const ProcessSpec&) = default;

 private:
  friend ProcessSpec validate_spec(std::size_t d, std::vector<TypeLaw> laws);
  std::vector<TypeLaw> laws_;
};

/// Checks every law invariant and returns the canonical spec.
/// Throws Error(Validation) naming the offending law.
ProcessSpec validate_spec(std::size_t d, std::vector<TypeLaw> laws);

/// Per-type sets R_k of offspring vectors whose occurrences are counted.
class MarkedSets {
 public:
  MarkedSets() = default;

  static MarkedSets none(const ProcessSpec& spec);

  /// Throws Error(Validation) with a "marks[k][i]" path when a vector is
  /// outside law k's support, has the wrong length, or is repeated.
  static MarkedSets validate(const ProcessSpec& spec,
                             std::vector<std::vector<OffspringVector>> sets);

  std::size_t dim() const noexcept { return sets_.size(); }
  const std::vector<OffspringVector>& set(std::size_t k) const { return sets_.at(k); }
  const std::vector<std::vector<OffspringVector>>& sets() const noexcept { return sets_; }

  /// Total number of marked vectors over all types.
  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

  /// Flat slot of the first vector of set k; slots run type by type.
  std::size_t offset(std::size_t k) const { return offsets_.at(k); }

  std::optional<std::size_t> slot(std::size_t k, const OffspringVector& j) const;

  /// (type, vector) addressed by a flat slot.
  std::pair<std::size_t, const OffspringVector&> entry(std::size_t slot) const;

  friend bool operator==(const MarkedSets&, const MarkedSets&) = default;

 private:
  std::vector<std::vector<OffspringVector>> sets_;
  std::vector<std::size_t> offsets_;  // size dim()+1
};

using MarkKey = std::pair<std::size_t, OffspringVector>;

/// One value in [0,1] per marked vector, stored in MarkedSets slot order.
class MarkAssignment {
 public:
  MarkAssignment() = default;

  static MarkAssignment ones(const MarkedSets& marks);
  static MarkAssignment constant(const MarkedSets& marks, double value);
  static MarkAssignment from_values(const MarkedSets& marks, std::vector<double> values);

  /// Entries absent from `partial` get `fill`. Keys outside the sets throw.
  static MarkAssignment from_partial(const MarkedSets& marks,
                                     const std::map<MarkKey, double>& partial,
                                     double fill = 1.0);

  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t slot) const { return values_.at(slot); }
  std::size_t size() const noexcept { return values_.size(); }

  /// True when every value is strictly below one.
  bool all_below_one() const noexcept;

 private:
  std::vector<double> values_;
};

/// x^j with the convention 0^0 = 1.
double monomial(std::span<const double> x, const OffspringVector& j);

/// The generating functions of one (spec, marks, values) triple, with the
/// offspring weights p_j v_{k,j} folded in once.
///
/// offspring_pgf(k, x) is the marked offspring generating function
/// sum_j w_{k,j} x^j; value(k, x) = theta_k (offspring_pgf(k, x) - x_k) is
/// B_k(x, v) + Bbar_k(x).
class MarkedSystem {
 public:
  MarkedSystem(const ProcessSpec& spec, const MarkedSets& marks,
               const MarkAssignment& values);
  explicit MarkedSystem(const ProcessSpec& spec);

  std::size_t dim() const noexcept { return theta_.size(); }
  double theta(std::size_t k) const { return theta_[k]; }

  double offspring_pgf(std::size_t k, std::span<const double> x) const;
  double value(std::size_t k, std::span<const double> x) const;
  void drift(std::span<const double> x, std::span<double> out) const;

  /// Partial derivative of offspring_pgf(i, .) with respect to x_j.
  double offspring_pgf_derivative(std::size_t i, std::size_t j,
                                  std::span<const double> x) const;

 private:
  struct Term {
    OffspringVector j;
    double weight;
  };
  std::vector<double> theta_;
  std::vector<std::vector<Term>> terms_;
};

double gf_B(const ProcessSpec& spec, std::size_t k, std::span<const double> x);

double gf_B_marked(const ProcessSpec& spec, const MarkedSets& marks,
                   const MarkAssignment& values, std::size_t k,
                   std::span<const double> x);

/// Jacobian of B at a point together with its maximal real eigenvalue.
struct MeanMatrix {
  std::size_t dim = 0;
  std::vector<double> entries;  // row-major
  double rho = 0.0;

  double operator()(std::size_t i, std::size_t j) const { return entries[i * dim + j]; }
};

MeanMatrix jacobian(const ProcessSpec& spec, std::span<const double> x);

/// Maximal real eigenvalue of a row-major matrix with nonnegative
/// off-diagonal entries. Closed form for d <= 2, shifted power iteration
/// otherwise.
double max_eigenvalue(std::span<const double> entries, std::size_t dim);

enum class CriticalityClass { Subcritical, Critical, Supercritical };

struct Criticality {
  CriticalityClass kind = CriticalityClass::Subcritical;
  double rho_one = 0.0;
  double tol = 0.0;
};

constexpr double kDefaultCriticalityTol = 1e-10;

Criticality classify(const ProcessSpec& spec, double tol = kDefaultCriticalityTol);

const char* to_string(CriticalityClass kind) noexcept;

bool check_positive_regularity(const ProcessSpec& spec);

/// "(j1,...,jd)"
std::string format_vector(const OffspringVector& j);

}  // namespace mbranch
