#include "mbranch/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mbranch/error.hpp"

namespace mbranch {

namespace {

constexpr double kProbabilitySumTol = 1e-12;
constexpr double kPowerIterationTol = 1e-12;
constexpr int kPowerIterationCap = 10000;

double ipow(double base, std::uint32_t exp) {
  double result = 1.0;
  while (exp != 0) {
    if (exp & 1u) result *= base;
    exp >>= 1;
    if (exp != 0) base *= base;
  }
  return result;
}

bool is_unit_vector(const OffspringVector& j, std::size_t k) {
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i] != (i == k ? 1u : 0u)) return false;
  }
  return true;
}

std::string law_path(std::size_t k) { return "types[" + std::to_string(k) + "]"; }

}  // namespace

double monomial(std::span<const double> x, const OffspringVector& j) {
  double result = 1.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i] != 0) result *= ipow(x[i], j[i]);
  }
  return result;
}

std::string format_vector(const OffspringVector& j) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (i) out << ',';
    out << j[i];
  }
  out << ')';
  return out.str();
}

// ---------------------------------------------------------------------------
// ProcessSpec

ProcessSpec validate_spec(std::size_t d, std::vector<TypeLaw> laws) {
  if (d == 0) fail(ErrorCode::Validation, "d: dimension must be at least 1");
  if (laws.size() != d) {
    fail(ErrorCode::Validation, "types: expected " + std::to_string(d) +
                                    " type laws, got " + std::to_string(laws.size()));
  }
  for (std::size_t k = 0; k < d; ++k) {
    TypeLaw& law = laws[k];
    const std::string path = law_path(k);
    if (!std::isfinite(law.theta) || law.theta <= 0.0) {
      fail(ErrorCode::Validation, path + ".theta: split rate must be positive and finite");
    }
    if (law.offspring.empty()) {
      fail(ErrorCode::Validation, path + ".offspring: law has no offspring vectors");
    }
    double total = 0.0;
    for (std::size_t n = 0; n < law.offspring.size(); ++n) {
      const Offspring& o = law.offspring[n];
      const std::string entry = path + ".offspring[" + std::to_string(n) + "]";
      if (o.j.size() != d) {
        fail(ErrorCode::Validation, entry + ".j: offspring vector has length " +
                                        std::to_string(o.j.size()) + ", expected " +
                                        std::to_string(d));
      }
      if (!(o.p > 0.0 && o.p <= 1.0)) {
        fail(ErrorCode::Validation, entry + ".p: probability must lie in (0,1]");
      }
      if (is_unit_vector(o.j, k)) {
        fail(ErrorCode::Validation,
             entry + ".j: the no-change split " + format_vector(o.j) +
                 " must not carry probability; drop it and rescale theta");
      }
      total += o.p;
    }
    if (std::abs(total - 1.0) > kProbabilitySumTol) {
      std::ostringstream msg;
      msg.precision(17);
      msg << path << ".offspring: probabilities sum to " << total << ", not 1";
      fail(ErrorCode::Validation, msg.str());
    }
    std::sort(law.offspring.begin(), law.offspring.end(),
              [](const Offspring& a, const Offspring& b) { return a.j < b.j; });
    auto dup = std::adjacent_find(
        law.offspring.begin(), law.offspring.end(),
        [](const Offspring& a, const Offspring& b) { return a.j == b.j; });
    if (dup != law.offspring.end()) {
      fail(ErrorCode::Validation,
           path + ".offspring: offspring vector " + format_vector(dup->j) + " listed twice");
    }
  }
  ProcessSpec spec;
  spec.laws_ = std::move(laws);
  return spec;
}

double ProcessSpec::theta_max() const noexcept {
  double m = 0.0;
  for (const auto& law : laws_) m = std::max(m, law.theta);
  return m;
}

double ProcessSpec::theta_sum() const noexcept {
  double s = 0.0;
  for (const auto& law : laws_) s += law.theta;
  return s;
}

std::optional<std::size_t> ProcessSpec::find(std::size_t k, const OffspringVector& j) const {
  const auto& offspring = law(k).offspring;
  auto it = std::lower_bound(offspring.begin(), offspring.end(), j,
                             [](const Offspring& o, const OffspringVector& v) { return o.j < v; });
  if (it == offspring.end() || it->j != j) return std::nullopt;
  return static_cast<std::size_t>(it - offspring.begin());
}

double ProcessSpec::rate(std::size_t k, const OffspringVector& j) const {
  const TypeLaw& l = law(k);
  if (j.size() == dim() && is_unit_vector(j, k)) return -l.theta;
  if (auto idx = find(k, j)) return l.theta * l.offspring[*idx].p;
  return 0.0;
}

// ---------------------------------------------------------------------------
// MarkedSets

MarkedSets MarkedSets::none(const ProcessSpec& spec) {
  return validate(spec, std::vector<std::vector<OffspringVector>>(spec.dim()));
}

MarkedSets MarkedSets::validate(const ProcessSpec& spec,
                                std::vector<std::vector<OffspringVector>> sets) {
  const std::size_t d = spec.dim();
  if (sets.size() != d) {
    fail(ErrorCode::Validation, "marks: expected " + std::to_string(d) +
                                    " marked sets, got " + std::to_string(sets.size()));
  }
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < sets[k].size(); ++i) {
      const auto& j = sets[k][i];
      const std::string path = "marks[" + std::to_string(k) + "][" + std::to_string(i) + "]";
      if (j.size() != d) {
        fail(ErrorCode::Validation, path + ": vector has length " + std::to_string(j.size()) +
                                        ", expected " + std::to_string(d));
      }
      if (!spec.find(k, j)) {
        fail(ErrorCode::Validation, path + ": " + format_vector(j) +
                                        " is not in the offspring support of type " +
                                        std::to_string(k + 1));
      }
      for (std::size_t prev = 0; prev < i; ++prev) {
        if (sets[k][prev] == j) {
          fail(ErrorCode::Validation, path + ": " + format_vector(j) + " marked twice");
        }
      }
    }
    std::sort(sets[k].begin(), sets[k].end());
  }
  MarkedSets out;
  out.sets_ = std::move(sets);
  out.offsets_.assign(d + 1, 0);
  for (std::size_t k = 0; k < d; ++k) {
    out.offsets_[k + 1] = out.offsets_[k] + out.sets_[k].size();
  }
  return out;
}

std::optional<std::size_t> MarkedSets::slot(std::size_t k, const OffspringVector& j) const {
  const auto& s = set(k);
  auto it = std::lower_bound(s.begin(), s.end(), j);
  if (it == s.end() || *it != j) return std::nullopt;
  return offsets_[k] + static_cast<std::size_t>(it - s.begin());
}

std::pair<std::size_t, const OffspringVector&> MarkedSets::entry(std::size_t slot) const {
  if (slot >= size()) fail(ErrorCode::InvalidArgument, "mark slot out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), slot);
  const auto k = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  return {k, sets_[k][slot - offsets_[k]]};
}

// ---------------------------------------------------------------------------
// MarkAssignment

MarkAssignment MarkAssignment::ones(const MarkedSets& marks) { return constant(marks, 1.0); }

MarkAssignment MarkAssignment::constant(const MarkedSets& marks, double value) {
  return from_values(marks, std::vector<double>(marks.size(), value));
}

MarkAssignment MarkAssignment::from_values(const MarkedSets& marks, std::vector<double> values) {
  if (values.size() != marks.size()) {
    fail(ErrorCode::InvalidArgument, "mark values: expected " + std::to_string(marks.size()) +
                                         " values, got " + std::to_string(values.size()));
  }
  for (std::size_t s = 0; s < values.size(); ++s) {
    if (!(values[s] >= 0.0 && values[s] <= 1.0)) {
      auto [k, j] = marks.entry(s);
      fail(ErrorCode::Validation, "mark value for " + std::to_string(k + 1) + ":" +
                                      format_vector(j) + " must lie in [0,1]");
    }
  }
  MarkAssignment out;
  out.values_ = std::move(values);
  return out;
}

MarkAssignment MarkAssignment::from_partial(const MarkedSets& marks,
                                            const std::map<MarkKey, double>& partial,
                                            double fill) {
  std::vector<double> values(marks.size(), fill);
  for (const auto& [key, v] : partial) {
    const auto& [k, j] = key;
    std::optional<std::size_t> s;
    if (k < marks.dim()) s = marks.slot(k, j);
    if (!s) {
      fail(ErrorCode::Validation, "mark value for " + std::to_string(k + 1) + ":" +
                                      format_vector(j) + " does not name a marked vector");
    }
    values[*s] = v;
  }
  return from_values(marks, std::move(values));
}

bool MarkAssignment::all_below_one() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v < 1.0; });
}

// ---------------------------------------------------------------------------
// MarkedSystem

MarkedSystem::MarkedSystem(const ProcessSpec& spec, const MarkedSets& marks,
                           const MarkAssignment& values) {
  const std::size_t d = spec.dim();
  if (marks.dim() != d) fail(ErrorCode::InvalidArgument, "marked sets do not match the spec");
  if (values.size() != marks.size()) {
    fail(ErrorCode::InvalidArgument, "mark values do not match the marked sets");
  }
  theta_.resize(d);
  terms_.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    const TypeLaw& law = spec.law(k);
    theta_[k] = law.theta;
    for (const Offspring& o : law.offspring) {
      double w = o.p;
      if (auto s = marks.slot(k, o.j)) w *= values[*s];
      terms_[k].push_back({o.j, w});
    }
  }
}

MarkedSystem::MarkedSystem(const ProcessSpec& spec)
    : MarkedSystem(spec, MarkedSets::none(spec), MarkAssignment{}) {}

double MarkedSystem::offspring_pgf(std::size_t k, std::span<const double> x) const {
  double sum = 0.0;
  for (const Term& t : terms_[k]) sum += t.weight * monomial(x, t.j);
  return sum;
}

double MarkedSystem::value(std::size_t k, std::span<const double> x) const {
  return theta_[k] * (offspring_pgf(k, x) - x[k]);
}

void MarkedSystem::drift(std::span<const double> x, std::span<double> out) const {
  for (std::size_t k = 0; k < theta_.size(); ++k) out[k] = value(k, x);
}

double MarkedSystem::offspring_pgf_derivative(std::size_t i, std::size_t j,
                                              std::span<const double> x) const {
  double sum = 0.0;
  for (const Term& t : terms_[i]) {
    if (t.j[j] == 0) continue;
    double m = t.weight * t.j[j] * ipow(x[j], t.j[j] - 1);
    for (std::size_t l = 0; l < t.j.size(); ++l) {
      if (l != j && t.j[l] != 0) m *= ipow(x[l], t.j[l]);
    }
    sum += m;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Generating functions and the mean matrix

double gf_B(const ProcessSpec& spec, std::size_t k, std::span<const double> x) {
  if (k >= spec.dim()) fail(ErrorCode::InvalidArgument, "type index out of range");
  if (x.size() != spec.dim()) fail(ErrorCode::InvalidArgument, "point has wrong dimension");
  return MarkedSystem(spec).value(k, x);
}

double gf_B_marked(const ProcessSpec& spec, const MarkedSets& marks,
                   const MarkAssignment& values, std::size_t k, std::span<const double> x) {
  if (k >= spec.dim()) fail(ErrorCode::InvalidArgument, "type index out of range");
  if (x.size() != spec.dim()) fail(ErrorCode::InvalidArgument, "point has wrong dimension");
  return MarkedSystem(spec, marks, values).value(k, x);
}

MeanMatrix jacobian(const ProcessSpec& spec, std::span<const double> x) {
  const std::size_t d = spec.dim();
  if (x.size() != d) fail(ErrorCode::InvalidArgument, "point has wrong dimension");
  MarkedSystem sys(spec);
  MeanMatrix m;
  m.dim = d;
  m.entries.resize(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double delta = i == j ? 1.0 : 0.0;
      m.entries[i * d + j] = sys.theta(i) * (sys.offspring_pgf_derivative(i, j, x) - delta);
    }
  }
  m.rho = max_eigenvalue(m.entries, d);
  return m;
}

double max_eigenvalue(std::span<const double> a, std::size_t d) {
  if (a.size() != d * d || d == 0) fail(ErrorCode::InvalidArgument, "matrix shape mismatch");
  if (d == 1) return a[0];
  if (d == 2) {
    const double half_trace = 0.5 * (a[0] + a[3]);
    const double half_gap = 0.5 * (a[0] - a[3]);
    return half_trace + std::sqrt(half_gap * half_gap + a[1] * a[2]);
  }

  // Shift to an entrywise nonnegative matrix; its Perron root minus the shift
  // is the wanted eigenvalue.
  double shift = 0.0;
  for (std::size_t i = 0; i < d; ++i) shift = std::max(shift, std::abs(a[i * d + i]));
  shift += 1.0;

  std::vector<double> v(d, 1.0 / static_cast<double>(d));
  std::vector<double> w(d);
  double lambda = 0.0;
  for (int it = 0; it < kPowerIterationCap; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = shift * v[i];
      for (std::size_t j = 0; j < d; ++j) s += a[i * d + j] * v[j];
      w[i] = s;
    }
    // Collatz-Wielandt bounds bracket the Perron root for a positive iterate.
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      norm += w[i];
      if (v[i] > 0.0) {
        lo = std::min(lo, w[i] / v[i]);
        hi = std::max(hi, w[i] / v[i]);
      }
    }
    lambda = norm;  // v sums to one
    double change = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double next = w[i] / norm;
      change += std::abs(next - v[i]);
      v[i] = next;
    }
    if (hi - lo <= kPowerIterationTol * std::max(1.0, hi) || change <= kPowerIterationTol) break;
  }
  return lambda - shift;
}

Criticality classify(const ProcessSpec& spec, double tol) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "criticality tolerance must be positive");
  const std::vector<double> one(spec.dim(), 1.0);
  const double rho = jacobian(spec, one).rho;
  Criticality c;
  c.rho_one = rho;
  c.tol = tol;
  if (rho > tol) {
    c.kind = CriticalityClass::Supercritical;
  } else if (std::abs(rho) <= tol) {
    c.kind = CriticalityClass::Critical;
  } else {
    c.kind = CriticalityClass::Subcritical;
  }
  return c;
}

const char* to_string(CriticalityClass kind) noexcept {
  switch (kind) {
    case CriticalityClass::Subcritical: return "subcritical";
    case CriticalityClass::Critical: return "critical";
    case CriticalityClass::Supercritical: return "supercritical";
  }
  return "unknown";
}

bool check_positive_regularity(const ProcessSpec& spec) {
  const std::size_t d = spec.dim();
  const std::vector<double> one(d, 1.0);
  const MeanMatrix n = jacobian(spec, one);

  // Only the sign pattern of (N + cI)^m matters; the shift makes every
  // diagonal entry positive.
  std::vector<char> base(d * d), power(d * d), next(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) base[i * d + j] = (i == j) || n(i, j) > 0.0;
  }
  power = base;
  for (std::size_t m = 1; m <= d; ++m) {
    if (std::all_of(power.begin(), power.end(), [](char c) { return c != 0; })) return true;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        char any = 0;
        for (std::size_t l = 0; l < d && !any; ++l) any = power[i * d + l] && base[l * d + j];
        next[i * d + j] = any;
      }
    }
    power.swap(next);
  }
  return false;
}

}  // namespace mbranch
