#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mbranch/model.hpp"
#include "mbranch/oracle.hpp"

namespace mbranch {

/// A parsed configuration document.
///
/// Accepted layout:
///   {"d": 2,
///    "types": [{"theta": 1, "offspring": [{"j": [0,0], "p": 0.5}, ...]}, ...],
///    "marks": [[[0,0]], [[0,0]]]}
/// or {"builtin": {"name": "paper-example", "p": 0.5, "alpha": 0.5}, "marks": ...}.
/// "marks" is optional (no marks) and may also be one of the strings
/// "none", "pure-death", "twins".
struct Config {
  ProcessSpec spec;
  MarkedSets marks;
  std::optional<ExampleParams> builtin;
};

/// Throws Error(Parse) on malformed text and Error(Validation) naming the
/// offending field path otherwise.
Config parse_config(std::string_view text);

/// Reads a file; "-" reads standard input. Throws Error(Io) if unreadable.
Config load_config(const std::string& path);

/// Canonical serialization of an explicit spec and its marks: sorted keys,
/// sorted offspring and marks, 17 significant digits. A builtin and its
/// expansion serialize identically.
std::string canonical_json(const ProcessSpec& spec, const MarkedSets& marks);

/// Parses "TYPE:(j1,...,jd)=VALUE;..." with 1-based TYPE into 0-based keys.
std::map<MarkKey, double> parse_mark_values(std::string_view text, std::size_t dim);

enum class MissingMarks { AssignOne, Reject };

/// Builds a full assignment from the grammar. Unmentioned marked vectors are
/// set to one or rejected according to `missing`.
MarkAssignment assign_mark_values(const MarkedSets& marks, std::string_view text,
                                  MissingMarks missing);

}  // namespace mbranch
