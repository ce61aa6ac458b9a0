#include "mbranch/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mbranch/error.hpp"
#include "mbranch/json_format.hpp"
#include "mbranch/pgf.hpp"

namespace mbranch {

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  fail(ErrorCode::Validation, path + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) bad_field(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) bad_field(path, "expected a number");
  return v.get<double>();
}

std::uint64_t as_count(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) bad_field(path, "expected a nonnegative integer");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && std::floor(d) == d && d < 4294967296.0) return static_cast<std::uint64_t>(d);
  }
  bad_field(path, "expected a nonnegative integer");
}

OffspringVector as_vector(const json& v, const std::string& path) {
  if (!v.is_array()) bad_field(path, "expected an array of nonnegative integers");
  OffspringVector out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::uint64_t c = as_count(v[i], path + "[" + std::to_string(i) + "]");
    if (c > 0xffffffffULL) bad_field(path, "offspring count too large");
    out.push_back(static_cast<std::uint32_t>(c));
  }
  return out;
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) bad_field(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
  }
}

ProcessSpec parse_explicit(const json& doc) {
  const std::uint64_t d = as_count(require(doc, "d", ""), "d");
  const json& types = require(doc, "types", "");
  if (!types.is_array()) bad_field("types", "expected an array");
  std::vector<TypeLaw> laws;
  for (std::size_t k = 0; k < types.size(); ++k) {
    const std::string path = "types[" + std::to_string(k) + "]";
    const json& t = types[k];
    if (!t.is_object()) bad_field(path, "expected an object");
    check_keys(t, path, {"theta", "offspring"});
    TypeLaw law;
    law.theta = as_number(require(t, "theta", path), path + ".theta");
    const json& offspring = require(t, "offspring", path);
    if (!offspring.is_array()) bad_field(path + ".offspring", "expected an array");
    for (std::size_t n = 0; n < offspring.size(); ++n) {
      const std::string opath = path + ".offspring[" + std::to_string(n) + "]";
      const json& o = offspring[n];
      if (!o.is_object()) bad_field(opath, "expected an object");
      check_keys(o, opath, {"j", "p"});
      Offspring entry;
      entry.j = as_vector(require(o, "j", opath), opath + ".j");
      entry.p = as_number(require(o, "p", opath), opath + ".p");
      law.offspring.push_back(std::move(entry));
    }
    laws.push_back(std::move(law));
  }
  return validate_spec(static_cast<std::size_t>(d), std::move(laws));
}

MarkedSets parse_marks(const json* node, const ProcessSpec& spec) {
  if (node == nullptr) return MarkedSets::none(spec);
  if (node->is_string()) {
    const std::string name = node->get<std::string>();
    if (name == "none") return MarkedSets::none(spec);
    if (name == "pure-death") return pure_death_marks(spec);
    if (name == "twins") return twins_marks(spec);
    bad_field("marks", "unknown preset \"" + name + "\" (expected none, pure-death or twins)");
  }
  if (!node->is_array()) bad_field("marks", "expected an array of per-type vector lists");
  std::vector<std::vector<OffspringVector>> sets;
  for (std::size_t k = 0; k < node->size(); ++k) {
    const std::string path = "marks[" + std::to_string(k) + "]";
    const json& s = (*node)[k];
    if (!s.is_array()) bad_field(path, "expected an array of offspring vectors");
    std::vector<OffspringVector> set;
    for (std::size_t i = 0; i < s.size(); ++i) {
      set.push_back(as_vector(s[i], path + "[" + std::to_string(i) + "]"));
    }
    sets.push_back(std::move(set));
  }
  return MarkedSets::validate(spec, std::move(sets));
}

}  // namespace

Config parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::Parse, "config must be a JSON object");
  check_keys(doc, "", {"d", "types", "marks", "builtin"});

  Config cfg;
  if (doc.contains("builtin")) {
    if (doc.contains("types") || doc.contains("d")) {
      bad_field("builtin", "builtin and an explicit d/types spec are mutually exclusive");
    }
    const json& b = doc["builtin"];
    if (!b.is_object()) bad_field("builtin", "expected an object");
    check_keys(b, "builtin", {"name", "p", "alpha"});
    const json& name = require(b, "name", "builtin");
    if (!name.is_string() || name.get<std::string>() != "paper-example") {
      bad_field("builtin.name", "unknown builtin (available: paper-example)");
    }
    cfg.builtin = example_params(as_number(require(b, "p", "builtin"), "builtin.p"),
                                 as_number(require(b, "alpha", "builtin"), "builtin.alpha"));
    cfg.spec = example_spec(*cfg.builtin);
  } else {
    cfg.spec = parse_explicit(doc);
  }
  auto marks = doc.find("marks");
  cfg.marks = parse_marks(marks == doc.end() ? nullptr : &*marks, cfg.spec);
  return cfg;
}

Config load_config(const std::string& path) {
  std::string text;
  if (path == "-") {
    text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot read config file " + path);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return parse_config(text);
}

std::string canonical_json(const ProcessSpec& spec, const MarkedSets& marks) {
  json doc = json::object();
  doc["d"] = spec.dim();
  json types = json::array();
  for (const TypeLaw& law : spec.laws()) {
    json offspring = json::array();
    for (const Offspring& o : law.offspring) offspring.push_back({{"j", o.j}, {"p", o.p}});
    types.push_back({{"theta", law.theta}, {"offspring", offspring}});
  }
  doc["types"] = std::move(types);
  json m = json::array();
  for (const auto& set : marks.sets()) m.push_back(set);
  doc["marks"] = std::move(m);
  return dump_json(doc);
}

std::map<MarkKey, double> parse_mark_values(std::string_view text, std::size_t dim) {
  std::map<MarkKey, double> out;
  const auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  const auto parse_uint = [&](std::string_view s, const std::string& what) {
    s = trim(s);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      fail(ErrorCode::Parse, "values: bad " + what + " \"" + std::string(s) + "\"");
    }
    return v;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(';', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view item = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (item.empty()) continue;

    const std::string entry(item);
    const std::size_t colon = item.find(':');
    const std::size_t open = item.find('(');
    const std::size_t close = item.find(')');
    const std::size_t eq = item.find('=');
    if (colon == std::string_view::npos || open == std::string_view::npos ||
        close == std::string_view::npos || eq == std::string_view::npos || !(colon < open) ||
        !(open < close) || !(close < eq) || !trim(item.substr(colon + 1, open - colon - 1)).empty() ||
        !trim(item.substr(close + 1, eq - close - 1)).empty()) {
      fail(ErrorCode::Parse, "values: expected TYPE:(j1,...,jd)=VALUE, got \"" + entry + "\"");
    }
    const std::uint64_t type = parse_uint(item.substr(0, colon), "type index");
    if (type < 1 || type > dim) {
      fail(ErrorCode::Parse, "values: type index in \"" + entry + "\" must lie in 1.." +
                                 std::to_string(dim));
    }
    OffspringVector j;
    std::string_view inner = item.substr(open + 1, close - open - 1);
    while (true) {
      const std::size_t comma = inner.find(',');
      j.push_back(static_cast<std::uint32_t>(parse_uint(inner.substr(0, comma), "offspring count")));
      if (comma == std::string_view::npos) break;
      inner.remove_prefix(comma + 1);
    }
    if (j.size() != dim) {
      fail(ErrorCode::Parse, "values: vector in \"" + entry + "\" has length " +
                                 std::to_string(j.size()) + ", expected " + std::to_string(dim));
    }
    const std::string number(trim(item.substr(eq + 1)));
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(number, &used);
      if (used != number.size()) throw std::invalid_argument(number);
    } catch (const std::exception&) {
      fail(ErrorCode::Parse, "values: bad number in \"" + entry + "\"");
    }
    MarkKey key{static_cast<std::size_t>(type - 1), std::move(j)};
    if (!out.emplace(std::move(key), value).second) {
      fail(ErrorCode::Parse, "values: \"" + entry + "\" assigns a vector twice");
    }
  }
  return out;
}

MarkAssignment assign_mark_values(const MarkedSets& marks, std::string_view text,
                                  MissingMarks missing) {
  const auto partial = parse_mark_values(text, marks.dim());
  if (missing == MissingMarks::Reject) {
    for (std::size_t s = 0; s < marks.size(); ++s) {
      auto [k, j] = marks.entry(s);
      if (!partial.count(MarkKey{k, j})) {
        fail(ErrorCode::Validation, "values: no value given for " + std::to_string(k + 1) + ":" +
                                        format_vector(j));
      }
    }
  }
  return MarkAssignment::from_partial(marks, partial, 1.0);
}

}  // namespace mbranch
