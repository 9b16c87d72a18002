#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "imago/errors.hpp"

namespace imago {

/// Tolerance for "each CPT row sums to one".
inline constexpr double kRowSumTolerance = 1e-9;

/// A discrete domain variable with a finite ordered value domain.
struct Attribute {
  std::string name;
  std::vector<std::string> values;

  std::size_t index_of(const std::string& value) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] == value) return i;
    }
    throw UnknownValue("attribute '" + name + "' has no value '" + value + "'");
  }

  bool has_value(const std::string& value) const {
    return std::find(values.begin(), values.end(), value) != values.end();
  }

  bool operator==(const Attribute&) const = default;
};

/// One context-invariant conditional probability table
/// P[consequent | antecedents], tagged with the context it was learnt in.
/// An empty antecedent list makes it a prior.
///
/// cpt[row][v] is P(consequent = values[v] | antecedent row), where rows are
/// ranked mixed-radix over the antecedent value indices with the first
/// antecedent as the most significant digit.
struct Dependency {
  std::string id;
  std::string context_label;
  std::string consequent;
  std::vector<std::string> antecedents;
  std::vector<std::vector<double>> cpt;

  bool is_prior() const { return antecedents.empty(); }

  bool operator==(const Dependency&) const = default;
};

/// Severity-free description of one pool invariant violation, so callers can
/// either fail fast (load) or report everything at once (validate).
struct Violation {
  enum class Kind {
    malformed,
    unknown_attribute,
    unknown_value,
    bad_distribution,
    duplicate_id,
  };
  Kind kind;
  std::string message;
};

[[noreturn]] inline void throw_violation(const Violation& v) {
  switch (v.kind) {
    case Violation::Kind::unknown_attribute: throw UnknownAttribute(v.message);
    case Violation::Kind::unknown_value: throw UnknownValue(v.message);
    case Violation::Kind::bad_distribution: throw BadDistribution(v.message);
    case Violation::Kind::duplicate_id: throw DuplicateId(v.message);
    case Violation::Kind::malformed: break;
  }
  throw MalformedInput(v.message);
}

/// Checks every model invariant of a prospective pool. Returns all problems
/// found; an empty result means the pool is well formed.
inline std::vector<Violation> collect_violations(
    const std::vector<Attribute>& attributes,
    const std::vector<Dependency>& dependencies) {
  using K = Violation::Kind;
  std::vector<Violation> out;
  std::map<std::string, const Attribute*> by_name;

  for (const Attribute& a : attributes) {
    if (a.name.empty()) {
      out.push_back({K::malformed, "attribute with empty name"});
      continue;
    }
    if (by_name.count(a.name)) {
      out.push_back({K::malformed, "attribute '" + a.name + "' declared twice"});
      continue;
    }
    if (a.values.size() < 2) {
      out.push_back({K::malformed,
                     "attribute '" + a.name + "' needs at least 2 values, has " +
                         std::to_string(a.values.size())});
    }
    std::set<std::string> seen;
    for (const std::string& v : a.values) {
      if (!seen.insert(v).second) {
        out.push_back({K::malformed,
                       "attribute '" + a.name + "' repeats value '" + v + "'"});
      }
    }
    by_name.emplace(a.name, &a);
  }

  std::set<std::string> ids;
  for (const Dependency& d : dependencies) {
    if (d.id.empty()) {
      out.push_back({K::malformed, "dependency with empty id"});
      continue;
    }
    if (!ids.insert(d.id).second) {
      out.push_back({K::duplicate_id, "duplicate dependency id '" + d.id + "'"});
      continue;
    }

    bool resolvable = true;
    auto check_attr = [&](const std::string& name) {
      if (!by_name.count(name)) {
        out.push_back({K::unknown_attribute,
                       "dependency '" + d.id + "' references undeclared attribute '" +
                           name + "'"});
        resolvable = false;
      }
    };
    check_attr(d.consequent);
    std::set<std::string> ants;
    for (const std::string& a : d.antecedents) {
      check_attr(a);
      if (!ants.insert(a).second) {
        out.push_back({K::malformed,
                       "dependency '" + d.id + "' repeats antecedent '" + a + "'"});
      }
    }
    if (ants.count(d.consequent)) {
      out.push_back({K::malformed,
                     "dependency '" + d.id + "' lists its consequent '" +
                         d.consequent + "' as an antecedent"});
    }
    if (!resolvable) continue;

    std::size_t rows = 1;
    for (const std::string& a : d.antecedents) rows *= by_name.at(a)->values.size();
    const std::size_t width = by_name.at(d.consequent)->values.size();

    if (d.cpt.size() != rows) {
      out.push_back({K::bad_distribution,
                     "dependency '" + d.id + "' has " + std::to_string(d.cpt.size()) +
                         " cpt rows, expected " + std::to_string(rows)});
      continue;
    }
    for (std::size_t r = 0; r < d.cpt.size(); ++r) {
      const auto& row = d.cpt[r];
      if (row.size() != width) {
        out.push_back({K::bad_distribution,
                       "dependency '" + d.id + "' row " + std::to_string(r) +
                           " has " + std::to_string(row.size()) +
                           " entries, expected " + std::to_string(width)});
        continue;
      }
      double sum = 0.0;
      bool in_range = true;
      for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0)) in_range = false;
        sum += p;
      }
      if (!in_range) {
        out.push_back({K::bad_distribution,
                       "dependency '" + d.id + "' row " + std::to_string(r) +
                           " has a probability outside [0,1]"});
      } else if (std::abs(sum - 1.0) > kRowSumTolerance) {
        std::ostringstream msg;
        msg << "dependency '" << d.id << "' row " << r << " sums to " << sum
            << ", expected 1";
        out.push_back({K::bad_distribution, msg.str()});
      }
    }
  }
  return out;
}

/// The domain relation D: every attribute plus every dependency learnt from
/// every contextual database. Immutable once constructed; construction
/// validates every invariant and throws the first violation found.
class DependencyPool {
 public:
  DependencyPool() = default;

  DependencyPool(std::vector<Attribute> attributes,
                 std::vector<Dependency> dependencies) {
    const auto problems = collect_violations(attributes, dependencies);
    if (!problems.empty()) throw_violation(problems.front());
    for (Attribute& a : attributes) {
      const std::string name = a.name;
      attributes_.emplace(name, std::move(a));
    }
    for (Dependency& d : dependencies) {
      const std::string id = d.id;
      dependencies_.emplace(id, std::move(d));
    }
  }

  const std::map<std::string, Attribute>& attributes() const { return attributes_; }
  const std::map<std::string, Dependency>& dependencies() const { return dependencies_; }

  bool has_attribute(const std::string& name) const { return attributes_.count(name) > 0; }
  bool has_dependency(const std::string& id) const { return dependencies_.count(id) > 0; }

  const Attribute& attribute(const std::string& name) const {
    auto it = attributes_.find(name);
    if (it == attributes_.end()) throw UnknownAttribute("unknown attribute '" + name + "'");
    return it->second;
  }

  const Dependency& dependency(const std::string& id) const {
    auto it = dependencies_.find(id);
    if (it == dependencies_.end()) throw UnknownDependency("unknown dependency '" + id + "'");
    return it->second;
  }

  bool operator==(const DependencyPool&) const = default;

 private:
  std::map<std::string, Attribute> attributes_;
  std::map<std::string, Dependency> dependencies_;
};

/// A set of attribute instantiations (houses E, the MAP result, and joint
/// assignment points).
struct Assignment {
  std::map<std::string, std::string> bindings;

  bool empty() const { return bindings.empty(); }
  bool binds(const std::string& attribute) const { return bindings.count(attribute) > 0; }

  const std::string& value(const std::string& attribute) const {
    auto it = bindings.find(attribute);
    if (it == bindings.end()) {
      throw UnknownAttribute("assignment does not bind attribute '" + attribute + "'");
    }
    return it->second;
  }

  bool operator==(const Assignment&) const = default;
};

inline void validate_assignment(const DependencyPool& pool, const Assignment& a) {
  for (const auto& [attr, value] : a.bindings) {
    const Attribute& decl = pool.attribute(attr);
    if (!decl.has_value(value)) {
      throw UnknownValue("attribute '" + attr + "' has no value '" + value + "'");
    }
  }
}

/// A hypothesized context <T, R>: an attribute set plus the dependency subset
/// chosen to govern it, resolved against a pool.
struct Context {
  std::set<std::string> attrs;
  std::set<std::string> deps;

  bool operator==(const Context&) const = default;
};

inline void validate_context(const DependencyPool& pool, const Context& c) {
  for (const std::string& a : c.attrs) pool.attribute(a);
  for (const std::string& id : c.deps) pool.dependency(id);
}

enum class Direction { maximize, minimize };

inline const char* to_string(Direction d) {
  return d == Direction::maximize ? "max" : "min";
}

struct SearchLimits {
  std::optional<std::size_t> max_context_deps;
  std::size_t max_expansions = 1'000'000;
};

/// What the imagining run is asked for: constraining evidence E, the desired
/// event d = d_l, the optimization direction, and how many ranked contexts.
struct Query {
  Assignment evidence;
  std::string target_attribute;
  std::string target_value;
  Direction direction = Direction::maximize;
  int top_k = 1;
  SearchLimits limits;
};

inline void validate_query(const DependencyPool& pool, const Query& q) {
  if (q.evidence.empty()) throw MalformedInput("query evidence must be non-empty");
  validate_assignment(pool, q.evidence);
  const Attribute& target = pool.attribute(q.target_attribute);
  if (!target.has_value(q.target_value)) {
    throw UnknownValue("attribute '" + q.target_attribute + "' has no value '" +
                       q.target_value + "'");
  }
  if (q.evidence.binds(q.target_attribute)) {
    throw MalformedInput("target attribute '" + q.target_attribute +
                         "' must not be bound by the evidence");
  }
  if (q.top_k < 1) throw MalformedInput("top_k must be positive");
}

// --- conseq*/antec* vocabulary ---------------------------------------------

inline std::set<std::string> conseq_star(const DependencyPool& pool,
                                         const std::set<std::string>& dep_ids) {
  std::set<std::string> out;
  for (const std::string& id : dep_ids) out.insert(pool.dependency(id).consequent);
  return out;
}

inline std::set<std::string> antec_star(const DependencyPool& pool,
                                        const std::set<std::string>& dep_ids) {
  std::set<std::string> out;
  for (const std::string& id : dep_ids) {
    const Dependency& d = pool.dependency(id);
    out.insert(d.antecedents.begin(), d.antecedents.end());
  }
  return out;
}

/// Deterministic search-state key: dependency ids sorted and joined by "|".
inline std::string canonical_key(const Context& c) {
  std::string out;
  for (const std::string& id : c.deps) {
    if (!out.empty()) out += '|';
    out += id;
  }
  return out;
}

// --- CPT addressing ---------------------------------------------------------

inline std::size_t cpt_row_count(const DependencyPool& pool, const Dependency& d) {
  std::size_t rows = 1;
  for (const std::string& a : d.antecedents) rows *= pool.attribute(a).values.size();
  return rows;
}

/// Rank of the CPT row selected by the given antecedent values. The first
/// antecedent is the most significant digit.
inline std::size_t cpt_row_index(const DependencyPool& pool, const Dependency& d,
                                 const std::map<std::string, std::string>& given) {
  std::size_t index = 0;
  for (const std::string& a : d.antecedents) {
    const Attribute& attr = pool.attribute(a);
    auto it = given.find(a);
    if (it == given.end()) {
      throw IncompleteAssignment("row lookup for dependency '" + d.id +
                                 "' is missing antecedent '" + a + "'");
    }
    index = index * attr.values.size() + attr.index_of(it->second);
  }
  return index;
}

/// Inverse of cpt_row_index: the antecedent values selecting the given row.
inline std::map<std::string, std::string> cpt_row_values(const DependencyPool& pool,
                                                         const Dependency& d,
                                                         std::size_t row) {
  std::map<std::string, std::string> out;
  for (auto it = d.antecedents.rbegin(); it != d.antecedents.rend(); ++it) {
    const Attribute& attr = pool.attribute(*it);
    out[*it] = attr.values[row % attr.values.size()];
    row /= attr.values.size();
  }
  return out;
}

inline double cpt_entry(const DependencyPool& pool, const Dependency& d,
                        const std::map<std::string, std::string>& given,
                        const std::string& consequent_value) {
  const std::size_t row = cpt_row_index(pool, d, given);
  const std::size_t v = pool.attribute(d.consequent).index_of(consequent_value);
  return d.cpt[row][v];
}

}  // namespace imago
