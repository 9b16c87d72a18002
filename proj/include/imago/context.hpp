#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "imago/model.hpp"

namespace imago {

/// An alternating attribute/dependency sequence v1, w1, v2, ..., w(k-1), vk.
/// attributes.size() == dependencies.size() + 1 and the sequence obeys the
/// four explanation-path conditions (see find_path).
struct Path {
  std::vector<std::string> attributes;
  std::vector<std::string> dependencies;

  bool operator==(const Path&) const = default;
};

/// Finds an explanation path from `from` to `to` inside the context, or
/// nothing if none exists. A valid path satisfies:
///   1. each hop's two attributes are the dependency's consequent and one of
///      its antecedents (exactly one endpoint is the consequent);
///   2. no attribute is the consequent of both its adjacent dependencies
///      (colliders are never traversed);
///   3. no attribute or dependency repeats;
///   4. the final attribute is not an antecedent of any dependency on the
///      path (so the path always enters it as a consequent).
///
/// Deterministic: candidate hops are explored in lexicographic
/// (dependency id, next attribute) order, depth first.
inline std::optional<Path> find_path(const DependencyPool& pool, const Context& context,
                                     const std::string& from, const std::string& to) {
  if (!context.attrs.count(from)) throw UnknownAttribute("'" + from + "' not in context");
  if (!context.attrs.count(to)) throw UnknownAttribute("'" + to + "' not in context");
  if (from == to) return std::nullopt;

  struct Hop {
    std::string dep;
    std::string next;
    bool to_consequent;  // next attribute is the dependency's consequent
  };

  std::set<std::string> used_attrs{from};
  std::set<std::string> used_deps;
  std::vector<std::string> attr_seq{from};
  std::vector<std::string> dep_seq;

  auto hops_from = [&](const std::string& at, bool arrived_via_consequent) {
    std::vector<Hop> hops;
    for (const std::string& id : context.deps) {
      if (used_deps.count(id)) continue;
      const Dependency& d = pool.dependency(id);
      if (d.consequent == at) {
        // Leaving through an antecedent; forbidden right after arriving as a
        // consequent (condition 2).
        if (arrived_via_consequent) continue;
        for (const std::string& a : d.antecedents) {
          if (!used_attrs.count(a)) hops.push_back({id, a, false});
        }
      } else if (std::find(d.antecedents.begin(), d.antecedents.end(), at) !=
                 d.antecedents.end()) {
        if (!used_attrs.count(d.consequent)) hops.push_back({id, d.consequent, true});
      }
    }
    std::sort(hops.begin(), hops.end(), [](const Hop& x, const Hop& y) {
      return std::tie(x.dep, x.next) < std::tie(y.dep, y.next);
    });
    return hops;
  };

  auto terminal_ok = [&]() {
    // Condition 4: `to` must not be an antecedent of any dependency used.
    for (const std::string& id : dep_seq) {
      const Dependency& d = pool.dependency(id);
      if (std::find(d.antecedents.begin(), d.antecedents.end(), to) !=
          d.antecedents.end()) {
        return false;
      }
    }
    return true;
  };

  std::function<bool(const std::string&, bool)> dfs =
      [&](const std::string& at, bool arrived_via_consequent) -> bool {
    for (const Hop& hop : hops_from(at, arrived_via_consequent)) {
      used_deps.insert(hop.dep);
      used_attrs.insert(hop.next);
      dep_seq.push_back(hop.dep);
      attr_seq.push_back(hop.next);

      bool found = false;
      if (hop.next == to) {
        // Either this is a valid terminal or the branch is dead: a path may
        // not pass through its own endpoint.
        found = hop.to_consequent && terminal_ok();
      } else {
        found = dfs(hop.next, hop.to_consequent);
      }
      if (found) return true;

      used_deps.erase(hop.dep);
      used_attrs.erase(hop.next);
      dep_seq.pop_back();
      attr_seq.pop_back();
    }
    return false;
  };

  if (dfs(from, false)) return Path{attr_seq, dep_seq};
  return std::nullopt;
}

/// Why a context failed the sufficiency test. The attribute field names the
/// offending constraining attribute (or the target).
struct SufficiencyFailure {
  enum class Kind {
    target_not_in_context,
    constraining_attribute_not_in_context,
    missing_target_dependency,
    constraining_attribute_not_consequent,
    unconnected_constraining_attribute,
    target_unconnected,
  };
  Kind kind;
  std::string attribute;

  bool operator==(const SufficiencyFailure&) const = default;
};

struct SufficiencyReport {
  bool sufficient = false;
  std::vector<SufficiencyFailure> failures;

  bool has(SufficiencyFailure::Kind kind) const {
    for (const auto& f : failures) {
      if (f.kind == kind) return true;
    }
    return false;
  }
};

/// The five sufficiency conditions: the target and every constraining
/// attribute are in T, each is some chosen dependency's consequent, every
/// constraining attribute connects by a path to the target or to another
/// constraining attribute, and the target connects to at least one of them.
/// Path existence is treated symmetrically (a path found in either direction
/// connects both ends).
inline SufficiencyReport is_sufficient(const DependencyPool& pool, const Context& context,
                                       const Query& query) {
  validate_context(pool, context);
  using Kind = SufficiencyFailure::Kind;
  SufficiencyReport report;

  const bool target_present = context.attrs.count(query.target_attribute) > 0;
  if (!target_present) {
    report.failures.push_back({Kind::target_not_in_context, query.target_attribute});
  }
  std::vector<std::string> present_evidence;
  for (const auto& [attr, value] : query.evidence.bindings) {
    if (context.attrs.count(attr)) {
      present_evidence.push_back(attr);
    } else {
      report.failures.push_back({Kind::constraining_attribute_not_in_context, attr});
    }
  }

  const std::set<std::string> consequents = conseq_star(pool, context.deps);
  if (!consequents.count(query.target_attribute)) {
    report.failures.push_back({Kind::missing_target_dependency, query.target_attribute});
  }
  for (const auto& [attr, value] : query.evidence.bindings) {
    if (!consequents.count(attr)) {
      report.failures.push_back({Kind::constraining_attribute_not_consequent, attr});
    }
  }

  if (target_present) {
    std::map<std::pair<std::string, std::string>, bool> memo;
    auto connected = [&](const std::string& a, const std::string& b) {
      auto key = std::minmax(a, b);
      auto it = memo.find(key);
      if (it != memo.end()) return it->second;
      const bool ok = find_path(pool, context, a, b).has_value() ||
                      find_path(pool, context, b, a).has_value();
      memo.emplace(key, ok);
      return ok;
    };

    bool target_reached = false;
    for (const std::string& e : present_evidence) {
      bool ok = connected(e, query.target_attribute);
      if (ok) target_reached = true;
      for (const std::string& other : present_evidence) {
        if (ok) break;
        if (other != e) ok = connected(e, other);
      }
      if (!ok) {
        report.failures.push_back({Kind::unconnected_constraining_attribute, e});
      }
    }
    if (!target_reached) {
      report.failures.push_back({Kind::target_unconnected, query.target_attribute});
    }
  }

  report.sufficient = report.failures.empty();
  return report;
}

/// True iff the context completely and consistently describes one joint
/// distribution: every attribute of T is the consequent of exactly one chosen
/// dependency (priors close the roots), every antecedent is inside T, and the
/// antecedent->consequent graph is acyclic so a chain-rule ordering exists.
inline bool is_consistent(const DependencyPool& pool, const Context& context) {
  validate_context(pool, context);

  std::map<std::string, int> closed_by;
  for (const std::string& id : context.deps) {
    const Dependency& d = pool.dependency(id);
    if (!context.attrs.count(d.consequent)) return false;
    closed_by[d.consequent]++;
    for (const std::string& a : d.antecedents) {
      if (!context.attrs.count(a)) return false;
    }
  }
  for (const std::string& attr : context.attrs) {
    auto it = closed_by.find(attr);
    if (it == closed_by.end() || it->second != 1) return false;
  }

  // Kahn over antecedent -> consequent edges.
  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> children;
  for (const std::string& attr : context.attrs) indegree[attr] = 0;
  for (const std::string& id : context.deps) {
    const Dependency& d = pool.dependency(id);
    for (const std::string& a : d.antecedents) {
      children[a].push_back(d.consequent);
      indegree[d.consequent]++;
    }
  }
  std::set<std::string> ready;
  for (const auto& [attr, deg] : indegree) {
    if (deg == 0) ready.insert(attr);
  }
  std::size_t emitted = 0;
  while (!ready.empty()) {
    const std::string attr = *ready.begin();
    ready.erase(ready.begin());
    ++emitted;
    for (const std::string& child : children[attr]) {
      if (--indegree[child] == 0) ready.insert(child);
    }
  }
  return emitted == context.attrs.size();
}

/// Deterministic topological order of a consistent context (lexicographic
/// tie-break, causes first). Throws InconsistentContext otherwise.
inline std::vector<std::string> topological_order(const DependencyPool& pool,
                                                  const Context& context) {
  if (!is_consistent(pool, context)) {
    throw InconsistentContext("context {" + canonical_key(context) +
                              "} is not a consistent distribution");
  }
  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> children;
  for (const std::string& attr : context.attrs) indegree[attr] = 0;
  for (const std::string& id : context.deps) {
    const Dependency& d = pool.dependency(id);
    for (const std::string& a : d.antecedents) {
      children[a].push_back(d.consequent);
      indegree[d.consequent]++;
    }
  }
  std::set<std::string> ready;
  for (const auto& [attr, deg] : indegree) {
    if (deg == 0) ready.insert(attr);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    const std::string attr = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(attr);
    for (const std::string& child : children[attr]) {
      if (--indegree[child] == 0) ready.insert(child);
    }
  }
  return order;
}

namespace detail {

/// The context left after dropping one dependency: surviving dependencies,
/// their attributes, and whatever the query pins (evidence attributes and the
/// target). Attributes orphaned by the removal fall out of T.
inline Context drop_dependency(const DependencyPool& pool, const Context& context,
                               const Query& query, const std::string& removed) {
  Context reduced;
  for (const std::string& id : context.deps) {
    if (id == removed) continue;
    reduced.deps.insert(id);
    const Dependency& d = pool.dependency(id);
    reduced.attrs.insert(d.consequent);
    reduced.attrs.insert(d.antecedents.begin(), d.antecedents.end());
  }
  reduced.attrs.insert(query.target_attribute);
  for (const auto& [attr, value] : query.evidence.bindings) reduced.attrs.insert(attr);
  return reduced;
}

}  // namespace detail

/// True iff every chosen dependency is load-bearing: removing any one of them
/// (with the attributes it alone carried) destroys sufficiency or consistency,
/// and no attribute of T floats free of every dependency.
inline bool is_minimal(const DependencyPool& pool, const Context& context,
                       const Query& query) {
  if (!is_consistent(pool, context) ||
      !is_sufficient(pool, context, query).sufficient) {
    throw PreconditionViolated("is_minimal requires a sufficient and consistent context");
  }

  std::set<std::string> mentioned;
  for (const std::string& id : context.deps) {
    const Dependency& d = pool.dependency(id);
    mentioned.insert(d.consequent);
    mentioned.insert(d.antecedents.begin(), d.antecedents.end());
  }
  for (const std::string& attr : context.attrs) {
    if (!mentioned.count(attr)) return false;
  }

  for (const std::string& id : context.deps) {
    const Context reduced = detail::drop_dependency(pool, context, query, id);
    if (is_consistent(pool, reduced) &&
        is_sufficient(pool, reduced, query).sufficient) {
      return false;
    }
  }
  return true;
}

}  // namespace imago
