#pragma once

#include <algorithm>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "imago/context.hpp"
#include "imago/inference.hpp"
#include "imago/model.hpp"

namespace imago {

/// A partially constructed context <t, r>. attrs always equals the start
/// attributes plus every attribute mentioned by the chosen dependencies, and
/// no two chosen dependencies share a consequent.
///
/// priority is the admissible bound W for partial states and the exact merit
/// F for goal states, so the open list pops goals in rank order.
struct SearchState {
  std::set<std::string> attrs;
  std::set<std::string> deps;
  double priority = 0.0;
  bool goal = false;
  std::string key;

  Context to_context() const { return Context{attrs, deps}; }
};

struct SearchStats {
  std::size_t expansions = 0;
  std::size_t generated = 0;
};

/// One emitted hypothesis: rank (1-based), the context, its exact merit, and
/// the search effort spent up to its emission.
struct RankedContext {
  int rank = 0;
  Context context;
  double merit = 0.0;
  SearchStats stats;
};

struct ImagineResult {
  std::vector<RankedContext> results;
  SearchStats stats;
  bool limit_hit = false;
};

/// Expansion log entry for admissibility instrumentation.
struct ExpandedState {
  std::set<std::string> deps;
  double bound = 0.0;
  bool goal = false;
};
using SearchTrace = std::vector<ExpandedState>;

/// A state is a goal once it already is an acceptable context: consistent,
/// sufficient for the query, and able to explain the evidence.
inline bool goal_test(const DependencyPool& pool, const Query& query,
                      const SearchState& state) {
  const Context context = state.to_context();
  return is_consistent(pool, context) &&
         is_sufficient(pool, context, query).sufficient &&
         evidence_possible(pool, context, query.evidence);
}

namespace detail {

/// Extremal CPT entry for the target value over all rows of `dep`.
inline double extremal_row_entry(const DependencyPool& pool, const Dependency& dep,
                                 const Query& query) {
  const std::size_t v = pool.attribute(query.target_attribute).index_of(query.target_value);
  double best = dep.cpt.front()[v];
  for (const auto& row : dep.cpt) {
    if (query.direction == Direction::maximize) {
      best = std::max(best, row[v]);
    } else {
      best = std::min(best, row[v]);
    }
  }
  return best;
}

}  // namespace detail

/// Optimistic bound on the merit of every completion of the state. Once some
/// chosen dependency closes the target only its rows matter; before that,
/// any target dependency in the pool could end up selected, so all of them
/// are scanned. Goal states get their exact merit. The bound never
/// underestimates (maximize) / overestimates (minimize) any completion:
/// F(S) is a convex combination of the rows of S's target dependency.
inline double heuristic_bound(const DependencyPool& pool, const Query& query,
                              const SearchState& state) {
  if (goal_test(pool, query, state)) {
    return conditional_probability(pool, state.to_context(), query);
  }
  for (const std::string& id : state.deps) {
    const Dependency& d = pool.dependency(id);
    if (d.consequent == query.target_attribute) {
      return detail::extremal_row_entry(pool, d, query);
    }
  }
  bool found = false;
  double best = 0.0;
  for (const auto& [id, dep] : pool.dependencies()) {
    if (dep.consequent != query.target_attribute) continue;
    const double w = detail::extremal_row_entry(pool, dep, query);
    best = found ? (query.direction == Direction::maximize ? std::max(best, w)
                                                           : std::min(best, w))
                 : w;
    found = true;
  }
  if (!found) {
    throw NoTargetDependency("no dependency has consequent '" + query.target_attribute + "'");
  }
  return best;
}

/// One successor per admissible dependency: its consequent must already be
/// known to the state (in t or among chosen antecedents) and not yet closed
/// by another chosen dependency. Ordered by dependency id.
inline std::vector<SearchState> successors(const DependencyPool& pool, const Query& query,
                                           const SearchState& state) {
  const std::set<std::string> closed = conseq_star(pool, state.deps);
  std::set<std::string> known = state.attrs;
  const std::set<std::string> ants = antec_star(pool, state.deps);
  known.insert(ants.begin(), ants.end());

  std::vector<SearchState> out;
  for (const auto& [id, dep] : pool.dependencies()) {
    if (!known.count(dep.consequent) || closed.count(dep.consequent)) continue;
    SearchState next;
    next.attrs = state.attrs;
    next.attrs.insert(dep.consequent);
    next.attrs.insert(dep.antecedents.begin(), dep.antecedents.end());
    next.deps = state.deps;
    next.deps.insert(id);
    next.key = canonical_key(next.to_context());
    next.goal = goal_test(pool, query, next);
    next.priority = next.goal ? conditional_probability(pool, next.to_context(), query)
                              : heuristic_bound(pool, query, next);
    out.push_back(std::move(next));
  }
  return out;
}

/// Best-first synthesis of ranked contexts. States are ordered by priority
/// (descending for maximize, ascending for minimize; ties prefer fewer
/// dependencies, then the smaller canonical key). Because goal priorities are
/// exact merits and partial-state priorities are admissible bounds, the first
/// emitted goal is globally optimal, the second is second best, and so on.
/// Non-minimal goals are discarded; their minimal cores arrive by other
/// expansion chains. Duplicate dependency sets are merged by canonical key.
inline ImagineResult imagine(const DependencyPool& pool, const Query& query,
                             SearchTrace* trace = nullptr) {
  validate_query(pool, query);

  bool target_covered = false;
  std::set<std::string> covered;
  for (const auto& [id, dep] : pool.dependencies()) {
    covered.insert(dep.consequent);
    if (dep.consequent == query.target_attribute) target_covered = true;
  }
  if (!target_covered) {
    throw NoTargetDependency("no dependency has consequent '" + query.target_attribute + "'");
  }
  for (const auto& [attr, value] : query.evidence.bindings) {
    if (!covered.count(attr)) {
      throw UnexplainableEvidence("constraining attribute '" + attr +
                                  "' is no dependency's consequent");
    }
  }

  const bool maximize = query.direction == Direction::maximize;
  auto worse = [maximize](const SearchState& a, const SearchState& b) {
    if (a.priority != b.priority) {
      return maximize ? a.priority < b.priority : a.priority > b.priority;
    }
    if (a.deps.size() != b.deps.size()) return a.deps.size() > b.deps.size();
    return a.key > b.key;
  };
  std::priority_queue<SearchState, std::vector<SearchState>, decltype(worse)> open(worse);

  ImagineResult result;
  SearchState start;
  start.attrs.insert(query.target_attribute);
  for (const auto& [attr, value] : query.evidence.bindings) start.attrs.insert(attr);
  start.key = canonical_key(start.to_context());
  start.goal = false;  // an empty R never closes the target
  start.priority = heuristic_bound(pool, query, start);

  std::set<std::string> seen{start.key};
  open.push(std::move(start));
  result.stats.generated = 1;

  while (!open.empty() &&
         result.results.size() < static_cast<std::size_t>(query.top_k)) {
    if (result.stats.expansions >= query.limits.max_expansions) {
      result.limit_hit = true;
      break;
    }
    const SearchState state = open.top();
    open.pop();
    result.stats.expansions++;
    if (trace) trace->push_back({state.deps, state.priority, state.goal});

    if (state.goal) {
      const Context context = state.to_context();
      if (is_minimal(pool, context, query)) {
        // Re-assert the acceptability predicates on everything emitted.
        if (!is_consistent(pool, context) ||
            !is_sufficient(pool, context, query).sufficient ||
            !evidence_possible(pool, context, query.evidence)) {
          throw Error("emitted context failed re-validation: " + canonical_key(context));
        }
        result.results.push_back({static_cast<int>(result.results.size()) + 1, context,
                                  state.priority, result.stats});
      }
      continue;  // a consistent context admits no further dependency
    }

    for (SearchState& next : successors(pool, query, state)) {
      if (query.limits.max_context_deps &&
          next.deps.size() > *query.limits.max_context_deps) {
        continue;
      }
      if (seen.insert(next.key).second) {
        result.stats.generated++;
        open.push(std::move(next));
      }
    }
  }
  return result;
}

}  // namespace imago
