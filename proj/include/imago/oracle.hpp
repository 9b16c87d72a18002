#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "imago/context.hpp"
#include "imago/inference.hpp"
#include "imago/model.hpp"

namespace imago {

struct ScoredContext {
  Context context;
  double merit = 0.0;
};

/// Ground truth for the search: every acceptable context with its exact
/// merit, sorted per direction (ties: fewer dependencies, then canonical key,
/// mirroring the search's open-list tie-break).
struct OracleResult {
  std::vector<ScoredContext> contexts;
  std::size_t examined = 0;
  std::size_t accepted = 0;
};

/// Exhaustively sweeps dependency subsets of size <= max_deps. Subsets with a
/// repeated consequent are pruned during recursion; consistency requires
/// distinct consequents, so nothing acceptable is lost. Each surviving subset
/// induces T from the query attributes plus everything the dependencies
/// mention, then faces the full predicate battery.
inline OracleResult enumerate_contexts(const DependencyPool& pool, const Query& query,
                                       std::size_t max_deps, bool allow_large = false) {
  validate_query(pool, query);
  if (pool.dependencies().size() > 20 && !allow_large) {
    throw PoolTooLarge("pool has " + std::to_string(pool.dependencies().size()) +
                       " dependencies; exhaustive enumeration is guarded at 20");
  }

  std::vector<const Dependency*> deps;
  for (const auto& [id, dep] : pool.dependencies()) deps.push_back(&dep);

  OracleResult result;
  std::vector<const Dependency*> chosen;
  std::set<std::string> used_consequents;

  auto evaluate = [&]() {
    result.examined++;
    Context context;
    context.attrs.insert(query.target_attribute);
    for (const auto& [attr, value] : query.evidence.bindings) context.attrs.insert(attr);
    for (const Dependency* d : chosen) {
      context.deps.insert(d->id);
      context.attrs.insert(d->consequent);
      context.attrs.insert(d->antecedents.begin(), d->antecedents.end());
    }
    if (!is_consistent(pool, context)) return;
    if (!is_sufficient(pool, context, query).sufficient) return;
    if (!evidence_possible(pool, context, query.evidence)) return;
    if (!is_minimal(pool, context, query)) return;
    result.accepted++;
    result.contexts.push_back({context, conditional_probability(pool, context, query)});
  };

  std::function<void(std::size_t)> sweep = [&](std::size_t at) {
    if (at == deps.size()) {
      if (!chosen.empty()) evaluate();
      return;
    }
    sweep(at + 1);
    const Dependency* d = deps[at];
    if (chosen.size() < max_deps && !used_consequents.count(d->consequent)) {
      chosen.push_back(d);
      used_consequents.insert(d->consequent);
      sweep(at + 1);
      chosen.pop_back();
      used_consequents.erase(d->consequent);
    }
  };
  sweep(0);

  const bool maximize = query.direction == Direction::maximize;
  std::sort(result.contexts.begin(), result.contexts.end(),
            [maximize](const ScoredContext& a, const ScoredContext& b) {
              if (a.merit != b.merit) return maximize ? a.merit > b.merit : a.merit < b.merit;
              if (a.context.deps.size() != b.context.deps.size()) {
                return a.context.deps.size() < b.context.deps.size();
              }
              return canonical_key(a.context) < canonical_key(b.context);
            });
  return result;
}

}  // namespace imago
