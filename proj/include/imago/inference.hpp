#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "imago/context.hpp"
#include "imago/model.hpp"

namespace imago {

/// The chain-rule expansion of a consistent context: a topological order of T
/// and, per attribute, the one dependency that supplies its factor. CPT row
/// sums are re-checked here so no distribution reaches inference unvalidated.
class Factorization {
 public:
  static Factorization build(const DependencyPool& pool, const Context& context) {
    Factorization f;
    f.order_ = topological_order(pool, context);  // throws InconsistentContext
    for (const std::string& id : context.deps) {
      const Dependency& d = pool.dependency(id);
      for (const auto& row : d.cpt) {
        double sum = 0.0;
        for (double p : row) sum += p;
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
          throw BadDistribution("dependency '" + id + "' row no longer sums to 1");
        }
      }
      f.factor_.emplace(d.consequent, id);
    }
    return f;
  }

  const std::vector<std::string>& order() const { return order_; }

  const std::string& factor_of(const std::string& attribute) const {
    auto it = factor_.find(attribute);
    if (it == factor_.end()) {
      throw UnknownAttribute("no factor for attribute '" + attribute + "'");
    }
    return it->second;
  }

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string> factor_;  // attribute -> dependency id
};

/// Chain-rule product over a prebuilt factorization. `full` must bind every
/// attribute of the context exactly.
inline double joint_probability(const DependencyPool& pool, const Factorization& f,
                                const Assignment& full) {
  for (const auto& [attr, value] : full.bindings) {
    if (std::find(f.order().begin(), f.order().end(), attr) == f.order().end()) {
      throw UnknownAttribute("assignment binds '" + attr + "' outside the context");
    }
  }
  double product = 1.0;
  for (const std::string& attr : f.order()) {
    auto it = full.bindings.find(attr);
    if (it == full.bindings.end()) {
      throw IncompleteAssignment("assignment does not bind attribute '" + attr + "'");
    }
    const Dependency& d = pool.dependency(f.factor_of(attr));
    product *= cpt_entry(pool, d, full.bindings, it->second);
  }
  return product;
}

inline double joint_probability(const DependencyPool& pool, const Context& context,
                                const Assignment& full) {
  return joint_probability(pool, Factorization::build(pool, context), full);
}

namespace detail {

/// Dense table over a sorted variable scope; first variable is the most
/// significant index digit. The unit of the variable-elimination scheme.
struct VeFactor {
  std::vector<std::string> vars;
  std::vector<std::size_t> card;
  std::vector<double> table;

  std::size_t size() const {
    std::size_t n = 1;
    for (std::size_t c : card) n *= c;
    return n;
  }
};

inline VeFactor ve_restrict(const DependencyPool& pool, const Dependency& d,
                            const Assignment& bound) {
  std::vector<std::string> scope = d.antecedents;
  scope.push_back(d.consequent);

  VeFactor f;
  for (const std::string& v : scope) {
    if (!bound.binds(v)) f.vars.push_back(v);
  }
  std::sort(f.vars.begin(), f.vars.end());
  for (const std::string& v : f.vars) f.card.push_back(pool.attribute(v).values.size());
  f.table.assign(f.size(), 0.0);

  // Walk every cell of the reduced scope; bound variables are pinned.
  std::vector<std::size_t> digits(f.vars.size(), 0);
  for (std::size_t cell = 0; cell < f.table.size(); ++cell) {
    std::map<std::string, std::string> values = bound.bindings;
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
      values[f.vars[i]] = pool.attribute(f.vars[i]).values[digits[i]];
    }
    f.table[cell] = cpt_entry(pool, d, values, values.at(d.consequent));
    for (std::size_t i = f.vars.size(); i-- > 0;) {
      if (++digits[i] < f.card[i]) break;
      digits[i] = 0;
    }
  }
  return f;
}

inline std::size_t ve_index_of(const VeFactor& f,
                               const std::map<std::string, std::size_t>& digits) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    index = index * f.card[i] + digits.at(f.vars[i]);
  }
  return index;
}

inline VeFactor ve_product(const DependencyPool& pool, const VeFactor& a,
                           const VeFactor& b) {
  VeFactor out;
  std::set<std::string> scope(a.vars.begin(), a.vars.end());
  scope.insert(b.vars.begin(), b.vars.end());
  out.vars.assign(scope.begin(), scope.end());
  for (const std::string& v : out.vars) out.card.push_back(pool.attribute(v).values.size());
  out.table.assign(out.size(), 0.0);

  std::vector<std::size_t> digits(out.vars.size(), 0);
  for (std::size_t cell = 0; cell < out.table.size(); ++cell) {
    std::map<std::string, std::size_t> point;
    for (std::size_t i = 0; i < out.vars.size(); ++i) point[out.vars[i]] = digits[i];
    out.table[cell] = a.table[ve_index_of(a, point)] * b.table[ve_index_of(b, point)];
    for (std::size_t i = out.vars.size(); i-- > 0;) {
      if (++digits[i] < out.card[i]) break;
      digits[i] = 0;
    }
  }
  return out;
}

inline VeFactor ve_sum_out(const VeFactor& f, const std::string& var) {
  VeFactor out;
  std::size_t var_pos = f.vars.size();
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    if (f.vars[i] == var) {
      var_pos = i;
    } else {
      out.vars.push_back(f.vars[i]);
      out.card.push_back(f.card[i]);
    }
  }
  out.table.assign(out.size(), 0.0);

  std::vector<std::size_t> digits(out.vars.size(), 0);
  for (std::size_t cell = 0; cell < out.table.size(); ++cell) {
    std::map<std::string, std::size_t> point;
    for (std::size_t i = 0; i < out.vars.size(); ++i) point[out.vars[i]] = digits[i];
    double sum = 0.0;
    for (std::size_t v = 0; v < f.card[var_pos]; ++v) {
      point[var] = v;
      sum += f.table[ve_index_of(f, point)];
    }
    point.erase(var);
    out.table[cell] = sum;
    for (std::size_t i = out.vars.size(); i-- > 0;) {
      if (++digits[i] < out.card[i]) break;
      digits[i] = 0;
    }
  }
  return out;
}

}  // namespace detail

/// P[partial] inside a consistent context, by variable elimination: each
/// factor is restricted by the bound values, then every free variable is
/// summed out in reverse topological order. Matches full enumeration within
/// 1e-10 (property-tested) and is byte-deterministic: factor creation follows
/// the topological order and elimination folds factors in list order.
inline double marginal_probability(const DependencyPool& pool, const Context& context,
                                   const Assignment& partial) {
  const Factorization f = Factorization::build(pool, context);
  for (const auto& [attr, value] : partial.bindings) {
    if (!context.attrs.count(attr)) {
      throw UnknownAttribute("assignment binds '" + attr + "' outside the context");
    }
    pool.attribute(attr).index_of(value);
  }

  std::vector<detail::VeFactor> factors;
  for (const std::string& attr : f.order()) {
    factors.push_back(detail::ve_restrict(pool, pool.dependency(f.factor_of(attr)), partial));
  }

  std::vector<std::string> to_eliminate;
  for (auto it = f.order().rbegin(); it != f.order().rend(); ++it) {
    if (!partial.binds(*it)) to_eliminate.push_back(*it);
  }

  for (const std::string& var : to_eliminate) {
    std::vector<detail::VeFactor> touching, rest;
    for (auto& fac : factors) {
      const bool has = std::find(fac.vars.begin(), fac.vars.end(), var) != fac.vars.end();
      (has ? touching : rest).push_back(std::move(fac));
    }
    detail::VeFactor merged = std::move(touching.front());
    for (std::size_t i = 1; i < touching.size(); ++i) {
      merged = detail::ve_product(pool, merged, touching[i]);
    }
    rest.push_back(detail::ve_sum_out(merged, var));
    factors = std::move(rest);
  }

  double result = 1.0;
  for (const auto& fac : factors) result *= fac.table.at(0);
  return result;
}

/// The §5.1 possibility requirement: the constraining events must have
/// non-zero probability inside the context.
inline bool evidence_possible(const DependencyPool& pool, const Context& context,
                              const Assignment& evidence) {
  return marginal_probability(pool, context, evidence) > 0.0;
}

/// The merit F(S) = P[d = d_l | E(S)].
inline double conditional_probability(const DependencyPool& pool, const Context& context,
                                      const Query& query) {
  const double denom = marginal_probability(pool, context, query.evidence);
  if (denom <= 0.0) {
    throw ZeroEvidence("evidence has probability zero in context {" +
                       canonical_key(context) + "}");
  }
  Assignment joint = query.evidence;
  joint.bindings[query.target_attribute] = query.target_value;
  return marginal_probability(pool, context, joint) / denom;
}

/// Traditional MAP abduction inside one fixed context: the most probable
/// completion of the unobserved attributes given the evidence. Ties resolve
/// to the lexicographically first completion (attributes sorted by name,
/// values in domain order).
inline Assignment map_assignment(const DependencyPool& pool, const Context& context,
                                 const Assignment& evidence) {
  const Factorization f = Factorization::build(pool, context);
  for (const auto& [attr, value] : evidence.bindings) {
    if (!context.attrs.count(attr)) {
      throw UnknownAttribute("evidence binds '" + attr + "' outside the context");
    }
  }
  if (!evidence_possible(pool, context, evidence)) {
    throw ZeroEvidence("evidence has probability zero in context {" +
                       canonical_key(context) + "}");
  }

  std::vector<std::string> free_attrs;
  for (const std::string& attr : context.attrs) {
    if (!evidence.binds(attr)) free_attrs.push_back(attr);
  }
  // context.attrs is an ordered set, so free_attrs is already sorted.

  Assignment best;
  double best_joint = -1.0;
  std::vector<std::size_t> digits(free_attrs.size(), 0);
  while (true) {
    Assignment full = evidence;
    Assignment completion;
    for (std::size_t i = 0; i < free_attrs.size(); ++i) {
      const std::string& value = pool.attribute(free_attrs[i]).values[digits[i]];
      full.bindings[free_attrs[i]] = value;
      completion.bindings[free_attrs[i]] = value;
    }
    const double joint = joint_probability(pool, f, full);
    if (joint > best_joint) {
      best_joint = joint;
      best = completion;
    }
    std::size_t i = free_attrs.size();
    while (i-- > 0) {
      if (++digits[i] < pool.attribute(free_attrs[i]).values.size()) break;
      digits[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) break;  // odometer wrapped
  }
  return best;
}

}  // namespace imago
