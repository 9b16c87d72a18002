#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "imago/model.hpp"

namespace imago {

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// Cases recorded in one context: a header of attribute names and complete
/// rows of value labels. Domains are the sorted distinct values per column
/// unless declared explicitly (a declared domain may contain values the data
/// never exercises).
struct Dataset {
  std::string context_label;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<std::string>> domains;

  static Dataset from_rows(
      std::string context_label, std::vector<std::string> columns,
      std::vector<std::vector<std::string>> rows,
      std::optional<std::vector<std::vector<std::string>>> domains = std::nullopt) {
    Dataset d;
    d.context_label = std::move(context_label);
    d.columns = std::move(columns);
    d.rows = std::move(rows);

    std::set<std::string> names(d.columns.begin(), d.columns.end());
    if (names.size() != d.columns.size()) {
      throw MalformedInput("dataset repeats a column name");
    }
    if (d.rows.empty()) throw MalformedInput("dataset has no rows");
    for (const auto& row : d.rows) {
      if (row.size() != d.columns.size()) {
        throw MalformedInput("dataset row width does not match the header");
      }
    }

    if (domains) {
      d.domains = std::move(*domains);
      if (d.domains.size() != d.columns.size()) {
        throw MalformedInput("one domain per column required");
      }
      for (const auto& row : d.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
          const auto& dom = d.domains[c];
          if (std::find(dom.begin(), dom.end(), row[c]) == dom.end()) {
            throw UnknownValue("value '" + row[c] + "' outside the declared domain of '" +
                               d.columns[c] + "'");
          }
        }
      }
    } else {
      d.domains.resize(d.columns.size());
      for (std::size_t c = 0; c < d.columns.size(); ++c) {
        std::set<std::string> values;
        for (const auto& row : d.rows) values.insert(row[c]);
        d.domains[c].assign(values.begin(), values.end());
      }
    }
    return d;
  }

  static Dataset from_csv(std::istream& in, std::string context_label);

  std::size_t column_index(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c] == name) return c;
    }
    throw ColumnMissing("dataset has no column '" + name + "'");
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw MalformedInput("unterminated quote in CSV line: " + line);
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace detail

inline Dataset Dataset::from_csv(std::istream& in, std::string context_label) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;  // trailing newline
    lines.push_back(line);
  }
  if (lines.empty()) throw MalformedInput("CSV input is empty");

  std::vector<std::string> columns = detail::split_csv_line(lines.front());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    rows.push_back(detail::split_csv_line(lines[i]));
  }
  return Dataset::from_rows(std::move(context_label), std::move(columns), std::move(rows));
}

/// Attribute declarations induced by a dataset (name + ordered domain).
inline std::vector<Attribute> dataset_attributes(const Dataset& data) {
  std::vector<Attribute> out;
  for (std::size_t c = 0; c < data.columns.size(); ++c) {
    out.push_back({data.columns[c], data.domains[c]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pool serialization (JSON)
// ---------------------------------------------------------------------------

namespace detail {

struct DecodedPool {
  std::vector<Attribute> attributes;
  std::vector<Dependency> dependencies;
  std::vector<Violation> violations;
};

/// Tolerant structural decode: shape problems are collected, not thrown, so
/// `validate` can report everything in one pass.
inline DecodedPool decode_pool(const nlohmann::json& doc) {
  using K = Violation::Kind;
  DecodedPool out;

  if (!doc.is_object()) {
    out.violations.push_back({K::malformed, "pool document must be a JSON object"});
    return out;
  }
  if (!doc.contains("attributes") || !doc["attributes"].is_array()) {
    out.violations.push_back({K::malformed, "missing 'attributes' array"});
    return out;
  }
  if (!doc.contains("dependencies") || !doc["dependencies"].is_array()) {
    out.violations.push_back({K::malformed, "missing 'dependencies' array"});
    return out;
  }

  std::map<std::string, const Attribute*> by_name;
  for (const auto& node : doc["attributes"]) {
    if (!node.is_object() || !node.contains("name") || !node["name"].is_string() ||
        !node.contains("values") || !node["values"].is_array()) {
      out.violations.push_back({K::malformed, "attribute entries need a name and a values array"});
      continue;
    }
    Attribute a;
    a.name = node["name"].get<std::string>();
    bool ok = true;
    for (const auto& v : node["values"]) {
      if (!v.is_string()) {
        out.violations.push_back(
            {K::malformed, "attribute '" + a.name + "' has a non-string value label"});
        ok = false;
        break;
      }
      a.values.push_back(v.get<std::string>());
    }
    if (!ok) continue;
    out.attributes.push_back(std::move(a));
    by_name.emplace(out.attributes.back().name, &out.attributes.back());
  }

  for (const auto& node : doc["dependencies"]) {
    if (!node.is_object() || !node.contains("id") || !node["id"].is_string()) {
      out.violations.push_back({K::malformed, "dependency entries need a string id"});
      continue;
    }
    Dependency d;
    d.id = node["id"].get<std::string>();
    auto fail = [&](K kind, const std::string& msg) {
      out.violations.push_back({kind, "dependency '" + d.id + "': " + msg});
    };
    if (!node.contains("context") || !node["context"].is_string() ||
        !node.contains("consequent") || !node["consequent"].is_string() ||
        !node.contains("antecedents") || !node["antecedents"].is_array() ||
        !node.contains("cpt") || !node["cpt"].is_array()) {
      fail(K::malformed, "needs context, consequent, antecedents and cpt fields");
      continue;
    }
    d.context_label = node["context"].get<std::string>();
    d.consequent = node["consequent"].get<std::string>();
    bool ok = true;
    for (const auto& a : node["antecedents"]) {
      if (!a.is_string()) {
        fail(K::malformed, "antecedents must be attribute names");
        ok = false;
        break;
      }
      d.antecedents.push_back(a.get<std::string>());
    }
    if (!ok) continue;

    // Rows can only be ranked once every referenced attribute is known.
    if (!by_name.count(d.consequent)) {
      fail(K::unknown_attribute, "undeclared consequent '" + d.consequent + "'");
      continue;
    }
    for (const std::string& a : d.antecedents) {
      if (!by_name.count(a)) {
        fail(K::unknown_attribute, "undeclared antecedent '" + a + "'");
        ok = false;
      }
    }
    if (!ok) continue;
    if (std::set<std::string>(d.antecedents.begin(), d.antecedents.end()).size() !=
            d.antecedents.size() ||
        std::find(d.antecedents.begin(), d.antecedents.end(), d.consequent) !=
            d.antecedents.end()) {
      fail(K::malformed, "antecedents must be distinct and exclude the consequent");
      continue;
    }

    std::size_t row_count = 1;
    for (const std::string& a : d.antecedents) row_count *= by_name.at(a)->values.size();
    const Attribute& conseq = *by_name.at(d.consequent);

    d.cpt.assign(row_count, {});
    std::vector<bool> seen(row_count, false);
    for (const auto& row_node : node["cpt"]) {
      if (!row_node.is_object() || !row_node.contains("given") ||
          !row_node["given"].is_object() || !row_node.contains("dist") ||
          !row_node["dist"].is_object()) {
        fail(K::bad_distribution, "cpt rows need 'given' and 'dist' objects");
        ok = false;
        break;
      }
      std::map<std::string, std::string> given;
      for (const auto& [key, value] : row_node["given"].items()) {
        if (!value.is_string()) {
          fail(K::bad_distribution, "'given' values must be value labels");
          ok = false;
          break;
        }
        given[key] = value.get<std::string>();
      }
      if (!ok) break;
      if (given.size() != d.antecedents.size()) {
        fail(K::bad_distribution, "a 'given' object must bind exactly the antecedents");
        ok = false;
        break;
      }
      std::size_t index = 0;
      try {
        for (const std::string& a : d.antecedents) {
          const Attribute& attr = *by_name.at(a);
          auto it = given.find(a);
          if (it == given.end()) throw BadDistribution("row does not bind '" + a + "'");
          index = index * attr.values.size() + attr.index_of(it->second);
        }
      } catch (const Error& e) {
        fail(K::bad_distribution, e.what());
        ok = false;
        break;
      }
      if (seen[index]) {
        fail(K::bad_distribution, "duplicate cpt row");
        ok = false;
        break;
      }
      seen[index] = true;

      std::vector<double> dist(conseq.values.size(), 0.0);
      std::size_t provided = 0;
      for (const auto& [label, p] : row_node["dist"].items()) {
        if (!p.is_number() || !conseq.has_value(label)) {
          fail(K::bad_distribution,
               "dist keys must be values of '" + d.consequent + "' with numeric probabilities");
          ok = false;
          break;
        }
        dist[conseq.index_of(label)] = p.get<double>();
        ++provided;
      }
      if (!ok) break;
      if (provided != conseq.values.size()) {
        fail(K::bad_distribution, "dist must cover every value of '" + d.consequent + "'");
        ok = false;
        break;
      }
      d.cpt[index] = std::move(dist);
    }
    if (!ok) continue;
    for (std::size_t r = 0; r < row_count; ++r) {
      if (!seen[r]) {
        fail(K::bad_distribution, "missing cpt row " + std::to_string(r));
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    out.dependencies.push_back(std::move(d));
  }
  return out;
}

}  // namespace detail

/// Every violation in a pool document: structural decode problems plus model
/// invariant failures over whatever decoded cleanly.
inline std::vector<Violation> collect_pool_violations(const nlohmann::json& doc) {
  detail::DecodedPool decoded = detail::decode_pool(doc);
  std::vector<Violation> out = std::move(decoded.violations);
  const auto semantic = collect_violations(decoded.attributes, decoded.dependencies);
  out.insert(out.end(), semantic.begin(), semantic.end());
  return out;
}

inline DependencyPool load_pool(const nlohmann::json& doc) {
  detail::DecodedPool decoded = detail::decode_pool(doc);
  if (!decoded.violations.empty()) throw_violation(decoded.violations.front());
  return DependencyPool(std::move(decoded.attributes), std::move(decoded.dependencies));
}

inline DependencyPool load_pool(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInput(std::string("pool is not valid JSON: ") + e.what());
  }
  return load_pool(doc);
}

inline nlohmann::json save_pool(const DependencyPool& pool) {
  nlohmann::json doc;
  doc["attributes"] = nlohmann::json::array();
  for (const auto& [name, attr] : pool.attributes()) {
    doc["attributes"].push_back({{"name", name}, {"values", attr.values}});
  }
  doc["dependencies"] = nlohmann::json::array();
  for (const auto& [id, dep] : pool.dependencies()) {
    nlohmann::json rows = nlohmann::json::array();
    const Attribute& conseq = pool.attribute(dep.consequent);
    for (std::size_t r = 0; r < dep.cpt.size(); ++r) {
      nlohmann::json dist;
      for (std::size_t v = 0; v < conseq.values.size(); ++v) {
        dist[conseq.values[v]] = dep.cpt[r][v];
      }
      rows.push_back({{"given", cpt_row_values(pool, dep, r)}, {"dist", dist}});
    }
    doc["dependencies"].push_back({{"id", id},
                                   {"context", dep.context_label},
                                   {"consequent", dep.consequent},
                                   {"antecedents", dep.antecedents},
                                   {"cpt", rows}});
  }
  return doc;
}

/// Union of pools into one relation D. Attributes sharing a name must agree
/// exactly; dependencies sharing an id must be identical and merge once.
inline DependencyPool merge_pools(const std::vector<DependencyPool>& pools) {
  std::map<std::string, Attribute> attrs;
  std::map<std::string, Dependency> deps;
  for (const DependencyPool& pool : pools) {
    for (const auto& [name, attr] : pool.attributes()) {
      auto [it, inserted] = attrs.emplace(name, attr);
      if (!inserted && !(it->second == attr)) {
        throw AttributeClash("attribute '" + name + "' declared with different domains");
      }
    }
    for (const auto& [id, dep] : pool.dependencies()) {
      auto [it, inserted] = deps.emplace(id, dep);
      if (!inserted && !(it->second == dep)) {
        throw IdClash("dependency id '" + id + "' bound to different content");
      }
    }
  }
  std::vector<Attribute> a;
  std::vector<Dependency> d;
  for (auto& [name, attr] : attrs) a.push_back(std::move(attr));
  for (auto& [id, dep] : deps) d.push_back(std::move(dep));
  return DependencyPool(std::move(a), std::move(d));
}

// ---------------------------------------------------------------------------
// Learning dependencies from datasets
// ---------------------------------------------------------------------------

/// Total causal order, earliest cause first.
struct CausalOrder {
  std::vector<std::string> attributes;

  std::size_t position(const std::string& name) const {
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      if (attributes[i] == name) return i;
    }
    throw OrderMismatch("attribute '" + name + "' missing from the causal order");
  }
};

namespace detail {

inline void check_order_covers(const Dataset& data, const CausalOrder& order) {
  std::set<std::string> ordered(order.attributes.begin(), order.attributes.end());
  if (ordered.size() != order.attributes.size()) {
    throw OrderMismatch("causal order repeats an attribute");
  }
  for (const std::string& name : order.attributes) {
    if (std::find(data.columns.begin(), data.columns.end(), name) == data.columns.end()) {
      throw ColumnMissing("ordered attribute '" + name + "' is not a dataset column");
    }
  }
  for (const std::string& col : data.columns) {
    if (!ordered.count(col)) {
      throw OrderMismatch("causal order does not cover column '" + col + "'");
    }
  }
}

}  // namespace detail

/// Laplace-smoothed conditional frequency table for one consequent given the
/// listed antecedents:  P(v | row) = (count(row,v) + alpha) / (count(row) +
/// alpha * |domain|). The dependency id is "<label>:<conseq>|<ants joined by ,>".
inline Dependency estimate_cpt(const Dataset& data, const std::string& consequent,
                               const std::vector<std::string>& antecedents, double alpha) {
  if (alpha < 0.0) throw MalformedInput("alpha must be non-negative");
  const std::size_t conseq_col = data.column_index(consequent);
  std::vector<std::size_t> ant_cols;
  for (const std::string& a : antecedents) {
    if (a == consequent) {
      throw MalformedInput("antecedents of '" + consequent + "' include the consequent");
    }
    ant_cols.push_back(data.column_index(a));
  }
  std::set<std::string> distinct(antecedents.begin(), antecedents.end());
  if (distinct.size() != antecedents.size()) {
    throw MalformedInput("antecedent list repeats an attribute");
  }

  const std::vector<std::string>& conseq_domain = data.domains[conseq_col];
  std::size_t row_count = 1;
  for (std::size_t c : ant_cols) row_count *= data.domains[c].size();

  auto value_index = [&](std::size_t col, const std::string& value) {
    const auto& dom = data.domains[col];
    return static_cast<std::size_t>(
        std::find(dom.begin(), dom.end(), value) - dom.begin());
  };

  std::vector<std::vector<std::size_t>> counts(
      row_count, std::vector<std::size_t>(conseq_domain.size(), 0));
  std::vector<std::size_t> totals(row_count, 0);
  for (const auto& row : data.rows) {
    std::size_t index = 0;
    for (std::size_t c : ant_cols) {
      index = index * data.domains[c].size() + value_index(c, row[c]);
    }
    counts[index][value_index(conseq_col, row[conseq_col])]++;
    totals[index]++;
  }

  Dependency d;
  d.context_label = data.context_label;
  d.consequent = consequent;
  d.antecedents = antecedents;
  std::string joined;
  for (std::size_t i = 0; i < antecedents.size(); ++i) {
    if (i) joined += ',';
    joined += antecedents[i];
  }
  d.id = data.context_label + ":" + consequent + "|" + joined;

  d.cpt.resize(row_count);
  for (std::size_t r = 0; r < row_count; ++r) {
    if (alpha == 0.0 && totals[r] == 0) {
      throw AlphaZeroWithEmptyRow("no observations for an antecedent row of '" +
                                  consequent + "' and alpha is 0");
    }
    const double denom =
        static_cast<double>(totals[r]) + alpha * static_cast<double>(conseq_domain.size());
    for (std::size_t v = 0; v < conseq_domain.size(); ++v) {
      d.cpt[r].push_back((static_cast<double>(counts[r][v]) + alpha) / denom);
    }
  }
  return d;
}

/// Chow-Liu structure: maximum-weight spanning tree of the pairwise empirical
/// mutual information graph (nats; ties broken by the lexicographically
/// smallest attribute pair), rooted per component at the order-minimal
/// attribute with edges oriented away from the root. Every non-root attribute
/// maps to exactly one parent.
inline std::map<std::string, std::set<std::string>> chow_liu_parents(
    const Dataset& data, const CausalOrder& order) {
  if (data.columns.size() < 2) {
    throw MalformedInput("Chow-Liu needs at least 2 columns");
  }
  detail::check_order_covers(data, order);

  const std::size_t n = data.columns.size();
  const double total = static_cast<double>(data.rows.size());

  auto value_index = [&](std::size_t col, const std::string& value) {
    const auto& dom = data.domains[col];
    return static_cast<std::size_t>(
        std::find(dom.begin(), dom.end(), value) - dom.begin());
  };

  auto mutual_information = [&](std::size_t i, std::size_t j) {
    const std::size_t ci = data.domains[i].size();
    const std::size_t cj = data.domains[j].size();
    std::vector<double> joint(ci * cj, 0.0), pi(ci, 0.0), pj(cj, 0.0);
    for (const auto& row : data.rows) {
      const std::size_t vi = value_index(i, row[i]);
      const std::size_t vj = value_index(j, row[j]);
      joint[vi * cj + vj] += 1.0 / total;
      pi[vi] += 1.0 / total;
      pj[vj] += 1.0 / total;
    }
    double info = 0.0;
    for (std::size_t a = 0; a < ci; ++a) {
      for (std::size_t b = 0; b < cj; ++b) {
        const double p = joint[a * cj + b];
        if (p > 0.0) info += p * std::log(p / (pi[a] * pj[b]));
      }
    }
    return info;
  };

  struct Edge {
    double weight;
    std::string a, b;  // a < b lexicographically
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto [lo, hi] = std::minmax(data.columns[i], data.columns[j]);
      edges.push_back({mutual_information(i, j), lo, hi});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });

  // Kruskal.
  std::map<std::string, std::string> up;
  for (const std::string& c : data.columns) up[c] = c;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    return up[x] == x ? x : up[x] = find(up[x]);
  };
  std::map<std::string, std::vector<std::string>> neighbors;
  for (const Edge& e : edges) {
    const std::string ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    up[ra] = rb;
    neighbors[e.a].push_back(e.b);
    neighbors[e.b].push_back(e.a);
  }

  // Root each component at its order-minimal attribute; parent = the neighbor
  // on the way back to the root.
  std::map<std::string, std::set<std::string>> parents;
  std::set<std::string> visited;
  std::vector<std::string> by_order = order.attributes;
  for (const std::string& root : by_order) {
    if (visited.count(root)) continue;
    parents[root] = {};
    visited.insert(root);
    std::vector<std::string> frontier{root};
    while (!frontier.empty()) {
      const std::string at = frontier.back();
      frontier.pop_back();
      std::vector<std::string> next = neighbors[at];
      std::sort(next.begin(), next.end());
      for (const std::string& nb : next) {
        if (visited.count(nb)) continue;
        visited.insert(nb);
        parents[nb] = {at};
        frontier.push_back(nb);
      }
    }
  }
  return parents;
}

/// One dataset's contribution to the relation D: a dependency per attribute
/// under the given (or Chow-Liu-learnt) structure, estimated with
/// estimate_cpt. Parents must precede their children in the causal order.
inline std::vector<Dependency> learn_context(
    const Dataset& data, const CausalOrder& order,
    const std::optional<std::map<std::string, std::set<std::string>>>& structure,
    double alpha) {
  detail::check_order_covers(data, order);
  const std::map<std::string, std::set<std::string>> parents =
      structure ? *structure : chow_liu_parents(data, order);

  for (const auto& [child, ps] : parents) {
    data.column_index(child);
    for (const std::string& p : ps) {
      data.column_index(p);
      if (order.position(p) >= order.position(child)) {
        throw OrderViolation("parent '" + p + "' does not precede '" + child +
                             "' in the causal order");
      }
    }
  }

  std::vector<Dependency> out;
  for (const std::string& attr : order.attributes) {
    std::vector<std::string> ants;
    auto it = parents.find(attr);
    if (it != parents.end()) ants.assign(it->second.begin(), it->second.end());
    std::sort(ants.begin(), ants.end(), [&](const std::string& x, const std::string& y) {
      return order.position(x) < order.position(y);
    });
    out.push_back(estimate_cpt(data, attr, ants, alpha));
  }
  return out;
}

/// Linearizes precedence constraints into a total causal order (Kahn,
/// lexicographic tie-break). Accepts the partial knowledge case.
inline CausalOrder linearize_order(
    const std::vector<std::string>& attributes,
    const std::vector<std::pair<std::string, std::string>>& precedes) {
  std::set<std::string> known(attributes.begin(), attributes.end());
  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> after;
  for (const std::string& a : attributes) indegree[a] = 0;
  for (const auto& [before, then] : precedes) {
    if (!known.count(before) || !known.count(then)) {
      throw OrderMismatch("precedence constraint references an unknown attribute");
    }
    after[before].push_back(then);
    indegree[then]++;
  }
  std::set<std::string> ready;
  for (const auto& [a, deg] : indegree) {
    if (deg == 0) ready.insert(a);
  }
  CausalOrder order;
  while (!ready.empty()) {
    const std::string a = *ready.begin();
    ready.erase(ready.begin());
    order.attributes.push_back(a);
    for (const std::string& b : after[a]) {
      if (--indegree[b] == 0) ready.insert(b);
    }
  }
  if (order.attributes.size() != attributes.size()) {
    throw OrderViolation("precedence constraints contain a cycle");
  }
  return order;
}

}  // namespace imago
