#pragma once

#include <string>

#include "imago/model.hpp"
#include "imago/report.hpp"

namespace imago {

namespace detail {

inline std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

/// Graphviz rendering of one ranked context: a digraph whose edges are
/// exactly the antecedent -> consequent pairs of the chosen dependencies,
/// edge-labeled with dependency ids and graph-labeled with rank and merit.
inline std::string render_dot(const DependencyPool& pool, const Context& context,
                              int rank, double merit) {
  std::string out = "digraph context_" + std::to_string(rank) + " {\n";
  out += "  label=\"rank " + std::to_string(rank) + ", merit " + format_merit(merit) +
         "\";\n";
  for (const std::string& attr : context.attrs) {
    out += "  " + detail::dot_quote(attr) + ";\n";
  }
  for (const std::string& id : context.deps) {
    const Dependency& dep = pool.dependency(id);
    for (const std::string& antecedent : dep.antecedents) {
      out += "  " + detail::dot_quote(antecedent) + " -> " +
             detail::dot_quote(dep.consequent) + " [label=" + detail::dot_quote(id) +
             "];\n";
    }
  }
  out += "}\n";
  return out;
}

}  // namespace imago
