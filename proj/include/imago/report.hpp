#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "imago/model.hpp"

namespace imago {

/// Merit rendered with 12 significant digits in plain decimal notation
/// (0.9 -> "0.900000000000"), so printed merits align with the 1e-12 test
/// tolerances. Merits are probabilities, so no exponent form is needed.
inline std::string format_merit(double merit) {
  if (merit <= 0.0) return "0.000000000000";
  const int magnitude = static_cast<int>(std::floor(std::log10(merit)));
  int decimals = 11 - magnitude;
  if (decimals < 0) decimals = 0;
  if (decimals > 30) decimals = 30;
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, merit);
  return buffer;
}

/// One ranked-context result as a JSONL line (no trailing newline). Arrays
/// are sorted, keys fixed, merit formatted by format_merit: identical inputs
/// always render byte-identical lines.
inline std::string render_result_line(int rank, double merit, const Context& context,
                                      Direction direction) {
  std::string line = "{\"rank\":" + std::to_string(rank);
  line += ",\"merit\":" + format_merit(merit);
  line += ",\"dependencies\":[";
  bool first = true;
  for (const std::string& id : context.deps) {
    if (!first) line += ',';
    line += nlohmann::json(id).dump();
    first = false;
  }
  line += "],\"attributes\":[";
  first = true;
  for (const std::string& attr : context.attrs) {
    if (!first) line += ',';
    line += nlohmann::json(attr).dump();
    first = false;
  }
  line += "],\"direction\":\"";
  line += to_string(direction);
  line += "\"}";
  return line;
}

}  // namespace imago
