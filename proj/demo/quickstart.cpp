// Minimal library walkthrough: load the bundled pool, ask for the contexts
// that make D=1 most likely given A=1, and print the ranked stream.

#include <fstream>
#include <iostream>

#include "imago/pool.hpp"
#include "imago/report.hpp"
#include "imago/search.hpp"

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : "demo/pool.json";
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << " (run from the repository root)\n";
    return 1;
  }
  const imago::DependencyPool pool = imago::load_pool(in);

  imago::Query query;
  query.evidence.bindings["A"] = "1";
  query.target_attribute = "D";
  query.target_value = "1";
  query.direction = imago::Direction::maximize;
  query.top_k = 2;

  const imago::ImagineResult run = imago::imagine(pool, query);
  for (const imago::RankedContext& r : run.results) {
    std::cout << imago::render_result_line(r.rank, r.merit, r.context, query.direction)
              << "\n";
  }
  std::cout << "expanded " << run.stats.expansions << " states, generated "
            << run.stats.generated << "\n";
  return 0;
}
