// imago: synthesize ranked hypothetical probabilistic contexts from a pool of
// context-invariant causal dependencies.
//
// Subcommands:
//   validate  check a pool file and summarize it
//   learn     estimate a context's dependencies from a CSV dataset
//   imagine   best-first construction of ranked contexts for a query
//
// Exit codes: 0 success, 1 I/O failure, 2 invalid input or query,
// 3 no results, 4 expansion cap hit before top-k results were found.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "imago/dot.hpp"
#include "imago/oracle.hpp"
#include "imago/pool.hpp"
#include "imago/report.hpp"
#include "imago/search.hpp"
#include "imago/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitLimit = 4;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return buffer.str();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

/// "A=1,B=0" -> assignment; throws imago::MalformedInput on syntax problems.
imago::Assignment parse_bindings(const std::string& text) {
  imago::Assignment out;
  for (const std::string& part : split(text, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw imago::MalformedInput("expected Attr=value, got '" + part + "'");
    }
    const std::string attr = part.substr(0, eq);
    if (out.binds(attr)) {
      throw imago::MalformedInput("attribute '" + attr + "' bound twice");
    }
    out.bindings[attr] = part.substr(eq + 1);
  }
  return out;
}

int cmd_validate(const std::string& pool_path) {
  const auto bytes = read_file(pool_path);
  if (!bytes) {
    std::cerr << "error: cannot read '" << pool_path << "'\n";
    return kExitIo;
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(*bytes);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << pool_path << ": not valid JSON: " << e.what() << "\n";
    return kExitInvalid;
  }
  const auto violations = imago::collect_pool_violations(doc);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << pool_path << ": " << v.message << "\n";
    return kExitInvalid;
  }
  const imago::DependencyPool pool = imago::load_pool(doc);
  std::set<std::string> labels;
  for (const auto& [id, dep] : pool.dependencies()) labels.insert(dep.context_label);
  std::cout << pool.attributes().size() << " attributes, " << pool.dependencies().size()
            << " dependencies, " << labels.size() << " contexts\n";
  return kExitOk;
}

int cmd_learn(const std::string& data_path, const std::string& context_label,
              const std::string& order_text, const std::string& parents_text,
              bool chow_liu, double alpha, const std::string& out_path) {
  std::ifstream in(data_path);
  if (!in) {
    std::cerr << "error: cannot read '" << data_path << "'\n";
    return kExitIo;
  }
  try {
    const imago::Dataset data = imago::Dataset::from_csv(in, context_label);
    imago::CausalOrder order{split(order_text, ',')};

    std::optional<std::map<std::string, std::set<std::string>>> structure;
    if (!chow_liu) {
      std::map<std::string, std::set<std::string>> parents;
      for (const std::string& entry : split(parents_text, ';')) {
        const auto colon = entry.find(':');
        if (colon == std::string::npos || colon == 0) {
          throw imago::MalformedInput("expected Child:Parent[,Parent...], got '" + entry + "'");
        }
        const std::string child = entry.substr(0, colon);
        if (parents.count(child)) {
          throw imago::MalformedInput("attribute '" + child + "' listed twice in --parents");
        }
        auto& set = parents[child];
        for (const std::string& p : split(entry.substr(colon + 1), ',')) set.insert(p);
      }
      structure = std::move(parents);
    }

    const std::vector<imago::Dependency> learnt =
        imago::learn_context(data, order, structure, alpha);
    const imago::DependencyPool pool(imago::dataset_attributes(data), learnt);

    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      return kExitIo;
    }
    out << imago::save_pool(pool).dump(2) << "\n";
    if (!out.good()) {
      std::cerr << "error: write to '" << out_path << "' failed\n";
      return kExitIo;
    }
    return kExitOk;
  } catch (const imago::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

struct ImagineArgs {
  std::string pool_path;
  std::string evidence;
  std::string target;
  std::string direction = "max";
  int top_k = 1;
  std::size_t max_expansions = 1'000'000;
  bool exhaustive = false;
  std::string dot_dir;
  std::string format = "jsonl";
};

int cmd_imagine(const ImagineArgs& args) {
  const auto bytes = read_file(args.pool_path);
  if (!bytes) {
    std::cerr << "error: cannot read '" << args.pool_path << "'\n";
    return kExitIo;
  }

  const auto started = std::chrono::steady_clock::now();
  nlohmann::json manifest;
  manifest["tool"] = "imago";
  manifest["version"] = imago::kVersion;
  manifest["command"] = "imagine";
  manifest["inputs"] = {{"pool", {{"path", args.pool_path}, {"sha256", sha256_hex(*bytes)}}}};

  try {
    std::istringstream stream(*bytes);
    const imago::DependencyPool pool = imago::load_pool(stream);

    imago::Query query;
    query.evidence = parse_bindings(args.evidence);
    const imago::Assignment target = parse_bindings(args.target);
    if (target.bindings.size() != 1) {
      throw imago::MalformedInput("--target needs exactly one Attr=value");
    }
    query.target_attribute = target.bindings.begin()->first;
    query.target_value = target.bindings.begin()->second;
    query.direction =
        args.direction == "max" ? imago::Direction::maximize : imago::Direction::minimize;
    query.top_k = args.top_k;
    query.limits.max_expansions = args.max_expansions;
    imago::validate_query(pool, query);

    manifest["query"] = {{"evidence", query.evidence.bindings},
                         {"target", {{"attribute", query.target_attribute},
                                     {"value", query.target_value}}},
                         {"direction", imago::to_string(query.direction)},
                         {"top_k", query.top_k}};
    manifest["limits"] = {{"max_expansions", query.limits.max_expansions}};
    manifest["mode"] = args.exhaustive ? "exhaustive" : "search";

    std::vector<imago::RankedContext> results;
    bool limit_hit = false;
    if (args.exhaustive) {
      const imago::OracleResult oracle =
          imago::enumerate_contexts(pool, query, pool.dependencies().size());
      for (const imago::ScoredContext& s : oracle.contexts) {
        if (results.size() >= static_cast<std::size_t>(query.top_k)) break;
        results.push_back({static_cast<int>(results.size()) + 1, s.context, s.merit, {}});
      }
      manifest["results"] = {{"count", results.size()},
                             {"examined", oracle.examined},
                             {"accepted", oracle.accepted}};
    } else {
      const imago::ImagineResult run = imago::imagine(pool, query);
      results = run.results;
      limit_hit = run.limit_hit;
      manifest["results"] = {{"count", results.size()},
                             {"expansions", run.stats.expansions},
                             {"generated", run.stats.generated},
                             {"limit_hit", run.limit_hit}};
    }

    for (const imago::RankedContext& r : results) {
      std::cout << imago::render_result_line(r.rank, r.merit, r.context, query.direction)
                << "\n";
    }

    if (!args.dot_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(args.dot_dir, ec);
      for (const imago::RankedContext& r : results) {
        const std::filesystem::path path =
            std::filesystem::path(args.dot_dir) /
            ("context_" + std::to_string(r.rank) + ".dot");
        std::ofstream out(path);
        out << imago::render_dot(pool, r.context, r.rank, r.merit);
        if (!out.good()) {
          std::cerr << "error: cannot write '" << path.string() << "'\n";
          return kExitIo;
        }
      }
    }

    manifest["timing_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - started)
                                .count();
    std::cerr << manifest.dump() << "\n";

    if (limit_hit && results.size() < static_cast<std::size_t>(query.top_k)) {
      return kExitLimit;
    }
    return results.empty() ? kExitEmpty : kExitOk;
  } catch (const imago::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"imagine ranked hypothetical probabilistic contexts"};
  app.require_subcommand(1);

  std::string validate_pool;
  CLI::App* validate = app.add_subcommand("validate", "check a pool file");
  validate->add_option("--pool", validate_pool, "pool JSON file")->required();

  std::string learn_data, learn_context_label, learn_order, learn_parents, learn_out;
  bool learn_chow_liu = false;
  double learn_alpha = 1.0;
  CLI::App* learn = app.add_subcommand("learn", "learn dependencies from a CSV dataset");
  learn->add_option("--data", learn_data, "CSV dataset")->required();
  learn->add_option("--context", learn_context_label, "context label")->required();
  learn->add_option("--order", learn_order, "causal order, e.g. A,B,D")->required();
  auto* parents_opt =
      learn->add_option("--parents", learn_parents, "structure, e.g. D:A;B:A");
  auto* chow_opt = learn->add_flag("--chow-liu", learn_chow_liu, "learn a Chow-Liu tree");
  parents_opt->excludes(chow_opt);
  learn->add_option("--alpha", learn_alpha, "Laplace smoothing weight")
      ->check(CLI::NonNegativeNumber);
  learn->add_option("--out", learn_out, "output pool file")->required();

  ImagineArgs im;
  CLI::App* imagine = app.add_subcommand("imagine", "synthesize ranked contexts");
  imagine->add_option("--pool", im.pool_path, "pool JSON file")->required();
  imagine->add_option("--evidence", im.evidence, "constraining events, e.g. A=1,B=0")
      ->required();
  imagine->add_option("--target", im.target, "desired event, e.g. D=1")->required();
  imagine->add_option("--direction", im.direction, "max or min")
      ->check(CLI::IsMember({"max", "min"}));
  imagine->add_option("--top-k", im.top_k, "number of ranked contexts")
      ->check(CLI::PositiveNumber);
  imagine->add_option("--max-expansions", im.max_expansions, "search expansion cap");
  imagine->add_flag("--exhaustive", im.exhaustive, "brute-force enumeration (small pools)");
  imagine->add_option("--dot", im.dot_dir, "write one DOT file per context here");
  imagine->add_option("--format", im.format, "output format")
      ->check(CLI::IsMember({"jsonl"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (validate->parsed()) return cmd_validate(validate_pool);
  if (learn->parsed()) {
    if (!learn_chow_liu && learn_parents.empty()) {
      std::cerr << "error: provide --parents or --chow-liu\n";
      return kExitInvalid;
    }
    return cmd_learn(learn_data, learn_context_label, learn_order, learn_parents,
                     learn_chow_liu, learn_alpha, learn_out);
  }
  return cmd_imagine(im);
}
