#pragma once

// Experiment runner: run configuration, dataset sources and the command
// implementations behind the hkm tool.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hkm/core.hpp"
#include "hkm/datasets.hpp"
#include "hkm/hierarchy.hpp"
#include "hkm/linkage.hpp"
#include "hkm/sensitivity.hpp"

namespace hkm {

// Raised for invalid or inconsistent run configurations (exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

struct RunConfig {
  std::string command;
  std::string input;      // CSV path
  std::string generator;  // e.g. "line:n=100,d1=0.5"
  std::vector<std::string> algorithms{"stable"};
  std::optional<std::size_t> k;
  std::size_t k_min = 1;
  std::optional<std::size_t> k_max;
  std::vector<double> epsilons{1.0};
  std::string deletion = "count:1";
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t workers = 0;  // 0: all available cores
  bool scale = false;
  bool header = false;
  char delimiter = ',';
  std::optional<double> dbscan_eps;
  std::size_t min_samples = 3;

  // The k values to evaluate, capped at n_max.
  std::vector<std::size_t> ks(std::size_t n_max) const {
    std::vector<std::size_t> out;
    if (k) {
      if (*k < 1 || *k > n_max)
        throw ConfigError("k = " + std::to_string(*k) + " outside [1, " + std::to_string(n_max) + "]");
      out.push_back(*k);
      return out;
    }
    const std::size_t hi = std::min(k_max.value_or(10), n_max);
    if (k_min < 1 || k_min > hi) throw ConfigError("empty k range");
    for (std::size_t v = k_min; v <= hi; ++v) out.push_back(v);
    return out;
  }

  std::size_t max_k(std::size_t n_max) const {
    const auto v = ks(n_max);
    return v.back();
  }

  void validate() const {
    static const std::vector<std::string> commands{"cluster", "sensitivity", "cost-curve", "clusterability", "gen"};
    if (std::find(commands.begin(), commands.end(), command) == commands.end())
      throw ConfigError("unknown command '" + command + "'");
    if (input.empty() == generator.empty()) throw ConfigError("exactly one of input and generator is required");
    if (command == "gen" && generator.empty()) throw ConfigError("gen needs a generator");
    if (algorithms.empty()) throw ConfigError("no algorithm given");
    for (const auto& a : algorithms)
      if (!algorithm_by_name(a)) throw ConfigError("unknown algorithm '" + a + "'");
    if (epsilons.empty()) throw ConfigError("no epsilon given");
    for (double e : epsilons)
      if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("epsilon must be positive");
    const bool has_stable = std::find(algorithms.begin(), algorithms.end(), "stable") != algorithms.end();
    if (!has_stable && !(epsilons.size() == 1 && epsilons[0] == 1.0))
      throw ConfigError("epsilon only applies to the stable algorithm");
    if (k && (*k < 1)) throw ConfigError("k must be positive");
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (dbscan_eps && !(*dbscan_eps > 0.0)) throw ConfigError("dbscan eps must be positive");
    if (min_samples < 1) throw ConfigError("min_samples must be at least 1");
    try {
      DeletionSchedule::parse(deletion, trials);
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what());
    }
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["generator"] = c.generator;
  j["algorithms"] = c.algorithms;
  j["k"] = c.k ? nlohmann::json(*c.k) : nlohmann::json(nullptr);
  j["k_min"] = c.k_min;
  j["k_max"] = c.k_max ? nlohmann::json(*c.k_max) : nlohmann::json(nullptr);
  j["epsilons"] = c.epsilons;
  j["delete"] = c.deletion;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["workers"] = c.workers;
  j["scale"] = c.scale;
  j["header"] = c.header;
  j["delimiter"] = std::string(1, c.delimiter);
  j["dbscan_eps"] = c.dbscan_eps ? nlohmann::json(*c.dbscan_eps) : nlohmann::json(nullptr);
  j["min_samples"] = c.min_samples;
  return j;
}

// Accepts a bare config object or any tool output carrying a "config" key.
inline RunConfig config_from_json(const nlohmann::json& doc) {
  const nlohmann::json& j = doc.contains("config") ? doc.at("config") : doc;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known{"command", "input",   "generator", "algorithms", "k",
                                              "k_min",   "k_max",   "epsilons",  "delete",     "trials",
                                              "seed",    "out",     "workers",   "scale",      "header",
                                              "delimiter", "dbscan_eps", "min_samples"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config key '" + key + "'");
  RunConfig c;
  try {
    if (j.contains("command")) c.command = j["command"].get<std::string>();
    if (j.contains("input")) c.input = j["input"].get<std::string>();
    if (j.contains("generator")) c.generator = j["generator"].get<std::string>();
    if (j.contains("algorithms")) c.algorithms = j["algorithms"].get<std::vector<std::string>>();
    if (j.contains("k") && !j["k"].is_null()) c.k = j["k"].get<std::size_t>();
    if (j.contains("k_min")) c.k_min = j["k_min"].get<std::size_t>();
    if (j.contains("k_max") && !j["k_max"].is_null()) c.k_max = j["k_max"].get<std::size_t>();
    if (j.contains("epsilons")) c.epsilons = j["epsilons"].get<std::vector<double>>();
    if (j.contains("delete")) c.deletion = j["delete"].get<std::string>();
    if (j.contains("trials")) c.trials = j["trials"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("workers")) c.workers = j["workers"].get<std::size_t>();
    if (j.contains("scale")) c.scale = j["scale"].get<bool>();
    if (j.contains("header")) c.header = j["header"].get<bool>();
    if (j.contains("delimiter")) {
      const auto d = j["delimiter"].get<std::string>();
      if (d.size() != 1) throw ConfigError("delimiter must be one character");
      c.delimiter = d[0];
    }
    if (j.contains("dbscan_eps") && !j["dbscan_eps"].is_null()) c.dbscan_eps = j["dbscan_eps"].get<double>();
    if (j.contains("min_samples")) c.min_samples = j["min_samples"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

// Reads a JSON config, or the "# config: {...}" first line of a CSV output.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  const std::string tag = "# config: ";
  if (text.starts_with(tag)) text = text.substr(tag.size(), text.find('\n') - tag.size());
  try {
    return config_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Dataset sources

struct GeneratorSpec {
  std::string name;
  std::map<std::string, std::string> params;

  double number(const std::string& key, double fallback) const {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != it->second.size())
      throw ConfigError("generator parameter " + key + "=" + it->second + " is not a number");
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    const double v = number(key, static_cast<double>(fallback));
    if (v < 0 || v != std::floor(v)) throw ConfigError("generator parameter " + key + " must be a whole number");
    return static_cast<std::size_t>(v);
  }
};

// "name:key=value,key=value". A value "a:b:s" in n expands to a range.
inline GeneratorSpec parse_generator(const std::string& text) {
  GeneratorSpec g;
  const auto colon = text.find(':');
  g.name = text.substr(0, colon);
  if (colon == std::string::npos) return g;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("bad generator parameter '" + item + "'");
    g.params[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return g;
}

inline std::string format_generator(const GeneratorSpec& g) {
  std::string s = g.name;
  bool first = true;
  for (const auto& [k, v] : g.params) {
    s += (first ? ":" : ",") + k + "=" + v;
    first = false;
  }
  return s;
}

// Expands "n=50:300:50" into one spec per n.
inline std::vector<GeneratorSpec> expand_generator(const std::string& text) {
  GeneratorSpec g = parse_generator(text);
  auto it = g.params.find("n");
  if (it == g.params.end() || it->second.find(':') == std::string::npos) return {g};
  std::stringstream ss(it->second);
  std::string part;
  std::vector<std::size_t> v;
  while (std::getline(ss, part, ':')) {
    try {
      v.push_back(std::stoull(part));
    } catch (const std::exception&) {
      throw ConfigError("bad n range '" + it->second + "'");
    }
  }
  if (v.size() != 3 || v[2] == 0 || v[0] > v[1]) throw ConfigError("n range must be lo:hi:step");
  std::vector<GeneratorSpec> out;
  for (std::size_t n = v[0]; n <= v[1]; n += v[2]) {
    GeneratorSpec c = g;
    c.params["n"] = std::to_string(n);
    out.push_back(c);
  }
  return out;
}

struct Source {
  std::string label;  // path or canonical generator spec
  Dataset data;
  std::optional<Partition> truth;  // generators that know their clusters
};

// Generator streams derive from the master seed on a path disjoint from
// trial streams.
inline constexpr std::uint64_t kGeneratorStream = 0x67656e;

inline Source generate(const GeneratorSpec& g, std::uint64_t seed) {
  RngStream rng(derive_seed(seed, {kGeneratorStream}));
  Source s;
  s.label = format_generator(g);
  if (g.name == "line") {
    s.data = gen_line_instance(g.count("n", 100), g.number("d1", 0.5));
  } else if (g.name == "adversarial") {
    s.data = gen_rhst_adversarial(g.count("n", 64)).data;
  } else if (g.name == "random") {
    RandomPointsSpec r;
    r.n = g.count("n", 500);
    r.dim = g.count("d", 2);
    r.spread = g.number("spread", 100.0);
    r.clusters = g.count("clusters", 0);
    r.cluster_std = g.number("std", 0.05);
    s.data = gen_random_points(r, rng);
  } else if (g.name == "wellclust") {
    auto w = gen_well_clusterable(g.count("m", 3), g.count("ppc", 10), g.number("sep", 3.0), rng, g.count("d", 2));
    s.data = std::move(w.data);
    s.truth = std::move(w.clusters);
  } else {
    throw ConfigError("unknown generator '" + g.name + "' (line, adversarial, random, wellclust)");
  }
  return s;
}

inline std::vector<Source> load_sources(const RunConfig& c) {
  std::vector<Source> out;
  if (!c.input.empty()) {
    out.push_back({c.input, load_csv(c.input, {c.header, c.delimiter, c.scale}), std::nullopt});
    return out;
  }
  try {
    for (const auto& g : expand_generator(c.generator)) out.push_back(generate(g, c.seed));
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

// Index of the point minimizing the summed distance to the block.
inline Id block_medoid(const Dataset& data, const std::vector<Id>& block) {
  Id best = block.front();
  double best_cost = std::numeric_limits<double>::infinity();
  for (Id c : block) {
    const auto cp = data.point(data.position_of(c));
    double s = 0.0;
    for (Id q : block) s += euclidean_dist(cp, data.point(data.position_of(q)));
    if (s < best_cost) {
      best_cost = s;
      best = c;
    }
  }
  return best;
}

inline double medoid_cost(const Dataset& data, const Partition& p) {
  double total = 0.0;
  for (const auto& b : p.blocks()) {
    const Id m = block_medoid(data, b);
    const auto mp = data.point(data.position_of(m));
    for (Id q : b) total += euclidean_dist(mp, data.point(data.position_of(q)));
  }
  return total;
}

struct CostCurveRow {
  std::size_t k;
  std::string algorithm;
  std::optional<double> epsilon;
  double cost;
};

// Level-k Euclidean cost: prefix centers for tree algorithms, block medoids
// for linkage.
inline std::vector<CostCurveRow> cost_curve(const Dataset& data, const std::string& algorithm, double epsilon,
                                            const std::vector<std::size_t>& ks, std::uint64_t seed) {
  std::vector<CostCurveRow> rows;
  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
  const std::optional<double> eps = algorithm == "stable" ? std::optional<double>(epsilon) : std::nullopt;
  if (auto kind = parse_linkage(algorithm)) {
    const auto cuts = agglomerate(data, *kind).cuts(max_k);
    for (auto k : ks) rows.push_back({k, algorithm, eps, medoid_cost(data, cuts[k - 1])});
    return rows;
  }
  const Algorithm alg = *algorithm_by_name(algorithm, epsilon);
  PipelineOptions opt;
  opt.mode = algorithm == "stable" ? HierarchyMode::Stable : HierarchyMode::Greedy;
  opt.shift = algorithm == "clnss-deterministic" ? ShiftMode::Zero : ShiftMode::Random;
  opt.epsilon = epsilon;
  opt.max_levels = max_k;
  RngStream rng(seed);
  const auto res = clnss_pipeline(data, rng, opt);
  for (auto k : ks) rows.push_back({k, alg.name, eps, res.euclidean_cost[k - 1]});
  return rows;
}

inline nlohmann::json partition_json(const Partition& p) { return p.blocks(); }

inline nlohmann::json run_cluster(const RunConfig& c, const Source& src) {
  const Dataset& data = src.data;
  const std::string& name = c.algorithms.front();
  const double eps = c.epsilons.front();
  const std::size_t max_k = c.k ? c.max_k(data.size()) : std::min(c.k_max.value_or(data.size()), data.size());
  nlohmann::json j;
  j["config"] = to_json(c);
  j["dataset"] = src.label;
  j["n"] = data.size();
  j["dim"] = data.dim();
  j["algorithm"] = name;
  j["epsilon"] = name == "stable" ? nlohmann::json(eps) : nlohmann::json(nullptr);
  nlohmann::json levels = nlohmann::json::array();
  if (auto kind = parse_linkage(name)) {
    const auto cuts = agglomerate(data, *kind).cuts(max_k);
    j["centers"] = nullptr;
    for (std::size_t k = 1; k <= cuts.size(); ++k)
      levels.push_back({{"k", k},
                        {"blocks", partition_json(cuts[k - 1])},
                        {"euclidean_cost", medoid_cost(data, cuts[k - 1])},
                        {"tree_cost", nullptr}});
  } else {
    PipelineOptions opt;
    opt.mode = name == "stable" ? HierarchyMode::Stable : HierarchyMode::Greedy;
    opt.shift = name == "clnss-deterministic" ? ShiftMode::Zero : ShiftMode::Random;
    opt.epsilon = eps;
    opt.max_levels = max_k;
    RngStream rng(c.seed);
    const auto res = clnss_pipeline(data, rng, opt);
    j["centers"] = res.clustering.centers;
    j["shift"] = res.tree.shift();
    j["lambdas"] = res.lambdas;
    for (std::size_t k = 1; k <= res.clustering.levels.size(); ++k)
      levels.push_back({{"k", k},
                        {"blocks", partition_json(res.clustering.levels[k - 1])},
                        {"euclidean_cost", res.euclidean_cost[k - 1]},
                        {"tree_cost", res.clustering.per_level_cost[k - 1]}});
  }
  j["levels"] = std::move(levels);
  return j;
}

struct SensitivityOutput {
  std::string csv;
  nlohmann::json summary;
};

inline SensitivityOutput run_sensitivity(const RunConfig& c, const std::vector<Source>& sources) {
  const auto schedule = DeletionSchedule::parse(c.deletion, c.trials);
  std::ostringstream csv;
  csv << "# config: " << to_json(c).dump() << '\n';
  csv << "dataset,n,algorithm,epsilon,k,trial,deleted_ids,distance\n";
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& src : sources) {
    const std::size_t n = src.data.size();
    const std::size_t removable = schedule.deletions_per_trial(n);
    if (removable >= n) throw ConfigError("deletion schedule removes every point of " + src.label);
    const auto ks = c.ks(n - removable);
    for (const auto& name : c.algorithms) {
      const std::vector<double> eps_list = name == "stable" ? c.epsilons : std::vector<double>{1.0};
      for (double eps : eps_list) {
        const Algorithm alg = *algorithm_by_name(name, eps);
        const auto reports = sensitivity_sweep(alg, src.data, ks, schedule, c.seed,
                                                 c.workers == 0 ? default_workers() : c.workers);
        for (const auto& r : reports) {
          auto s = summary_json(r);
          s["dataset"] = src.label;
          s["n"] = n;
          cells.push_back(std::move(s));
          for (const auto& rec : r.records) {
            csv << src.label << ',' << n << ',' << r.algorithm << ','
                << (r.epsilon ? nlohmann::json(*r.epsilon).dump() : "") << ',' << r.k << ',' << rec.trial << ',';
            for (std::size_t i = 0; i < rec.deleted.size(); ++i) csv << (i ? ";" : "") << rec.deleted[i];
            csv << ',' << rec.distance << '\n';
          }
        }
      }
    }
  }
  nlohmann::json summary;
  summary["config"] = to_json(c);
  summary["cells"] = std::move(cells);
  return {csv.str(), std::move(summary)};
}

inline std::string run_cost_curve(const RunConfig& c, const std::vector<Source>& sources) {
  std::ostringstream csv;
  csv << "# config: " << to_json(c).dump() << '\n';
  csv << "dataset,k,algorithm,epsilon,cost\n";
  for (const auto& src : sources) {
    const auto ks = c.ks(src.data.size());
    for (const auto& name : c.algorithms) {
      const std::vector<double> eps_list = name == "stable" ? c.epsilons : std::vector<double>{1.0};
      for (double eps : eps_list)
        for (const auto& row : cost_curve(src.data, name, eps, ks, c.seed))
          csv << src.label << ',' << row.k << ',' << row.algorithm << ','
              << (row.epsilon ? nlohmann::json(*row.epsilon).dump() : "") << ','
              << nlohmann::json(row.cost).dump() << '\n';
    }
  }
  return csv.str();
}

// Clusters come from DBSCAN when eps is given, else from the generator's
// ground truth. Noise points are excluded from the check.
inline nlohmann::json run_clusterability(const RunConfig& c, const Source& src) {
  nlohmann::json j;
  j["config"] = to_json(c);
  j["dataset"] = src.label;
  Partition clusters;
  std::vector<Id> noise;
  if (c.dbscan_eps) {
    auto res = dbscan(src.data, {*c.dbscan_eps, c.min_samples});
    clusters = std::move(res.clusters);
    noise = std::move(res.noise);
    j["source"] = "dbscan";
  } else if (src.truth) {
    clusters = *src.truth;
    j["source"] = "generator";
  } else {
    throw ConfigError("clusterability on an input file needs --dbscan-eps");
  }
  j["noise"] = noise;
  j["clusters"] = partition_json(clusters);
  if (clusters.size() == 0) {
    j["verdict"] = nullptr;
    j["table"] = nlohmann::json::array();
    j["witnesses"] = nlohmann::json::array();
    return j;
  }
  std::vector<std::size_t> kept;
  for (const auto& b : clusters.blocks())
    for (Id id : b) kept.push_back(src.data.position_of(id));
  std::vector<std::size_t> drop;
  for (std::size_t p = 0; p < src.data.size(); ++p)
    if (std::find(kept.begin(), kept.end(), p) == kept.end()) drop.push_back(p);
  const Dataset core = drop.empty() ? src.data : src.data.without_positions(drop);
  const auto report = check_well_clusterable(core, clusters);
  nlohmann::json table = nlohmann::json::array();
  for (std::size_t i = 0; i < clusters.size(); ++i)
    table.push_back({{"cluster", i},
                     {"size", clusters.block(i).size()},
                     {"max_intra", report.max_intra[i]},
                     {"min_inter", clusters.size() > 1 ? nlohmann::json(report.min_inter[i]) : nlohmann::json(nullptr)}});
  j["table"] = std::move(table);
  j["verdict"] = report.verdict;
  nlohmann::json w = nlohmann::json::array();
  for (const auto& x : report.witnesses) w.push_back({{"i", x.i}, {"j", x.j}, {"inter", x.inter}});
  j["witnesses"] = std::move(w);
  return j;
}

}  // namespace hkm
