// hkm: run hierarchical k-median experiments and write CSV/JSON artifacts.

#include <fstream>
#include <iostream>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "hkm/experiments.hpp"

namespace {

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hkm::DataError("cannot write " + path);
  out << text;
}

std::string with_suffix(const std::string& out, const std::string& suffix) {
  if (out.empty() || out == "-") return "-";
  return out + suffix;
}

int run(const hkm::RunConfig& c) {
  c.validate();
  if (c.command == "gen") {
    const auto specs = hkm::expand_generator(c.generator);
    if (specs.size() != 1) throw hkm::ConfigError("gen writes one dataset; give a single n");
    const auto src = hkm::generate(specs.front(), c.seed);
    std::ostringstream csv;
    hkm::write_csv(csv, src.data);
    write_file(c.out, csv.str());
    if (!c.out.empty() && c.out != "-") {
      nlohmann::json meta{{"config", hkm::to_json(c)}, {"generator", src.label}, {"n", src.data.size()}};
      if (src.truth) meta["clusters"] = hkm::partition_json(*src.truth);
      hkm::save_sidecar(c.out, meta);
    }
    return hkm::kExitOk;
  }
  const auto sources = hkm::load_sources(c);
  if (c.command == "cluster" || c.command == "clusterability") {
    if (sources.size() != 1) throw hkm::ConfigError(c.command + " runs on a single dataset");
    const auto j = c.command == "cluster" ? hkm::run_cluster(c, sources.front())
                                          : hkm::run_clusterability(c, sources.front());
    write_file(c.out, j.dump(2) + "\n");
  } else if (c.command == "sensitivity") {
    const auto res = hkm::run_sensitivity(c, sources);
    if (c.out.empty() || c.out == "-") {
      std::cout << res.summary.dump(2) << '\n';
    } else {
      write_file(with_suffix(c.out, "_trials.csv"), res.csv);
      write_file(with_suffix(c.out, "_summary.json"), res.summary.dump(2) + "\n");
    }
  } else if (c.command == "cost-curve") {
    write_file(c.out, hkm::run_cost_curve(c, sources));
  }
  return hkm::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical k-median clustering with low average sensitivity"};
  app.require_subcommand(1);

  std::string config_path, input, generator, deletion, out, delimiter;
  std::vector<std::string> algorithms;
  std::vector<double> epsilons;
  std::size_t k = 0, trials = 0, workers = 0, min_samples = 0;
  std::vector<std::size_t> k_range;
  std::uint64_t seed = 0;
  double dbscan_eps = 0.0;
  bool scale = false, header = false;

  std::vector<CLI::Option*> opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (or a previous output); flags override it");
    sub->add_option("--input", input, "CSV dataset");
    sub->add_option("--generator", generator, "generator spec, e.g. line:n=100,d1=0.5");
    sub->add_option("--algorithm", algorithms,
                    "stable, clnss-greedy, clnss-deterministic, single, complete, average, ward");
    sub->add_option("--k", k, "single k");
    sub->add_option("--k-range", k_range, "k range: lo hi")->expected(2);
    sub->add_option("--epsilon", epsilons, "epsilon for the stable algorithm (repeatable)");
    sub->add_option("--delete", deletion, "deletion schedule: point | count:N | frac:F");
    sub->add_option("--trials", trials, "trials per grid cell");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--workers", workers, "worker threads");
    sub->add_option("--out", out, "output path (or prefix for sensitivity); '-' for stdout");
    sub->add_flag("--scale", scale, "min-max scale every input column");
    sub->add_flag("--header", header, "input CSV has a header row");
    sub->add_option("--delimiter", delimiter, "input CSV delimiter");
    sub->add_option("--dbscan-eps", dbscan_eps, "DBSCAN neighborhood radius");
    sub->add_option("--min-samples", min_samples, "DBSCAN core-point threshold");
  };
  const std::pair<const char*, const char*> commands[] = {
      {"cluster", "build a hierarchy and report every level as JSON"},
      {"sensitivity", "estimate average sensitivity under random deletions"},
      {"cost-curve", "per-level k-median cost for each algorithm as CSV"},
      {"clusterability", "check well-clusterability of ground-truth or DBSCAN clusters"},
      {"gen", "write a synthetic dataset as CSV"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hkm::kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    hkm::RunConfig c;
    if (sub->count("--config")) c = hkm::load_config(config_path);
    c.command = sub->get_name();
    auto given = [&](const char* flag) { return sub->count(flag) > 0; };
    if (given("--input")) {
      c.input = input;
      c.generator.clear();
    }
    if (given("--generator")) {
      c.generator = generator;
      c.input.clear();
    }
    if (given("--algorithm")) c.algorithms = algorithms;
    if (given("--k")) c.k = k;
    if (given("--k-range")) {
      c.k.reset();
      c.k_min = k_range[0];
      c.k_max = k_range[1];
    }
    if (given("--epsilon")) c.epsilons = epsilons;
    if (given("--delete")) c.deletion = deletion;
    if (given("--trials")) c.trials = trials;
    if (given("--seed")) c.seed = seed;
    if (given("--workers")) c.workers = workers;
    if (given("--out")) c.out = out;
    if (given("--scale")) c.scale = scale;
    if (given("--header")) c.header = header;
    if (given("--delimiter")) {
      if (delimiter.size() != 1) throw hkm::ConfigError("delimiter must be one character");
      c.delimiter = delimiter[0];
    }
    if (given("--dbscan-eps")) c.dbscan_eps = dbscan_eps;
    if (given("--min-samples")) c.min_samples = min_samples;
    return run(c);
  } catch (const hkm::ConfigError& e) {
    std::cerr << "hkm: config error: " << e.what() << '\n';
    return hkm::kExitConfig;
  } catch (const hkm::InvalidInput& e) {
    std::cerr << "hkm: config error: " << e.what() << '\n';
    return hkm::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "hkm: data error: " << e.what() << '\n';
    return hkm::kExitData;
  }
}
