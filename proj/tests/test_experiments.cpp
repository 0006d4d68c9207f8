#include <gtest/gtest.h>

#include "hkm/experiments.hpp"

using namespace hkm;

namespace {

RunConfig base(const std::string& command) {
  RunConfig c;
  c.command = command;
  c.generator = "random:n=40,clusters=3";
  c.workers = 1;
  return c;
}

}  // namespace

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c = base("sensitivity");
  c.algorithms = {"stable", "single"};
  c.epsilons = {1.0, 10.0, 1000.0};
  c.k_min = 2;
  c.k_max = 5;
  c.deletion = "frac:0.05";
  c.seed = 123;
  c.dbscan_eps = 0.25;
  const auto j = to_json(c);
  const RunConfig d = config_from_json(j);
  EXPECT_EQ(to_json(d), j);
  EXPECT_EQ(to_json(config_from_json(nlohmann::json{{"config", j}})), j);
}

TEST(RunConfig, RejectsBadValues) {
  EXPECT_THROW(config_from_json({{"colour", 1}}), ConfigError);
  EXPECT_THROW(config_from_json({{"k", "three"}}), ConfigError);
  auto bad = [](auto mutate) {
    RunConfig c = base("cluster");
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  bad([](RunConfig& c) { c.command = "plot"; });
  bad([](RunConfig& c) { c.input = "x.csv"; });
  bad([](RunConfig& c) { c.generator.clear(); });
  bad([](RunConfig& c) { c.algorithms = {"kmeans"}; });
  bad([](RunConfig& c) {
    c.algorithms = {"single"};
    c.epsilons = {10.0};
  });
  bad([](RunConfig& c) { c.epsilons = {-1.0}; });
  bad([](RunConfig& c) { c.deletion = "count:0"; });
  bad([](RunConfig& c) { c.trials = 0; });
  EXPECT_NO_THROW(base("cluster").validate());
}

TEST(RunConfig, KRange) {
  RunConfig c = base("cost-curve");
  EXPECT_EQ(c.ks(100).size(), 10u);
  c.k_max = 200;
  EXPECT_EQ(c.ks(30).back(), 30u);
  c.k = 4;
  EXPECT_EQ(c.ks(30), std::vector<std::size_t>{4});
  EXPECT_THROW(c.ks(3), ConfigError);
}

TEST(Generators, ParseAndExpand) {
  const auto g = parse_generator("line:n=100,d1=0.5");
  EXPECT_EQ(g.name, "line");
  EXPECT_EQ(g.count("n", 0), 100u);
  EXPECT_DOUBLE_EQ(g.number("d1", 0), 0.5);
  EXPECT_EQ(format_generator(g), "line:d1=0.5,n=100");
  const auto all = expand_generator("line:n=50:300:50,d1=0.5");
  ASSERT_EQ(all.size(), 6u);
  EXPECT_EQ(all.back().count("n", 0), 300u);
  EXPECT_THROW(expand_generator("line:n=5:1:1"), ConfigError);
  EXPECT_THROW(parse_generator("line:n"), ConfigError);
  EXPECT_THROW(generate(parse_generator("spiral"), 0), ConfigError);
  EXPECT_THROW(parse_generator("line:n=abc").count("n", 1), ConfigError);
}

TEST(Generators, SeededAndDistinctFromTrialStreams) {
  const auto a = generate(parse_generator("random:n=30"), 5);
  const auto b = generate(parse_generator("random:n=30"), 5);
  const auto c = generate(parse_generator("random:n=30"), 6);
  EXPECT_EQ(a.data.coords(), b.data.coords());
  EXPECT_NE(a.data.coords(), c.data.coords());
  const auto w = generate(parse_generator("wellclust:m=4,ppc=5"), 1);
  ASSERT_TRUE(w.truth);
  EXPECT_EQ(w.truth->size(), 4u);
}

TEST(Cluster, DeterministicAndMonotone) {
  for (const char* alg : {"stable", "clnss-greedy", "clnss-deterministic", "single", "ward"}) {
    RunConfig c = base("cluster");
    c.algorithms = {alg};
    const auto src = load_sources(c).front();
    const auto a = run_cluster(c, src);
    const auto b = run_cluster(c, src);
    EXPECT_EQ(a.dump(), b.dump());
    const auto& levels = a["levels"];
    ASSERT_EQ(levels.size(), 40u);
    const bool centered = !parse_linkage(alg);
    for (std::size_t k = 1; k < levels.size(); ++k) {
      EXPECT_EQ(levels[k]["blocks"].size(), k + 1);
      if (centered) {
        EXPECT_LE(levels[k]["euclidean_cost"].get<double>(), levels[k - 1]["euclidean_cost"].get<double>() + 1e-9)
            << alg;
      }
    }
    EXPECT_EQ(levels.back()["euclidean_cost"].get<double>(), 0.0);
  }
}

TEST(Cluster, SingleKLevel) {
  RunConfig c = base("cluster");
  c.k = 4;
  const auto j = run_cluster(c, load_sources(c).front());
  ASSERT_EQ(j["levels"].size(), 4u);
  EXPECT_EQ(j["levels"][3]["blocks"].size(), 4u);
  EXPECT_EQ(j["epsilon"], 1.0);
  EXPECT_EQ(j["config"]["seed"], 0);
}

TEST(Medoid, CostUsesBestMemberPerBlock) {
  const Dataset d(1, {0.0, 1.0, 5.0, 20.0, 21.0});
  EXPECT_EQ(block_medoid(d, {0, 1, 2}), 1u);
  EXPECT_DOUBLE_EQ(medoid_cost(d, Partition({{0, 1, 2}, {3, 4}})), 1 + 4 + 1);
}

TEST(CostCurve, CenteredCurvesNonIncreasingAndAllZeroAtN) {
  RunConfig c = base("cost-curve");
  c.generator = "random:n=20,clusters=2";
  c.algorithms = {"stable", "clnss-greedy", "single", "complete", "average", "ward"};
  c.k_max = 20;
  const auto src = load_sources(c).front();
  for (const auto& alg : c.algorithms) {
    const auto rows = cost_curve(src.data, alg, 1.0, c.ks(20), 0);
    ASSERT_EQ(rows.size(), 20u);
    if (!parse_linkage(alg)) {
      for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].cost, rows[i - 1].cost + 1e-9) << alg;
    }
    EXPECT_EQ(rows.back().cost, 0.0);
  }
  const auto text = run_cost_curve(c, {src});
  EXPECT_TRUE(text.starts_with("# config: "));
  EXPECT_NE(text.find("dataset,k,algorithm,epsilon,cost"), std::string::npos);
}

TEST(CostCurve, SingleLinkageCostsMoreOnClusteredDataWithOutliers) {
  RngStream rng(3);
  RandomPointsSpec spec;
  spec.n = 200;
  spec.clusters = 5;
  spec.cluster_std = 0.03;
  auto base_data = gen_random_points(spec, rng);
  std::vector<double> coords = base_data.coords();
  for (int i = 0; i < 10; ++i) {
    coords.push_back(rng.uniform(-200, 300));
    coords.push_back(rng.uniform(-200, 300));
  }
  const Dataset d(2, coords);
  const std::vector<std::size_t> ks{5, 6, 7, 8, 9, 10};
  const auto single = cost_curve(d, "single", 1.0, ks, 0);
  const auto ward = cost_curve(d, "ward", 1.0, ks, 0);
  double s = 0, w = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    s += single[i].cost;
    w += ward[i].cost;
  }
  EXPECT_GT(s, w);
}

// Splitting a block can raise the summed medoid cost: the three outer points
// lose the shared center they had.
TEST(Medoid, CostCanRiseWhenABlockSplits) {
  const double h = std::sqrt(3.0) / 2;
  const Dataset d(2, {0.0, 0.0, 1.0, 0.0, -0.5, h, -0.5, -h});
  const double whole = medoid_cost(d, Partition({{0, 1, 2, 3}}));
  const double split = medoid_cost(d, Partition({{0}, {1, 2, 3}}));
  EXPECT_DOUBLE_EQ(whole, 3.0);
  EXPECT_GT(split, whole);
}

TEST(Sensitivity, GridOutputs) {
  RunConfig c = base("sensitivity");
  c.algorithms = {"stable", "single"};
  c.epsilons = {1.0, 10.0};
  c.k_max = 3;
  c.trials = 4;
  const auto res = run_sensitivity(c, load_sources(c));
  // (stable x 2 eps + single) x 3 k
  EXPECT_EQ(res.summary["cells"].size(), 9u);
  EXPECT_EQ(std::count(res.csv.begin(), res.csv.end(), '\n'), 2 + 9 * 4);
  const auto again = run_sensitivity(c, load_sources(c));
  EXPECT_EQ(res.csv, again.csv);
  EXPECT_EQ(res.summary.dump(), again.summary.dump());
}

TEST(Sensitivity, DeterministicPointScheduleMatchesExact) {
  RunConfig c = base("sensitivity");
  c.generator = "line:n=30,d1=0.5";
  c.algorithms = {"single"};
  c.k = 2;
  c.deletion = "point";
  const auto src = load_sources(c);
  const auto res = run_sensitivity(c, src);
  const auto exact = avg_sensitivity_exact(*algorithm_by_name("single"), src.front().data, 2);
  EXPECT_DOUBLE_EQ(res.summary["cells"][0]["mean"].get<double>(), exact.mean);
}

TEST(Sensitivity, SweepsOverN) {
  RunConfig c = base("sensitivity");
  c.generator = "line:n=20:40:10,d1=0.5";
  c.algorithms = {"single"};
  c.k = 2;
  c.deletion = "point";
  const auto res = run_sensitivity(c, load_sources(c));
  ASSERT_EQ(res.summary["cells"].size(), 3u);
  EXPECT_EQ(res.summary["cells"][2]["n"], 40);
}

TEST(Clusterability, GeneratorTruthAndDbscan) {
  RunConfig c = base("clusterability");
  c.generator = "wellclust:m=4,ppc=8,sep=3";
  const auto src = load_sources(c).front();
  const auto j = run_clusterability(c, src);
  EXPECT_EQ(j["verdict"], true);
  EXPECT_EQ(j["table"].size(), 4u);
  EXPECT_EQ(j["source"], "generator");
  c.dbscan_eps = 0.8;
  c.min_samples = 2;
  const auto k = run_clusterability(c, src);
  EXPECT_EQ(k["source"], "dbscan");
  EXPECT_TRUE(k.contains("table"));
  c.dbscan_eps.reset();
  c.generator = "line:n=10";
  EXPECT_THROW(run_clusterability(c, load_sources(c).front()), ConfigError);
}
