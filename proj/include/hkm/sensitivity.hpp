#pragma once

// Partition distance and average-sensitivity estimation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hkm/core.hpp"
#include "hkm/hierarchy.hpp"
#include "hkm/linkage.hpp"
#include "hkm/parallel.hpp"
#include "hkm/rng.hpp"

namespace hkm {

/// Minimum-cost perfect matching on a square matrix (Hungarian method with
/// potentials, O(K^3)). Returns the optimal total cost.
inline std::int64_t min_cost_assignment(const std::vector<std::int64_t>& cost, std::size_t k) {
  constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(k + 1, 0), v(k + 1, 0), minv(k + 1);
  std::vector<std::size_t> match(k + 1, 0), way(k + 1, 0);
  std::vector<char> used(k + 1);
  for (std::size_t i = 1; i <= k; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      std::int64_t delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[(i0 - 1) * k + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= k; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  return -v[0];
}

namespace detail {

// |A_j sym-diff B_l| for all block pairs, padded with empty blocks to a
// square K x K matrix.
inline std::vector<std::int64_t> symmetric_difference_matrix(const Partition& a, const Partition& b,
                                                             std::size_t k) {
  std::vector<std::pair<Id, std::size_t>> owner;
  owner.reserve(a.ground_size());
  for (std::size_t j = 0; j < a.size(); ++j)
    for (Id id : a.block(j)) owner.emplace_back(id, j);
  std::sort(owner.begin(), owner.end());

  std::vector<std::int64_t> inter(k * k, 0);
  for (std::size_t l = 0; l < b.size(); ++l)
    for (Id id : b.block(l)) {
      auto it = std::lower_bound(owner.begin(), owner.end(), std::pair<Id, std::size_t>{id, 0});
      if (it != owner.end() && it->first == id) ++inter[it->second * k + l];
    }
  std::vector<std::int64_t> cost(k * k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto sa = j < a.size() ? static_cast<std::int64_t>(a.block(j).size()) : 0;
    for (std::size_t l = 0; l < k; ++l) {
      const auto sb = l < b.size() ? static_cast<std::int64_t>(b.block(l).size()) : 0;
      cost[j * k + l] = sa + sb - 2 * inter[j * k + l];
    }
  }
  return cost;
}

}  // namespace detail

/// min over block bijections of the summed symmetric differences; the side
/// with fewer blocks is padded with empty blocks.
inline std::size_t partition_distance(const Partition& a, const Partition& b) {
  const std::size_t k = std::max(a.size(), b.size());
  if (k == 0) return 0;
  return static_cast<std::size_t>(min_cost_assignment(detail::symmetric_difference_matrix(a, b, k), k));
}

inline constexpr std::size_t kBruteForceBlockGuard = 8;

// Exhaustive over all K! bijections. Test oracle.
inline std::size_t partition_distance_bruteforce(const Partition& a, const Partition& b) {
  const std::size_t k = std::max(a.size(), b.size());
  if (k > kBruteForceBlockGuard)
    throw SizeError("brute-force partition distance refused for " + std::to_string(k) + " blocks");
  if (k == 0) return 0;
  const auto cost = detail::symmetric_difference_matrix(a, b, k);
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  do {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < k; ++j) s += cost[j * k + perm[j]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<std::size_t>(best);
}

/// A hierarchical clustering procedure as seen by the harness: the
/// partitions at levels 1..max_k of one run, driven by the given stream.
struct Algorithm {
  std::string name;
  bool deterministic = true;
  std::optional<double> epsilon;
  std::function<std::vector<Partition>(const Dataset&, std::size_t max_k, RngStream&)> levels;
};

inline Algorithm tree_algorithm(HierarchyMode mode, ShiftMode shift, double epsilon = 1.0) {
  Algorithm alg;
  if (mode == HierarchyMode::Stable) {
    alg.name = "stable";
    alg.epsilon = epsilon;
  } else {
    alg.name = shift == ShiftMode::Zero ? "clnss-deterministic" : "clnss-greedy";
  }
  alg.deterministic = mode == HierarchyMode::Greedy && shift == ShiftMode::Zero;
  const PipelineOptions base{mode, epsilon, shift};
  alg.levels = [base](const Dataset& data, std::size_t max_k, RngStream& rng) {
    PipelineOptions opt = base;
    opt.max_levels = max_k;
    return clnss_pipeline(data, rng, opt).clustering.levels;
  };
  return alg;
}

inline Algorithm linkage_algorithm(Linkage kind) {
  Algorithm alg;
  alg.name = std::string(to_string(kind));
  alg.levels = [kind](const Dataset& data, std::size_t max_k, RngStream&) {
    return agglomerate(data, kind).cuts(max_k);
  };
  return alg;
}

inline std::optional<Algorithm> algorithm_by_name(std::string_view name, double epsilon = 1.0) {
  if (name == "stable") return tree_algorithm(HierarchyMode::Stable, ShiftMode::Random, epsilon);
  if (name == "clnss-greedy") return tree_algorithm(HierarchyMode::Greedy, ShiftMode::Random);
  if (name == "clnss-deterministic") return tree_algorithm(HierarchyMode::Greedy, ShiftMode::Zero);
  if (auto k = parse_linkage(name)) return linkage_algorithm(*k);
  return std::nullopt;
}

enum class DeletionMode { SinglePointAll, RandomCount, RandomFraction };

struct DeletionSchedule {
  DeletionMode mode = DeletionMode::SinglePointAll;
  double amount = 1.0;  // count for RandomCount, fraction for RandomFraction
  std::size_t trials = 1;

  // "point", "count:N" or "frac:F".
  static DeletionSchedule parse(std::string_view text, std::size_t trials = 1) {
    DeletionSchedule s;
    s.trials = trials;
    auto value = [&](std::size_t skip) {
      const std::string rest(text.substr(skip));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(rest, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != rest.size() || rest.empty()) throw InvalidInput("bad deletion amount: " + std::string(text));
      return v;
    };
    if (text == "point") {
      s.mode = DeletionMode::SinglePointAll;
    } else if (text.starts_with("count:")) {
      s.mode = DeletionMode::RandomCount;
      s.amount = value(6);
      if (s.amount < 1 || s.amount != std::floor(s.amount)) throw InvalidInput("deletion count must be a positive integer");
    } else if (text.starts_with("frac:")) {
      s.mode = DeletionMode::RandomFraction;
      s.amount = value(5);
      if (!(s.amount > 0.0 && s.amount < 1.0)) throw InvalidInput("deletion fraction must lie in (0, 1)");
    } else {
      throw InvalidInput("unknown deletion schedule: " + std::string(text));
    }
    if (s.trials < 1) throw InvalidInput("trials must be at least 1");
    return s;
  }

  std::string to_string() const {
    switch (mode) {
      case DeletionMode::SinglePointAll: return "point";
      case DeletionMode::RandomCount: return "count:" + std::to_string(static_cast<std::size_t>(amount));
      case DeletionMode::RandomFraction: {
        nlohmann::json j = amount;
        return "frac:" + j.dump();
      }
    }
    return "?";
  }

  std::size_t deletions_per_trial(std::size_t n) const {
    switch (mode) {
      case DeletionMode::SinglePointAll: return 1;
      case DeletionMode::RandomCount: return static_cast<std::size_t>(amount);
      case DeletionMode::RandomFraction:
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(amount * static_cast<double>(n))));
    }
    return 1;
  }

  // SinglePointAll deletes every point once, so it runs n trials.
  std::size_t trial_count(std::size_t n) const { return mode == DeletionMode::SinglePointAll ? n : trials; }
};

struct DeletionRecord {
  std::size_t trial = 0;
  std::vector<Id> deleted;
  std::size_t distance = 0;
};

struct SensitivityReport {
  std::string algorithm;
  std::optional<double> epsilon;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  DeletionSchedule schedule;
  std::vector<DeletionRecord> records;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

namespace detail {

inline std::vector<std::size_t> draw_deletions(std::size_t n, std::size_t count, RngStream& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace detail

/// Shared-seed sensitivity for several k from the same runs. Trial t uses
/// the stream derive(seed, {t, 0}) for both the run on P and the run on the
/// perturbed set; deletions come from derive(seed, {t, 1}).
inline std::vector<SensitivityReport> sensitivity_sweep(const Algorithm& alg, const Dataset& data,
                                                        const std::vector<std::size_t>& ks,
                                                        const DeletionSchedule& schedule, std::uint64_t seed,
                                                        std::size_t workers = 1) {
  const std::size_t n = data.size();
  const std::size_t per_trial = schedule.deletions_per_trial(n);
  if (per_trial >= n) throw InvalidInput("deletion schedule removes every point");
  if (ks.empty()) throw InvalidInput("no k requested");
  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
  for (auto k : ks)
    if (k < 1 || k > n - per_trial)
      throw InvalidInput("k = " + std::to_string(k) + " exceeds the size of the perturbed dataset");

  std::vector<Partition> fixed_original;
  if (alg.deterministic) {
    RngStream rng(seed);
    fixed_original = alg.levels(data, max_k, rng);
  }

  const std::size_t trials = schedule.trial_count(n);
  std::vector<std::vector<std::size_t>> dist(trials);
  std::vector<std::vector<Id>> deleted(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    std::vector<std::size_t> del;
    if (schedule.mode == DeletionMode::SinglePointAll) {
      del = {t};
    } else {
      RngStream drng(derive_seed(seed, {t, 1}));
      del = detail::draw_deletions(n, per_trial, drng);
    }
    const Dataset perturbed = data.without_positions(del);
    std::vector<Partition> original;
    const std::vector<Partition>* base = &fixed_original;
    if (!alg.deterministic) {
      RngStream rng(derive_seed(seed, {t, 0}));
      original = alg.levels(data, max_k, rng);
      base = &original;
    }
    RngStream rng(derive_seed(seed, {t, 0}));
    const auto after = alg.levels(perturbed, max_k, rng);
    for (auto k : ks) dist[t].push_back(partition_distance((*base)[k - 1], after[k - 1]));
    for (auto p : del) deleted[t].push_back(data.id(p));
  });

  std::vector<SensitivityReport> out;
  for (std::size_t q = 0; q < ks.size(); ++q) {
    SensitivityReport r{alg.name, alg.epsilon, ks[q], seed, schedule, {}, 0.0, 0.0};
    double sum = 0.0, sq = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      r.records.push_back({t, deleted[t], dist[t][q]});
      sum += static_cast<double>(dist[t][q]);
    }
    r.mean = sum / static_cast<double>(trials);
    for (const auto& rec : r.records) sq += (rec.distance - r.mean) * (rec.distance - r.mean);
    r.stddev = std::sqrt(sq / static_cast<double>(trials));
    out.push_back(std::move(r));
  }
  return out;
}

inline SensitivityReport avg_sensitivity_empirical(const Algorithm& alg, const Dataset& data, std::size_t k,
                                                   const DeletionSchedule& schedule, std::uint64_t seed,
                                                   std::size_t workers = 1) {
  return sensitivity_sweep(alg, data, {k}, schedule, seed, workers).front();
}

/// Mean partition distance at level k over every single-point deletion.
inline SensitivityReport avg_sensitivity_exact(const Algorithm& alg, const Dataset& data, std::size_t k,
                                               std::size_t workers = 1) {
  if (!alg.deterministic) throw InvalidInput("exact average sensitivity needs a deterministic algorithm");
  if (data.size() < 2 || k > data.size() - 1)
    throw InvalidInput("k must not exceed n - 1 for exact average sensitivity");
  return avg_sensitivity_empirical(alg, data, k, DeletionSchedule{}, 0, workers);
}

inline nlohmann::json summary_json(const SensitivityReport& r) {
  nlohmann::json j;
  j["algorithm"] = r.algorithm;
  j["epsilon"] = r.epsilon ? nlohmann::json(*r.epsilon) : nlohmann::json(nullptr);
  j["k"] = r.k;
  j["seed"] = r.seed;
  j["schedule"] = r.schedule.to_string();
  j["trials"] = r.records.size();
  j["mean"] = r.mean;
  j["stddev"] = r.stddev;
  return j;
}

inline void write_records_csv(std::ostream& os, const std::vector<SensitivityReport>& reports) {
  os << "algorithm,epsilon,k,trial,deleted_ids,distance\n";
  for (const auto& r : reports)
    for (const auto& rec : r.records) {
      os << r.algorithm << ',' << (r.epsilon ? nlohmann::json(*r.epsilon).dump() : "") << ',' << r.k << ','
         << rec.trial << ',';
      for (std::size_t i = 0; i < rec.deleted.size(); ++i) os << (i ? ";" : "") << rec.deleted[i];
      os << ',' << rec.distance << '\n';
    }
}

}  // namespace hkm
