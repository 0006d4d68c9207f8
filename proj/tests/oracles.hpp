#pragma once

// Independent reference implementations used by the tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "hkm/hkm.hpp"

namespace oracle {

using hkm::Dataset;
using hkm::Id;
using hkm::Partition;

// n distinct points with coordinates uniform on [0, spread).
inline Dataset random_dataset(hkm::RngStream& rng, std::size_t n, std::size_t d, double spread = 10.0) {
  std::set<std::vector<double>> seen;
  std::vector<double> coords;
  while (seen.size() < n) {
    std::vector<double> p(d);
    for (auto& v : p) v = rng.uniform(0.0, spread);
    if (seen.insert(p).second) coords.insert(coords.end(), p.begin(), p.end());
  }
  return Dataset(d, coords);
}

// Random partition of ids 0..n-1 into exactly k nonempty blocks.
inline Partition random_partition(hkm::RngStream& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = i < k ? i : rng.below(k);
  for (std::size_t i = n; i > 1; --i) std::swap(label[i - 1], label[rng.below(i)]);
  std::vector<Id> ids(n);
  std::iota(ids.begin(), ids.end(), Id{0});
  return Partition::from_labels(ids, label);
}

// Tree distance from cell geometry: two placed points share the level-j
// cell iff floor(x / (root_side / 2^j)) agrees in every coordinate.
inline double geometric_tree_dist(const hkm::Rhst& t, const Dataset& placed, std::size_t a, std::size_t b) {
  if (a == b) return 0.0;
  const std::size_t L = t.depth();
  std::size_t lca = 0;
  for (std::size_t j = 1; j <= L; ++j) {
    const double side = t.root_side() / std::ldexp(1.0, static_cast<int>(j));
    bool same = true;
    for (std::size_t k = 0; k < placed.dim(); ++k)
      same = same && std::floor(placed.point(a)[k] / side) == std::floor(placed.point(b)[k] / side);
    if (!same) break;
    lca = j;
  }
  double d = 0.0;
  for (std::size_t i = lca + 1; i <= L; ++i) d += 2.0 * t.edge_weight(i);
  return d;
}

// Sum of min tree distances over an explicit center set.
inline double tree_cost_bruteforce(const hkm::Rhst& t, const std::vector<std::size_t>& centers) {
  double total = 0.0;
  for (std::size_t p = 0; p < t.size(); ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (auto c : centers) best = std::min(best, static_cast<double>(t.dist_units(p, c)) * t.unit());
    total += best;
  }
  return total;
}

// Exhaustive tree k-median over all k-subsets of leaves.
inline double tree_opt_bruteforce(const hkm::Rhst& t, std::size_t k) {
  const std::size_t n = t.size();
  std::vector<char> pick(n, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), 1);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::vector<std::size_t> centers;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) centers.push_back(i);
    best = std::min(best, tree_cost_bruteforce(t, centers));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

// Components left after deleting the k-1 heaviest edges of a Euclidean MST
// (Kruskal over all pairs).
inline Partition mst_components(const Dataset& data, std::size_t k) {
  const std::size_t n = data.size();
  struct Edge {
    double w;
    std::size_t a, b;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({hkm::euclidean_dist(data.point(i), data.point(j)), i, j});
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = n;
  for (const auto& e : edges) {
    if (components == k) break;
    const auto ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    parent[ra] = rb;
    --components;
  }
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = find(i);
  return Partition::from_labels(data.ids(), label);
}

// Partition distance by direct enumeration of block bijections, computing
// each symmetric difference with std::set_symmetric_difference.
inline std::size_t partition_distance_sets(const Partition& a, const Partition& b) {
  const std::size_t k = std::max(a.size(), b.size());
  auto block = [](const Partition& p, std::size_t i) { return i < p.size() ? p.block(i) : std::vector<Id>{}; };
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t best = std::numeric_limits<std::size_t>::max();
  do {
    std::size_t s = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto x = block(a, j), y = block(b, perm[j]);
      std::vector<Id> diff;
      std::set_symmetric_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(diff));
      s += diff.size();
    }
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace oracle
