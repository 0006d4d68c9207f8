#pragma once

// Agglomerative baselines: single, complete, average and Ward linkage.

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hkm/core.hpp"

namespace hkm {

enum class Linkage { Single, Complete, Average, Ward };

inline std::string_view to_string(Linkage kind) {
  switch (kind) {
    case Linkage::Single: return "single";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
    case Linkage::Ward: return "ward";
  }
  return "?";
}

inline std::optional<Linkage> parse_linkage(std::string_view s) {
  if (s == "single") return Linkage::Single;
  if (s == "complete") return Linkage::Complete;
  if (s == "average") return Linkage::Average;
  if (s == "ward") return Linkage::Ward;
  return std::nullopt;
}

namespace detail {

inline std::vector<std::size_t> positions_of(const Dataset& data, std::span<const Id> ids) {
  std::vector<std::size_t> pos;
  pos.reserve(ids.size());
  for (Id id : ids) {
    const auto p = data.position_of(id);
    if (p == data.size()) throw InvalidInput("id " + std::to_string(id) + " not in dataset");
    pos.push_back(p);
  }
  return pos;
}

inline double within_sum_of_squares(const Dataset& data, std::span<const std::size_t> pos) {
  std::vector<double> mu(data.dim(), 0.0);
  for (auto p : pos)
    for (std::size_t k = 0; k < data.dim(); ++k) mu[k] += data.point(p)[k];
  for (auto& v : mu) v /= static_cast<double>(pos.size());
  double s = 0.0;
  for (auto p : pos) s += squared_dist(data.point(p), mu);
  return s;
}

}  // namespace detail

/// Merge cost of two disjoint clusters, evaluated from the definitions.
inline double linkage_cost(const Dataset& data, std::span<const Id> a, std::span<const Id> b, Linkage kind) {
  if (a.empty() || b.empty()) throw InvalidInput("linkage clusters must be nonempty");
  auto pa = detail::positions_of(data, a);
  auto pb = detail::positions_of(data, b);
  {
    auto sa = pa, sb = pb;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<std::size_t> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
    if (!common.empty()) throw InvalidInput("linkage clusters must be disjoint");
  }
  if (kind == Linkage::Ward) {
    std::vector<std::size_t> merged = pa;
    merged.insert(merged.end(), pb.begin(), pb.end());
    return detail::within_sum_of_squares(data, merged) - detail::within_sum_of_squares(data, pa) -
           detail::within_sum_of_squares(data, pb);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
  for (auto i : pa)
    for (auto j : pb) {
      const double d = euclidean_dist(data.point(i), data.point(j));
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      sum += d;
    }
  switch (kind) {
    case Linkage::Single: return lo;
    case Linkage::Complete: return hi;
    default: return sum / static_cast<double>(pa.size() * pb.size());
  }
}

/// One agglomeration step. Clusters are named by their smallest member id.
struct Merge {
  Id a = 0;  // representative of the cluster with the smaller smallest-id
  Id b = 0;
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  double cost = 0.0;
  std::size_t blocks_after = 0;
};

class Dendrogram {
 public:
  Dendrogram() = default;
  Dendrogram(std::vector<Id> ids, std::vector<Merge> merges)
      : ids_(std::move(ids)), merges_(std::move(merges)) {}

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<Merge>& merges() const noexcept { return merges_; }
  const std::vector<Id>& ids() const noexcept { return ids_; }

  // The partition remaining after n - k merges.
  Partition cut(std::size_t k) const {
    const std::size_t n = ids_.size();
    if (k < 1 || k > n) throw InvalidInput("cut level must lie in [1, n]");
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    auto pos = [&](Id id) { return static_cast<std::size_t>(std::lower_bound(ids_.begin(), ids_.end(), id) - ids_.begin()); };
    for (std::size_t t = 0; t < n - k; ++t) {
      const auto ra = find(pos(merges_[t].a));
      const auto rb = find(pos(merges_[t].b));
      parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = find(i);
    return Partition::from_labels(ids_, labels);
  }

  // Every cut from 1 to max_k blocks, in one pass.
  std::vector<Partition> cuts(std::size_t max_k) const {
    std::vector<Partition> out;
    const std::size_t top = std::min(max_k, size());
    out.reserve(top);
    for (std::size_t k = 1; k <= top; ++k) out.push_back(cut(k));
    return out;
  }

 private:
  std::vector<Id> ids_;
  std::vector<Merge> merges_;
};

/// Repeatedly merges the cheapest pair of clusters. Pair costs are kept in a
/// matrix refreshed after each merge; ties go to the lexicographically
/// smallest (smallest id of A, smallest id of B).
inline Dendrogram agglomerate(const Dataset& data, Linkage kind) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  std::vector<double> cost(n * n, 0.0);
  std::vector<double> dist_sum;  // average linkage: summed pair distances
  std::vector<double> centroid(data.coords());
  std::vector<std::size_t> count(n, 1);

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dd = kind == Linkage::Ward ? 0.5 * squared_dist(data.point(i), data.point(j))
                                              : euclidean_dist(data.point(i), data.point(j));
      cost[i * n + j] = cost[j * n + i] = dd;
    }
  if (kind == Linkage::Average) dist_sum = cost;

  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), std::size_t{0});
  std::vector<Merge> merges;
  merges.reserve(n > 0 ? n - 1 : 0);

  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t x = 0; x < active.size(); ++x) {
      const std::size_t a = active[x];
      const double* row = cost.data() + a * n;
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const double c = row[active[y]];
        if (c < best) {
          best = c;
          ba = x;
          bb = y;
        }
      }
    }
    const std::size_t a = active[ba], b = active[bb];
    merges.push_back({data.id(a), data.id(b), count[a], count[b], best, active.size() - 1});

    const std::size_t na = count[a], nb = count[b];
    for (std::size_t k = 0; k < d; ++k)
      centroid[a * d + k] = (centroid[a * d + k] * na + centroid[b * d + k] * nb) / static_cast<double>(na + nb);
    count[a] = na + nb;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bb));

    for (std::size_t c : active) {
      if (c == a) continue;
      double v = 0.0;
      switch (kind) {
        case Linkage::Single: v = std::min(cost[a * n + c], cost[b * n + c]); break;
        case Linkage::Complete: v = std::max(cost[a * n + c], cost[b * n + c]); break;
        case Linkage::Average: {
          dist_sum[a * n + c] = dist_sum[c * n + a] = dist_sum[a * n + c] + dist_sum[b * n + c];
          v = dist_sum[a * n + c] / static_cast<double>(count[a] * count[c]);
          break;
        }
        case Linkage::Ward: {
          double sq = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            const double diff = centroid[a * d + k] - centroid[c * d + k];
            sq += diff * diff;
          }
          v = static_cast<double>(count[a] * count[c]) / static_cast<double>(count[a] + count[c]) * sq;
          break;
        }
      }
      cost[a * n + c] = cost[c * n + a] = v;
    }
  }
  return Dendrogram(data.ids(), std::move(merges));
}

}  // namespace hkm
