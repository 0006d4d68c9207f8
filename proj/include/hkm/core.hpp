#pragma once

// Point sets, partitions and the k-median objective.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hkm/error.hpp"

namespace hkm {

using Id = std::size_t;

// Absolute tolerance for cost comparisons.
inline constexpr double kCostTolerance = 1e-9;

struct Point {
  std::vector<double> coords;

  std::size_t dim() const noexcept { return coords.size(); }
  operator std::span<const double>() const noexcept { return coords; }
};

inline double squared_dist(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw InvalidInput("dimension mismatch: " + std::to_string(p.size()) + " vs " +
                       std::to_string(q.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - q[i];
    s += diff * diff;
  }
  return s;
}

inline double euclidean_dist(std::span<const double> p, std::span<const double> q) {
  return std::sqrt(squared_dist(p, q));
}

/// Ordered point set with stable ids. Fresh datasets carry ids 0..n-1; a
/// dataset with points deleted keeps the surviving points' original ids, so
/// partitions computed on P and on P minus a point are directly comparable.
/// Ids are strictly increasing along the storage order.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::size_t dim, std::vector<double> coords)
      : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0) throw InvalidInput("dataset dimension must be positive");
    if (coords_.size() % dim_ != 0)
      throw InvalidInput("coordinate buffer is not a multiple of the dimension");
    ids_.resize(coords_.size() / dim_);
    std::iota(ids_.begin(), ids_.end(), Id{0});
    validate();
  }

  Dataset(std::size_t dim, std::vector<double> coords, std::vector<Id> ids)
      : dim_(dim), coords_(std::move(coords)), ids_(std::move(ids)) {
    if (dim_ == 0) throw InvalidInput("dataset dimension must be positive");
    if (coords_.size() != ids_.size() * dim_)
      throw InvalidInput("coordinate buffer does not match id count");
    for (std::size_t i = 1; i < ids_.size(); ++i)
      if (ids_[i] <= ids_[i - 1]) throw InvalidInput("dataset ids must be strictly increasing");
    validate();
  }

  static Dataset from_points(const std::vector<Point>& points) {
    if (points.empty()) throw InvalidInput("dataset must contain at least one point");
    const std::size_t d = points.front().dim();
    std::vector<double> coords;
    coords.reserve(points.size() * d);
    for (const auto& p : points) {
      if (p.dim() != d) throw InvalidInput("all points must share one dimension");
      coords.insert(coords.end(), p.coords.begin(), p.coords.end());
    }
    return Dataset(d, std::move(coords));
  }

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> point(std::size_t pos) const {
    return {coords_.data() + pos * dim_, dim_};
  }
  Id id(std::size_t pos) const { return ids_[pos]; }
  const std::vector<Id>& ids() const noexcept { return ids_; }
  const std::vector<double>& coords() const noexcept { return coords_; }

  // Storage position of an id, or size() when absent.
  std::size_t position_of(Id id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return size();
    return static_cast<std::size_t>(it - ids_.begin());
  }

  bool contains(Id id) const { return position_of(id) != size(); }

  // Copy with the points at the given storage positions removed.
  Dataset without_positions(std::vector<std::size_t> positions) const {
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    if (!positions.empty() && positions.back() >= size())
      throw InvalidInput("deletion position out of range");
    if (positions.size() >= size()) throw InvalidInput("cannot delete every point");
    std::vector<double> coords;
    std::vector<Id> ids;
    coords.reserve((size() - positions.size()) * dim_);
    ids.reserve(size() - positions.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (next < positions.size() && positions[next] == i) {
        ++next;
        continue;
      }
      ids.push_back(ids_[i]);
      auto p = point(i);
      coords.insert(coords.end(), p.begin(), p.end());
    }
    return Dataset(dim_, std::move(coords), std::move(ids));
  }

  Dataset without_position(std::size_t pos) const { return without_positions({pos}); }

 private:
  void validate() const {
    if (ids_.empty()) throw InvalidInput("dataset must contain at least one point");
    for (double c : coords_)
      if (!std::isfinite(c)) throw InvalidInput("dataset coordinates must be finite");
  }

  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<Id> ids_;
};

/// A set of disjoint, nonempty id blocks. Stored canonically: ids sorted
/// within each block, blocks ordered by their smallest id.
class Partition {
 public:
  Partition() = default;

  explicit Partition(std::vector<std::vector<Id>> blocks) : blocks_(std::move(blocks)) {
    for (auto& b : blocks_) {
      if (b.empty()) throw InvalidInput("partition blocks must be nonempty");
      std::sort(b.begin(), b.end());
    }
    std::sort(blocks_.begin(), blocks_.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::vector<Id> all = ground();
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
      throw InvalidInput("partition blocks must be pairwise disjoint");
  }

  // ids[i] goes to block labels[i]; block order follows smallest member.
  static Partition from_labels(std::span<const Id> ids, std::span<const std::size_t> labels) {
    if (ids.size() != labels.size()) throw InvalidInput("ids and labels differ in length");
    std::size_t max_label = 0;
    for (auto l : labels) max_label = std::max(max_label, l);
    std::vector<std::vector<Id>> blocks(ids.empty() ? 0 : max_label + 1);
    for (std::size_t i = 0; i < ids.size(); ++i) blocks[labels[i]].push_back(ids[i]);
    std::erase_if(blocks, [](const auto& b) { return b.empty(); });
    return Partition(std::move(blocks));
  }

  std::size_t size() const noexcept { return blocks_.size(); }
  const std::vector<std::vector<Id>>& blocks() const noexcept { return blocks_; }
  const std::vector<Id>& block(std::size_t i) const { return blocks_[i]; }

  std::vector<Id> ground() const {
    std::vector<Id> all;
    for (const auto& b : blocks_) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    return all;
  }

  std::size_t ground_size() const noexcept {
    std::size_t n = 0;
    for (const auto& b : blocks_) n += b.size();
    return n;
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<std::vector<Id>> blocks_;
};

enum class CostKind { Tree, Euclidean };

/// Ordered centers plus the nested partitions they induce. levels[t - 1] is
/// the t-block partition; a run may stop early, so levels.size() <= n.
struct HierarchicalClustering {
  std::vector<Id> centers;
  std::vector<Partition> levels;
  std::vector<double> per_level_cost;
  CostKind cost_kind = CostKind::Tree;

  std::size_t depth() const noexcept { return levels.size(); }

  const Partition& level(std::size_t k) const {
    if (k == 0 || k > levels.size())
      throw InvalidInput("level " + std::to_string(k) + " not available (have " +
                         std::to_string(levels.size()) + ")");
    return levels[k - 1];
  }
};

// Sum over P of the distance to the nearest center. Centers are given by id.
inline double kmedian_cost(const Dataset& data, std::span<const Id> centers) {
  if (centers.empty()) throw InvalidInput("center set must be nonempty");
  std::vector<std::size_t> pos;
  pos.reserve(centers.size());
  for (Id c : centers) {
    const std::size_t p = data.position_of(c);
    if (p == data.size()) throw InvalidInput("center id " + std::to_string(c) + " not in dataset");
    pos.push_back(p);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p : pos) best = std::min(best, euclidean_dist(data.point(i), data.point(p)));
    total += best;
  }
  return total;
}

struct DiscreteOptimum {
  std::vector<Id> centers;
  double cost = 0.0;
};

inline constexpr std::size_t kBruteForceGuard = 15;

/// Exhaustive k-median over centers drawn from the input points. Among
/// optima (within kCostTolerance) the lexicographically smallest sorted id
/// tuple wins.
inline DiscreteOptimum opt_kmedian_discrete(const Dataset& data, std::size_t k,
                                            std::size_t guard = kBruteForceGuard) {
  const std::size_t n = data.size();
  if (k < 1 || k > n) throw InvalidInput("k must lie in [1, n]");
  if (n > guard)
    throw SizeError("exhaustive k-median refused: n = " + std::to_string(n) + " exceeds guard " +
                    std::to_string(guard));

  std::vector<double> dist(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = euclidean_dist(data.point(i), data.point(j));

  std::vector<std::size_t> combo(k);
  std::iota(combo.begin(), combo.end(), std::size_t{0});
  DiscreteOptimum best{{}, std::numeric_limits<double>::infinity()};
  while (true) {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t c : combo) m = std::min(m, dist[i * n + c]);
      cost += m;
    }
    if (cost < best.cost - kCostTolerance) {
      best.cost = cost;
      best.centers.clear();
      for (std::size_t c : combo) best.centers.push_back(data.id(c));
    }
    // Next combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && combo[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++combo[i - 1];
    for (std::size_t j = i; j < k; ++j) combo[j] = combo[j - 1] + 1;
  }
  return best;
}

struct DistanceExtremes {
  double d_min = 0.0;
  double d_max = 0.0;
  double aspect_ratio = 1.0;  // d_max / d_min
};

inline DistanceExtremes distance_extremes(const Dataset& data) {
  if (data.size() < 2) throw InvalidInput("distance extremes need at least two points");
  DistanceExtremes ex{std::numeric_limits<double>::infinity(), 0.0, 1.0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = i + 1; j < data.size(); ++j) {
      const double d = euclidean_dist(data.point(i), data.point(j));
      if (d == 0.0)
        throw DegenerateInput("duplicate points: ids " + std::to_string(data.id(i)) + " and " +
                              std::to_string(data.id(j)) + " coincide");
      ex.d_min = std::min(ex.d_min, d);
      ex.d_max = std::max(ex.d_max, d);
    }
  }
  ex.aspect_ratio = ex.d_max / ex.d_min;
  return ex;
}

struct NestedCheck {
  bool ok = true;
  std::size_t violation_level = 0;  // 1-based level of first violation
  std::string reason;

  explicit operator bool() const noexcept { return ok; }
};

/// levels[t - 1] must have t blocks and refine levels[t - 2] by splitting
/// exactly one block in two.
inline NestedCheck check_nested(std::span<const Partition> levels) {
  auto fail = [](std::size_t level, std::string why) {
    return NestedCheck{false, level, std::move(why)};
  };
  for (std::size_t t = 0; t < levels.size(); ++t) {
    if (levels[t].size() != t + 1)
      return fail(t + 1, "expected " + std::to_string(t + 1) + " blocks, found " +
                             std::to_string(levels[t].size()));
    if (t == 0) continue;
    const Partition& coarse = levels[t - 1];
    const Partition& fine = levels[t];
    if (coarse.ground() != fine.ground()) return fail(t + 1, "ground set changed");
    std::vector<std::pair<Id, std::size_t>> owner;
    for (std::size_t b = 0; b < coarse.size(); ++b)
      for (Id id : coarse.block(b)) owner.emplace_back(id, b);
    std::sort(owner.begin(), owner.end());
    auto block_of = [&](Id id) {
      return std::lower_bound(owner.begin(), owner.end(), std::pair<Id, std::size_t>{id, 0})->second;
    };
    for (const auto& blk : fine.blocks()) {
      const std::size_t b = block_of(blk.front());
      for (Id id : blk)
        if (block_of(id) != b) return fail(t + 1, "block straddles two parent blocks");
    }
  }
  return {};
}

inline NestedCheck check_nested(const HierarchicalClustering& h) { return check_nested(h.levels); }

}  // namespace hkm
