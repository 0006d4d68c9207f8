#pragma once

// Quadtree-based 2-RHST: all leaves on one level, edge weights halving per
// level. Tree distances are integer multiples of unit() and are handled as
// exact int64 "units" internally so greedy tie-breaking is exact.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hkm/core.hpp"
#include "hkm/rng.hpp"

namespace hkm {

using TreeUnits = std::int64_t;

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();
inline constexpr std::size_t kMaxRhstDepth = 56;

struct RhstNode {
  std::size_t level = 0;
  std::vector<double> origin;  // lower corner of the half-open cell
  double side = 0.0;
  std::size_t parent = kNoNode;
  std::vector<std::size_t> children;
  std::optional<Id> label;
  std::size_t leaf_count = 0;
  std::size_t point = kNoNode;  // storage position, leaves only
};

class Rhst {
 public:
  const std::vector<RhstNode>& nodes() const noexcept { return nodes_; }
  const RhstNode& node(std::size_t i) const { return nodes_[i]; }
  std::size_t root() const noexcept { return 0; }

  // Leaf level L; the root is level 0.
  std::size_t depth() const noexcept { return depth_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  double lambda() const noexcept { return lambda_; }
  double lambda_pow2() const noexcept { return lambda_pow2_; }
  // Side of the root cube: the smallest power of two >= lambda_pow2 that
  // strictly contains every (shifted) coordinate.
  double root_side() const noexcept { return root_side_; }
  const std::vector<double>& shift() const noexcept { return shift_; }
  void set_shift(std::vector<double> s) { shift_ = std::move(s); }
  const std::vector<Id>& ids() const noexcept { return ids_; }

  // Weight of the edge joining a level-i node to its parent.
  double edge_weight(std::size_t level) const {
    return root_side_ * std::sqrt(static_cast<double>(dim_)) / std::ldexp(1.0, static_cast<int>(level));
  }

  // Tree distance represented by one unit.
  double unit() const {
    return 2.0 * root_side_ * std::sqrt(static_cast<double>(dim_)) /
           std::ldexp(1.0, static_cast<int>(depth_));
  }

  // Distance in units between two leaves whose lowest common ancestor sits
  // at the given level.
  TreeUnits units_at_lca(std::size_t lca_level) const {
    return (TreeUnits{1} << (depth_ - lca_level)) - 1;
  }

  std::size_t position_of(Id id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id)
      throw InvalidInput("id " + std::to_string(id) + " is not a leaf of this tree");
    return static_cast<std::size_t>(it - ids_.begin());
  }

  std::size_t leaf_of(std::size_t pos) const { return path_[pos * (depth_ + 1) + depth_]; }

  // Node on pos's root-to-leaf path at the given level.
  std::size_t ancestor(std::size_t pos, std::size_t level) const {
    return path_[pos * (depth_ + 1) + level];
  }

  std::size_t lca_level(std::size_t a, std::size_t b) const {
    std::size_t j = 0;
    while (j < depth_ && ancestor(a, j + 1) == ancestor(b, j + 1)) ++j;
    return j;
  }

  TreeUnits dist_units(std::size_t a, std::size_t b) const {
    if (a == b) return 0;
    return units_at_lca(lca_level(a, b));
  }

  double tree_dist(Id p, Id q) const {
    return static_cast<double>(dist_units(position_of(p), position_of(q))) * unit();
  }

  // Sum over all leaves of the unit distance to the nearest center.
  TreeUnits tree_cost_units(std::span<const std::size_t> center_positions) const {
    if (center_positions.empty()) throw InvalidInput("center set must be nonempty");
    std::vector<char> covered(nodes_.size(), 0);
    for (std::size_t c : center_positions) {
      for (std::size_t v = leaf_of(c); v != kNoNode && !covered[v]; v = nodes_[v].parent)
        covered[v] = 1;
    }
    TreeUnits total = 0;
    for (std::size_t p = 0; p < size(); ++p) {
      std::size_t j = depth_;
      while (!covered[ancestor(p, j)]) --j;
      if (j < depth_) total += units_at_lca(j);
    }
    return total;
  }

  double tree_cost(std::span<const Id> centers) const {
    std::vector<std::size_t> pos;
    pos.reserve(centers.size());
    for (Id c : centers) pos.push_back(position_of(c));
    return static_cast<double>(tree_cost_units(pos)) * unit();
  }

  void set_label(std::size_t node, Id label) {
    if (nodes_[node].label) throw InvalidInput("node already labeled");
    nodes_[node].label = label;
  }

  void clear_labels() {
    for (auto& n : nodes_) n.label.reset();
  }

  bool has_labels() const {
    return std::any_of(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.label.has_value(); });
  }

  nlohmann::json to_json() const {
    nlohmann::json out;
    out["depth"] = depth_;
    out["dim"] = dim_;
    out["lambda"] = lambda_;
    out["lambda_pow2"] = lambda_pow2_;
    out["root_side"] = root_side_;
    out["shift"] = shift_;
    out["root"] = node_json(root());
    return out;
  }

  std::string to_text() const {
    std::ostringstream os;
    write_text(os, root(), 0);
    return os.str();
  }

  friend Rhst construct_2rhst(const Dataset& placed, std::optional<double> lambda);

 private:
  nlohmann::json node_json(std::size_t v) const {
    const auto& n = nodes_[v];
    nlohmann::json j;
    j["level"] = n.level;
    j["origin"] = n.origin;
    j["side"] = n.side;
    j["leaves"] = n.leaf_count;
    if (n.label) j["label"] = *n.label;
    if (n.point != kNoNode) j["point"] = ids_[n.point];
    if (!n.children.empty()) {
      j["children"] = nlohmann::json::array();
      for (auto c : n.children) j["children"].push_back(node_json(c));
    }
    return j;
  }

  void write_text(std::ostringstream& os, std::size_t v, std::size_t indent) const {
    const auto& n = nodes_[v];
    os << std::string(indent * 2, ' ') << "L" << n.level << " [";
    for (std::size_t k = 0; k < n.origin.size(); ++k) os << (k ? "," : "") << n.origin[k];
    os << "] side=" << n.side;
    if (n.label) os << " label=" << *n.label;
    if (n.point != kNoNode) os << " point=" << ids_[n.point];
    os << '\n';
    for (auto c : n.children) write_text(os, c, indent + 1);
  }

  std::vector<RhstNode> nodes_;
  std::vector<std::size_t> path_;  // size() x (depth + 1)
  std::vector<Id> ids_;
  std::size_t depth_ = 0;
  std::size_t dim_ = 0;
  double lambda_ = 1.0;
  double lambda_pow2_ = 1.0;
  double root_side_ = 1.0;
  std::vector<double> shift_;
};

inline double next_pow2(double x) {
  double p = 1.0;
  while (p < x) p *= 2.0;
  return p;
}

/// Builds the tree over points already placed in the nonnegative orthant
/// (normalized and shifted). `lambda` is the nominal cube side; it defaults
/// to the largest coordinate. Cells halve until side 1; any unit cell still
/// holding two points keeps halving, and shallower leaves are then extended
/// with single-child chains so every leaf ends on the same level.
inline Rhst construct_2rhst(const Dataset& placed, std::optional<double> lambda = std::nullopt) {
  const std::size_t n = placed.size();
  const std::size_t d = placed.dim();
  double max_coord = 0.0;
  for (double c : placed.coords()) {
    if (c < 0.0) throw InvalidInput("construct_2rhst expects nonnegative coordinates");
    max_coord = std::max(max_coord, c);
  }

  Rhst t;
  t.dim_ = d;
  t.ids_ = placed.ids();
  t.lambda_ = std::max(lambda.value_or(max_coord), 1.0);
  t.lambda_pow2_ = next_pow2(t.lambda_);
  t.root_side_ = t.lambda_pow2_;
  while (t.root_side_ <= max_coord) t.root_side_ *= 2.0;
  const auto base_depth = static_cast<std::size_t>(std::lround(std::log2(t.root_side_)));
  t.shift_.assign(d, 0.0);

  struct Pending {
    std::size_t node;
    std::vector<std::size_t> points;
  };
  t.nodes_.push_back(RhstNode{0, std::vector<double>(d, 0.0), t.root_side_, kNoNode, {}, {}, n, kNoNode});
  std::vector<Pending> stack;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  stack.push_back({0, std::move(all)});
  std::vector<std::size_t> leaves;

  while (!stack.empty()) {
    Pending cur = std::move(stack.back());
    stack.pop_back();
    const RhstNode parent = t.nodes_[cur.node];
    if (parent.level >= base_depth && cur.points.size() == 1) {
      t.nodes_[cur.node].point = cur.points.front();
      leaves.push_back(cur.node);
      continue;
    }
    if (parent.level + 1 > kMaxRhstDepth) {
      throw DegenerateInput("points " + std::to_string(placed.id(cur.points[0])) + " and " +
                            std::to_string(placed.id(cur.points[1])) +
                            " cannot be separated by the quadtree (duplicate or nearly coincident)");
    }
    const double half = parent.side / 2.0;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t p : cur.points) {
      std::string key(d, '0');
      auto x = placed.point(p);
      for (std::size_t k = 0; k < d; ++k)
        if (x[k] >= parent.origin[k] + half) key[k] = '1';
      groups[key].push_back(p);
    }
    // Push in reverse so children are expanded in key order.
    std::vector<std::size_t> child_ids;
    for (auto& [key, pts] : groups) {
      RhstNode child;
      child.level = parent.level + 1;
      child.origin = parent.origin;
      for (std::size_t k = 0; k < d; ++k)
        if (key[k] == '1') child.origin[k] += half;
      child.side = half;
      child.parent = cur.node;
      child.leaf_count = pts.size();
      t.nodes_.push_back(std::move(child));
      child_ids.push_back(t.nodes_.size() - 1);
    }
    t.nodes_[cur.node].children = child_ids;
    std::size_t i = child_ids.size();
    for (auto it = groups.rbegin(); it != groups.rend(); ++it) stack.push_back({child_ids[--i], std::move(it->second)});
  }

  std::size_t depth = 0;
  for (auto v : leaves) depth = std::max(depth, t.nodes_[v].level);
  // Extend shallow leaves down to the common leaf level.
  for (auto& v : leaves) {
    while (t.nodes_[v].level < depth) {
      const std::size_t p = t.nodes_[v].point;
      RhstNode child;
      child.level = t.nodes_[v].level + 1;
      child.side = t.nodes_[v].side / 2.0;
      child.origin = t.nodes_[v].origin;
      auto x = placed.point(p);
      for (std::size_t k = 0; k < d; ++k)
        if (x[k] >= child.origin[k] + child.side) child.origin[k] += child.side;
      child.parent = v;
      child.leaf_count = 1;
      child.point = p;
      t.nodes_[v].point = kNoNode;
      t.nodes_.push_back(std::move(child));
      t.nodes_[v].children = {t.nodes_.size() - 1};
      v = t.nodes_.size() - 1;
    }
  }
  t.depth_ = depth;
  if (depth >= 62 || static_cast<double>(n) * std::ldexp(1.0, static_cast<int>(depth)) > 0x1.0p62)
    throw DegenerateInput("aspect ratio too large for exact tree costs");

  t.path_.assign(n * (depth + 1), kNoNode);
  for (auto leaf : leaves) {
    const std::size_t p = t.nodes_[leaf].point;
    for (std::size_t v = leaf; v != kNoNode; v = t.nodes_[v].parent) t.path_[p * (depth + 1) + t.nodes_[v].level] = v;
  }
  return t;
}

/// Points rescaled so the minimum pairwise distance is 1 and translated so
/// the bounding box starts at the origin. lambda = Dmax / Dmin.
struct Normalization {
  Dataset placed;
  double scale = 1.0;
  std::vector<double> offset;  // subtracted before scaling
  double lambda = 1.0;
};

inline Normalization normalize(const Dataset& data) {
  const std::size_t d = data.dim();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t k = 0; k < d; ++k) lo[k] = std::min(lo[k], data.point(i)[k]);
  double scale = 1.0;
  double lambda = 1.0;
  if (data.size() >= 2) {
    const auto ex = distance_extremes(data);
    scale = 1.0 / ex.d_min;
    lambda = ex.aspect_ratio;
  }
  std::vector<double> coords(data.coords().size());
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t k = 0; k < d; ++k) coords[i * d + k] = (data.point(i)[k] - lo[k]) * scale;
  return {Dataset(d, std::move(coords), data.ids()), scale, std::move(lo), lambda};
}

// Uniform shift vector from [0, lambda)^d.
inline std::vector<double> draw_shift(std::size_t dim, double lambda, RngStream& rng) {
  std::vector<double> s(dim);
  for (auto& v : s) v = rng.uniform(0.0, lambda);
  return s;
}

inline Dataset apply_shift(const Dataset& data, std::span<const double> shift) {
  if (shift.size() != data.dim()) throw InvalidInput("shift dimension mismatch");
  std::vector<double> coords = data.coords();
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t k = 0; k < data.dim(); ++k) coords[i * data.dim() + k] += shift[k];
  return Dataset(data.dim(), std::move(coords), data.ids());
}

inline Dataset random_shift(const Dataset& data, double lambda, RngStream& rng) {
  if (lambda < 1.0) throw InvalidInput("lambda must be at least 1");
  return apply_shift(data, draw_shift(data.dim(), lambda, rng));
}

}  // namespace hkm
