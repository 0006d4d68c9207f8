#pragma once

// Top-down hierarchical k-median on a 2-RHST: the deterministic greedy
// center sequence and its exponential-mechanism counterpart.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "hkm/core.hpp"
#include "hkm/rhst.hpp"
#include "hkm/rng.hpp"

namespace hkm {

/// Probabilities proportional to exp(-cost / lambda). The minimum cost is
/// subtracted before exponentiating; the distribution is unchanged by it.
inline std::vector<double> exp_mechanism_probabilities(std::span<const double> costs, double lambda) {
  if (costs.empty()) throw InvalidInput("exponential mechanism needs at least one candidate");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be positive and finite");
  for (double c : costs)
    if (!std::isfinite(c)) throw InvalidInput("candidate costs must be finite");
  const double lo = *std::min_element(costs.begin(), costs.end());
  std::vector<double> w(costs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) total += (w[i] = std::exp(-(costs[i] - lo) / lambda));
  for (auto& x : w) x /= total;
  return w;
}

namespace detail {

// Exponential race: candidate x wins with key -log(E_x) - shifted_cost_x /
// lambda maximal, where E_x ~ Exp(1) is hashed from one stream draw and the
// candidate's key. This samples exactly from exp(-cost / lambda). Because
// the noise of a candidate depends only on its own key, runs on P and on P
// minus a point that share a stream see identical noise for every common
// candidate. Consumes exactly one stream value.
inline std::size_t sample_keyed(std::span<const double> shifted_costs, double lambda, std::span<const Id> keys,
                                std::span<const char> eligible, RngStream& rng) {
  const std::uint64_t round_seed = rng.next_u64();
  std::size_t best = shifted_costs.size();
  double best_score = 0.0;
  for (std::size_t i = 0; i < shifted_costs.size(); ++i) {
    if (!eligible.empty() && !eligible[i]) continue;
    const std::uint64_t h = mix64(round_seed ^ mix64(static_cast<std::uint64_t>(keys[i])));
    const double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
    const double score = -std::log(-std::log(u)) - shifted_costs[i] / lambda;
    if (best == shifted_costs.size() || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best == shifted_costs.size()) throw InvalidInput("no eligible candidate");
  return best;
}

}  // namespace detail

inline std::size_t exp_mechanism_sample(std::span<const double> costs, double lambda, RngStream& rng) {
  if (costs.empty()) throw InvalidInput("exponential mechanism needs at least one candidate");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be positive and finite");
  const double lo = *std::min_element(costs.begin(), costs.end());
  std::vector<double> shifted(costs.size());
  std::vector<Id> keys(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!std::isfinite(costs[i])) throw InvalidInput("candidate costs must be finite");
    shifted[i] = costs[i] - lo;
    keys[i] = i;
  }
  return detail::sample_keyed(shifted, lambda, keys, {}, rng);
}

/// Incremental center-set state for the tree k-median objective. Candidate
/// costs for all points are evaluated in O(n L) per round using the fact
/// that every uncovered subtree shares one current distance.
class GreedyState {
 public:
  explicit GreedyState(const Rhst& tree)
      : tree_(&tree),
        center_count_(tree.nodes().size(), 0),
        leaf_cost_(tree.size(), kUnset),
        is_center_(tree.size(), 0) {}

  const std::vector<std::size_t>& chosen() const noexcept { return chosen_; }
  std::size_t round() const noexcept { return chosen_.size(); }
  bool is_center(std::size_t pos) const { return is_center_[pos] != 0; }
  TreeUnits current_cost() const noexcept { return total_; }
  const std::vector<TreeUnits>& leaf_costs() const noexcept { return leaf_cost_; }

  // COST_T(P, {x} U S) in units, for every position x.
  std::vector<TreeUnits> candidate_costs() const {
    const Rhst& t = *tree_;
    const std::size_t L = t.depth();
    std::vector<TreeUnits> out(t.size());
    for (std::size_t x = 0; x < t.size(); ++x) {
      if (chosen_.empty()) {
        TreeUnits c = 0;
        for (std::size_t j = 0; j < L; ++j) {
          const auto here = static_cast<TreeUnits>(t.node(t.ancestor(x, j)).leaf_count);
          const auto below = static_cast<TreeUnits>(t.node(t.ancestor(x, j + 1)).leaf_count);
          c += (here - below) * t.units_at_lca(j);
        }
        out[x] = c;
        continue;
      }
      std::size_t top = L;  // deepest covered ancestor level
      while (center_count_[t.ancestor(x, top)] == 0) --top;
      const TreeUnits current = t.units_at_lca(top);
      TreeUnits gain = 0;
      for (std::size_t j = top + 1; j <= L; ++j) {
        const auto here = static_cast<TreeUnits>(t.node(t.ancestor(x, j)).leaf_count);
        const auto below = j < L ? static_cast<TreeUnits>(t.node(t.ancestor(x, j + 1)).leaf_count) : 0;
        const TreeUnits now = j < L ? t.units_at_lca(j) : 0;
        gain += (here - below) * (current - now);
      }
      out[x] = total_ - gain;
    }
    return out;
  }

  void add_center(std::size_t pos) {
    const Rhst& t = *tree_;
    if (is_center_[pos]) throw InvalidInput("point is already a center");
    for (std::size_t j = 0; j <= t.depth(); ++j) ++center_count_[t.ancestor(pos, j)];
    is_center_[pos] = 1;
    chosen_.push_back(pos);
    total_ = 0;
    for (std::size_t p = 0; p < t.size(); ++p) {
      const TreeUnits d = t.dist_units(p, pos);
      if (leaf_cost_[p] == kUnset || d < leaf_cost_[p]) leaf_cost_[p] = d;
      total_ += leaf_cost_[p];
    }
  }

  // Cached per-leaf costs and total agree with a from-scratch evaluation.
  bool consistent() const {
    if (chosen_.empty()) return total_ == 0;
    const Rhst& t = *tree_;
    TreeUnits sum = 0;
    for (std::size_t p = 0; p < t.size(); ++p) {
      TreeUnits best = std::numeric_limits<TreeUnits>::max();
      for (auto c : chosen_) best = std::min(best, t.dist_units(p, c));
      if (best != leaf_cost_[p]) return false;
      sum += best;
    }
    return sum == total_ && sum == t.tree_cost_units(chosen_);
  }

 private:
  static constexpr TreeUnits kUnset = -1;

  const Rhst* tree_;
  std::vector<std::size_t> center_count_;
  std::vector<TreeUnits> leaf_cost_;
  std::vector<char> is_center_;
  std::vector<std::size_t> chosen_;
  TreeUnits total_ = 0;
};

namespace detail {

// A node may carry a cluster label if it is the root or has a sibling;
// single-child chain nodes hold the same points as their parent and would
// otherwise produce empty splits.
inline bool labelable(const Rhst& t, std::size_t v) {
  const auto parent = t.node(v).parent;
  return parent == kNoNode || t.node(parent).children.size() > 1;
}

inline void label_highest_unlabeled(Rhst& t, std::size_t pos, Id label) {
  for (std::size_t j = 0; j <= t.depth(); ++j) {
    const std::size_t v = t.ancestor(pos, j);
    if (labelable(t, v) && !t.node(v).label) {
      t.set_label(v, label);
      return;
    }
  }
  throw InvalidInput("no unlabeled ancestor left for this center");
}

// Each point joins the cluster of its lowest labeled ancestor; a center
// always stays in its own cluster.
inline Partition labeled_partition(const Rhst& t, const std::vector<std::size_t>& rank_of) {
  std::vector<std::size_t> labels(t.size());
  for (std::size_t p = 0; p < t.size(); ++p) {
    if (rank_of[p] != kNoNode) {
      labels[p] = rank_of[p];
      continue;
    }
    std::size_t j = t.depth();
    while (!t.node(t.ancestor(p, j)).label) --j;
    labels[p] = rank_of[t.position_of(*t.node(t.ancestor(p, j)).label)];
  }
  return Partition::from_labels(t.ids(), labels);
}

}  // namespace detail

struct TreeHierarchy {
  HierarchicalClustering clustering;  // per_level_cost holds tree costs
  std::vector<double> lambdas;        // exponential-mechanism scale per round
};

namespace detail {

struct Round {
  std::size_t center;
  double lambda;
};

template <class Select>
TreeHierarchy run_tree_hierarchy(Rhst& tree, std::size_t max_levels, Select&& select) {
  if (tree.has_labels()) throw InvalidInput("tree labels must be cleared before a run");
  const std::size_t n = tree.size();
  const std::size_t levels = std::min(max_levels, n);
  TreeHierarchy out;
  out.clustering.cost_kind = CostKind::Tree;
  GreedyState state(tree);
  std::vector<std::size_t> rank_of(n, kNoNode);
  for (std::size_t t = 0; t < levels; ++t) {
    const Round r = select(state);
#ifndef NDEBUG
    if (!state.consistent()) throw std::logic_error("greedy state cache diverged");
#endif
    state.add_center(r.center);
    rank_of[r.center] = t;
    detail::label_highest_unlabeled(tree, r.center, tree.ids()[r.center]);
    out.clustering.centers.push_back(tree.ids()[r.center]);
    out.clustering.levels.push_back(detail::labeled_partition(tree, rank_of));
    out.clustering.per_level_cost.push_back(static_cast<double>(state.current_cost()) * tree.unit());
    out.lambdas.push_back(r.lambda);
  }
  return out;
}

inline std::size_t argmin_first(const std::vector<TreeUnits>& costs, const GreedyState& state) {
  std::size_t best = kNoNode;
  for (std::size_t x = 0; x < costs.size(); ++x) {
    if (state.is_center(x)) continue;
    if (best == kNoNode || costs[x] < costs[best]) best = x;
  }
  return best;
}

}  // namespace detail

/// Greedy center sequence: each round adds the point minimizing the tree
/// k-median cost (smallest id on ties). Stops after max_levels rounds.
inline TreeHierarchy greedy_hierarchical(Rhst& tree,
                                         std::size_t max_levels = std::numeric_limits<std::size_t>::max()) {
  return detail::run_tree_hierarchy(tree, max_levels, [](const GreedyState& s) {
    return detail::Round{detail::argmin_first(s.candidate_costs(), s), 0.0};
  });
}

/// Exponential-mechanism center sequence. Per round, lambda is drawn
/// uniformly from [eps*C/(6 ln n), eps*C/(3 ln n)] with C the greedy-best
/// candidate cost, then a not-yet-chosen center is sampled with probability
/// proportional to exp(-cost/lambda). Random draws per round: lambda, then
/// one value for the selection race.
inline TreeHierarchy stable_hierarchical(Rhst& tree, double epsilon, RngStream& rng,
                                         std::size_t max_levels = std::numeric_limits<std::size_t>::max()) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidInput("epsilon must be positive");
  const std::size_t n = tree.size();
  if (n == 1) return greedy_hierarchical(tree, max_levels);
  const double log_n = std::log(static_cast<double>(n));
  return detail::run_tree_hierarchy(tree, max_levels, [&](const GreedyState& s) {
    const auto costs = s.candidate_costs();
    const std::size_t greedy = detail::argmin_first(costs, s);
    const double best = static_cast<double>(costs[greedy]);
    const double lo = epsilon * best / (6.0 * log_n);
    const double hi = epsilon * best / (3.0 * log_n);
    const double lambda = rng.uniform(lo, hi);
    std::vector<char> eligible(n);
    for (std::size_t x = 0; x < n; ++x) eligible[x] = !s.is_center(x);
    std::vector<double> shifted(n);
    for (std::size_t x = 0; x < n; ++x) shifted[x] = static_cast<double>(costs[x]) - best;
    // Once every remaining candidate costs the same (best == 0), the race
    // is uniform.
    const double scale = best > 0.0 && lambda > 0.0 ? lambda : 1.0;
    return detail::Round{detail::sample_keyed(shifted, scale, tree.ids(), eligible, rng), lambda * tree.unit()};
  });
}

enum class HierarchyMode { Greedy, Stable };
enum class ShiftMode { Random, Zero };

struct PipelineOptions {
  HierarchyMode mode = HierarchyMode::Stable;
  double epsilon = 1.0;
  ShiftMode shift = ShiftMode::Random;
  std::size_t max_levels = std::numeric_limits<std::size_t>::max();
};

struct PipelineResult {
  HierarchicalClustering clustering;   // per_level_cost: tree cost
  std::vector<double> euclidean_cost;  // level k centers on the input data
  std::vector<double> lambdas;
  Rhst tree;
  Normalization normalization;
};

// Euclidean k-median cost of every center prefix, incrementally.
inline std::vector<double> prefix_kmedian_costs(const Dataset& data, std::span<const Id> centers) {
  std::vector<double> nearest(data.size(), std::numeric_limits<double>::infinity());
  std::vector<double> out;
  out.reserve(centers.size());
  for (Id c : centers) {
    const auto cp = data.point(data.position_of(c));
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      nearest[i] = std::min(nearest[i], euclidean_dist(data.point(i), cp));
      total += nearest[i];
    }
    out.push_back(total);
  }
  return out;
}

/// normalize -> shift -> build tree -> greedy or stable center sequence.
/// The random stream is consumed as: shift vector, then per round lambda
/// and selection (stable mode only).
inline PipelineResult clnss_pipeline(const Dataset& data, RngStream& rng, const PipelineOptions& opt = {}) {
  Normalization norm = normalize(data);
  std::vector<double> shift(data.dim(), 0.0);
  if (opt.shift == ShiftMode::Random) shift = draw_shift(data.dim(), norm.lambda, rng);
  Rhst tree = construct_2rhst(apply_shift(norm.placed, shift), norm.lambda);
  tree.set_shift(shift);
  TreeHierarchy h = opt.mode == HierarchyMode::Greedy
                        ? greedy_hierarchical(tree, opt.max_levels)
                        : stable_hierarchical(tree, opt.epsilon, rng, opt.max_levels);
  PipelineResult out{std::move(h.clustering), {}, std::move(h.lambdas), std::move(tree), std::move(norm)};
  out.euclidean_cost = prefix_kmedian_costs(data, out.clustering.centers);
  return out;
}

}  // namespace hkm
