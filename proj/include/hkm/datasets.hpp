#pragma once

// Instance generators, clusterability diagnostics, DBSCAN and CSV I/O.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hkm/core.hpp"
#include "hkm/rng.hpp"

namespace hkm {

// ---------------------------------------------------------------------------
// Generators

/// Points on a line with first gap d1 and gap j (j >= 2) equal to
/// 1 + (j - 1) * d1 / n. Single linkage merges it strictly left to right.
inline Dataset gen_line_instance(std::size_t n, double d1) {
  if (n < 2) throw InvalidInput("line instance needs n >= 2");
  if (!(d1 > 0.0)) throw InvalidInput("first gap must be positive");
  std::vector<double> x(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    const double gap = j == 1 ? d1 : 1.0 + static_cast<double>(j - 1) * d1 / static_cast<double>(n);
    x[j] = x[j - 1] + gap;
  }
  return Dataset(1, std::move(x));
}

/// Adversarial instance for the deterministic (unshifted) tree greedy. The
/// points sit in a 4 x 4 grid of cells that become the level-3 nodes of the
/// tree (root, one unary level, quadrants, cells). Cells are numbered 1..16
/// quadrant by quadrant, in the tree's child order.
///
/// Every cell holds m = n / 16 points. Cells 5, 11 and 15 are a compact unit
/// lattice at the cell's lower corner with none, one and two points moved to
/// the opposite corner; every other cell spreads its points evenly over its
/// four quarters. So cell 5 hosts the best 1-center and cells 11 and 15 (in
/// two other quadrants) trail it by one and two cell diameters. Deleting any
/// point of cell 5 costs every outside candidate about four cell diameters
/// less, and the first two greedy centers move from (5, 11) to (11, 15).
struct RhstAdversarialInstance {
  Dataset data;
  double cell_side = 0.0;
  std::vector<int> cell;  // 1..16 per point
};

inline RhstAdversarialInstance gen_rhst_adversarial(std::size_t n) {
  if (n < 64 || n % 16 != 0)
    throw InvalidInput("adversarial instance needs n >= 64 and a multiple of 16 (one equal block per cell)");
  const std::size_t m = n / 16;
  const auto width = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
  double side = 8.0;
  while (side < 4.0 * static_cast<double>(width)) side *= 2.0;

  const auto quarter_width = static_cast<std::size_t>(std::ceil(std::sqrt(std::ceil(static_cast<double>(m) / 4.0))));
  auto relocated = [](int cell) {
    switch (cell) {
      case 5: return 0;
      case 11: return 1;
      case 15: return 2;
      default: return -1;
    }
  };
  // Opposite-corner slots, pairwise at least 1 apart.
  const double far_slots[2][2] = {{side - 1, side - 1}, {side - 2, side - 1}};

  RhstAdversarialInstance out;
  out.cell_side = side;
  std::vector<double> coords;
  for (int q = 0; q < 4; ++q) {
    for (int r = 0; r < 4; ++r) {
      const int cell = 4 * q + r + 1;
      const double ox = (2 * (q / 2) + r / 2) * side;
      const double oy = (2 * (q % 2) + r % 2) * side;
      const int moved = relocated(cell);
      for (std::size_t i = 0; i < m; ++i) {
        double x, y;
        if (moved < 0) {
          const std::size_t part = i % 4, j = i / 4;
          x = ox + static_cast<double>(part / 2) * side / 2 + static_cast<double>(j % quarter_width);
          y = oy + static_cast<double>(part % 2) * side / 2 + static_cast<double>(j / quarter_width);
        } else if (i + static_cast<std::size_t>(moved) >= m) {
          const auto slot = i + static_cast<std::size_t>(moved) - m;
          x = ox + far_slots[slot][0];
          y = oy + far_slots[slot][1];
        } else {
          x = ox + static_cast<double>(i % width);
          y = oy + static_cast<double>(i / width);
        }
        coords.push_back(x);
        coords.push_back(y);
        out.cell.push_back(cell);
      }
    }
  }
  out.data = Dataset(2, std::move(coords));
  return out;
}

/// i.i.d. points: uniform on [0, spread]^d, or (clusters > 0) an equal-weight
/// Gaussian mixture whose means are uniform on that box and whose standard
/// deviation is cluster_std * spread. Coincident draws are redrawn.
struct RandomPointsSpec {
  std::size_t n = 500;
  std::size_t dim = 2;
  double spread = 100.0;
  std::size_t clusters = 0;
  double cluster_std = 0.05;
};

inline Dataset gen_random_points(const RandomPointsSpec& spec, RngStream& rng) {
  if (spec.n < 2) throw InvalidInput("random dataset needs n >= 2");
  if (spec.dim < 1) throw InvalidInput("dimension must be positive");
  if (!(spec.spread > 0.0)) throw InvalidInput("spread must be positive (zero spread duplicates points)");
  if (spec.clusters > 0 && !(spec.cluster_std > 0.0))
    throw InvalidInput("cluster_std must be positive (zero spread duplicates points)");
  std::vector<double> means(spec.clusters * spec.dim);
  for (auto& v : means) v = rng.uniform(0.0, spec.spread);

  std::set<std::vector<double>> seen;
  std::vector<double> coords;
  coords.reserve(spec.n * spec.dim);
  while (seen.size() < spec.n) {
    std::vector<double> p(spec.dim);
    if (spec.clusters == 0) {
      for (auto& v : p) v = rng.uniform(0.0, spec.spread);
    } else {
      const auto c = rng.below(spec.clusters);
      for (std::size_t k = 0; k < spec.dim; ++k)
        p[k] = means[c * spec.dim + k] + spec.cluster_std * spec.spread * rng.normal();
    }
    if (seen.insert(p).second) coords.insert(coords.end(), p.begin(), p.end());
  }
  return Dataset(spec.dim, std::move(coords));
}

// ---------------------------------------------------------------------------
// Clusterability

// Largest edge of a Euclidean minimum spanning tree (Prim, O(n^2)).
inline double mst_max_edge(const Dataset& data, std::span<const std::size_t> positions) {
  if (positions.empty()) throw InvalidInput("MST needs at least one point");
  const std::size_t n = positions.size();
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<char> in(n, 0);
  best[0] = 0.0;
  double longest = 0.0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!in[i] && (u == n || best[i] < best[u])) u = i;
    in[u] = 1;
    longest = std::max(longest, best[u]);
    for (std::size_t i = 0; i < n; ++i)
      if (!in[i]) best[i] = std::min(best[i], euclidean_dist(data.point(positions[u]), data.point(positions[i])));
  }
  return longest;
}

inline double mst_max_edge(const Dataset& data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return mst_max_edge(data, all);
}

struct ClusterPairWitness {
  std::size_t i = 0, j = 0;
  double inter = 0.0;
};

/// d_i: MST max edge of cluster i. inter: minimum distance between clusters.
/// The dataset is well-clusterable iff inter(i, j) > 2 max(d_i, d_j) for all
/// pairs.
struct WellClusterabilityReport {
  std::vector<double> max_intra;
  std::vector<std::vector<double>> inter;
  std::vector<double> min_inter;  // per cluster: closest other cluster
  bool verdict = true;
  std::vector<ClusterPairWitness> witnesses;  // violating pairs
};

inline WellClusterabilityReport check_well_clusterable(const Dataset& data, const Partition& clusters) {
  const std::size_t m = clusters.size();
  std::vector<std::vector<std::size_t>> pos(m);
  for (std::size_t c = 0; c < m; ++c)
    for (Id id : clusters.block(c)) {
      const auto p = data.position_of(id);
      if (p == data.size()) throw InvalidInput("partition refers to id " + std::to_string(id) + " outside the dataset");
      pos[c].push_back(p);
    }
  WellClusterabilityReport r;
  r.inter.assign(m, std::vector<double>(m, 0.0));
  r.min_inter.assign(m, std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < m; ++c) r.max_intra.push_back(mst_max_edge(data, pos[c]));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      double d = std::numeric_limits<double>::infinity();
      for (auto a : pos[i])
        for (auto b : pos[j]) d = std::min(d, euclidean_dist(data.point(a), data.point(b)));
      r.inter[i][j] = r.inter[j][i] = d;
      r.min_inter[i] = std::min(r.min_inter[i], d);
      r.min_inter[j] = std::min(r.min_inter[j], d);
      if (!(d > 2.0 * std::max(r.max_intra[i], r.max_intra[j]))) {
        r.verdict = false;
        r.witnesses.push_back({i, j, d});
      }
    }
  return r;
}

/// m clusters of points drawn uniformly from unit balls, laid out along the
/// first axis. Consecutive clusters are separated by distinct gaps of at
/// least separation * (largest MST edge), so the inter-cluster merge order
/// of single linkage is unambiguous. Redrawn until the verdict is true.
struct WellClusterableInstance {
  Dataset data;
  Partition clusters;
};

inline WellClusterableInstance gen_well_clusterable(std::size_t m, std::size_t points_per_cluster,
                                                    double separation, RngStream& rng, std::size_t dim = 2) {
  if (m < 2) throw InvalidInput("need at least two clusters");
  if (points_per_cluster < 1) throw InvalidInput("clusters must be nonempty");
  if (!(separation > 2.0)) throw InvalidInput("separation must exceed 2 to satisfy the clusterability condition");
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<std::vector<double>> pts;
    std::vector<std::size_t> label;
    double spread = 0.0;
    std::vector<std::pair<double, double>> extent;
    for (std::size_t c = 0; c < m; ++c) {
      std::set<std::vector<double>> seen;
      std::vector<double> coords;
      while (seen.size() < points_per_cluster) {
        std::vector<double> p(dim);
        double r2;
        do {
          r2 = 0.0;
          for (auto& v : p) {
            v = rng.uniform(-1.0, 1.0);
            r2 += v * v;
          }
        } while (r2 > 1.0);
        if (seen.insert(p).second) coords.insert(coords.end(), p.begin(), p.end());
      }
      const Dataset cluster(dim, coords);
      spread = std::max(spread, mst_max_edge(cluster));
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = 0; i < cluster.size(); ++i) {
        lo = std::min(lo, cluster.point(i)[0]);
        hi = std::max(hi, cluster.point(i)[0]);
        pts.emplace_back(cluster.point(i).begin(), cluster.point(i).end());
        label.push_back(c);
      }
      extent.emplace_back(lo, hi);
    }
    // Gap ranks are a random permutation; gaps differ by 3 units.
    std::vector<std::size_t> rank(m - 1);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    for (std::size_t i = rank.size(); i > 1; --i) std::swap(rank[i - 1], rank[rng.below(i)]);
    const double gap_unit = std::max(separation * std::max(spread, 1e-3), 1.0);
    std::vector<double> offset(m, 0.0);
    for (std::size_t c = 1; c < m; ++c)
      offset[c] = offset[c - 1] + extent[c - 1].second - extent[c].first +
                  gap_unit * (3.0 + 3.0 * static_cast<double>(rank[c - 1]));
    std::vector<double> coords;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      pts[i][0] += offset[label[i]];
      coords.insert(coords.end(), pts[i].begin(), pts[i].end());
    }
    Dataset data(dim, std::move(coords));
    std::vector<Id> ids(data.ids());
    Partition part = Partition::from_labels(ids, label);
    if (check_well_clusterable(data, part).verdict) return {std::move(data), std::move(part)};
  }
  throw InvalidInput("could not generate a well-clusterable instance");
}

// ---------------------------------------------------------------------------
// DBSCAN

struct DbscanParams {
  double eps = 0.5;
  std::size_t min_samples = 3;
};

struct DbscanResult {
  Partition clusters;  // core and border points
  std::vector<Id> noise;
};

/// Core points have at least min_samples points (themselves included)
/// within eps. Clusters are eps-connected components of core points; a
/// border point joins the cluster of its nearest core point (ties broken
/// by coordinates, so the result does not depend on input order).
inline DbscanResult dbscan(const Dataset& data, const DbscanParams& params) {
  if (!(params.eps > 0.0)) throw InvalidInput("DBSCAN eps must be positive");
  if (params.min_samples < 1) throw InvalidInput("DBSCAN min_samples must be at least 1");
  const std::size_t n = data.size();
  std::vector<std::vector<std::size_t>> nbr(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (euclidean_dist(data.point(i), data.point(j)) <= params.eps) nbr[i].push_back(j);
  std::vector<char> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = nbr[i].size() >= params.min_samples;

  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> label(n, none);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || label[i] != none) continue;
    std::vector<std::size_t> stack{i};
    label[i] = next;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (auto v : nbr[u])
        if (core[v] && label[v] == none) {
          label[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  auto coord_less = [&](std::size_t a, std::size_t b) {
    auto pa = data.point(a), pb = data.point(b);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    std::size_t best = none;
    double best_d = 0.0;
    for (auto v : nbr[i]) {
      if (!core[v]) continue;
      const double d = euclidean_dist(data.point(i), data.point(v));
      if (best == none || d < best_d || (d == best_d && coord_less(v, best))) {
        best = v;
        best_d = d;
      }
    }
    if (best != none) label[i] = label[best];
  }
  DbscanResult out;
  std::vector<std::vector<Id>> blocks(next);
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] == none)
      out.noise.push_back(data.id(i));
    else
      blocks[label[i]].push_back(data.id(i));
  }
  out.clusters = Partition(std::move(blocks));
  return out;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvOptions {
  bool has_header = false;
  char delimiter = ',';
  bool minmax_scale = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, const CsvOptions& opt = {}) {
  std::string line;
  std::size_t row = 0, dim = 0;
  std::vector<double> coords;
  if (opt.has_header) {
    std::getline(in, line);
    ++row;
  }
  std::vector<std::size_t> line_of_point;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    std::vector<double> values;
    std::size_t col = 0;
    std::string_view rest(line);
    while (true) {
      ++col;
      const auto cut = rest.find(opt.delimiter);
      const auto cell = detail::trim(rest.substr(0, cut));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                        ": not a finite number: '" + std::string(cell) + "'");
      values.push_back(v);
      if (cut == std::string_view::npos) break;
      rest.remove_prefix(cut + 1);
    }
    if (dim == 0) dim = values.size();
    if (values.size() != dim)
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(dim) + " columns, found " +
                      std::to_string(values.size()));
    coords.insert(coords.end(), values.begin(), values.end());
    line_of_point.push_back(row);
  }
  if (dim == 0) throw DataError("no data rows");
  const std::size_t n = coords.size() / dim;
  if (opt.minmax_scale) {
    for (std::size_t k = 0; k < dim; ++k) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = 0; i < n; ++i) {
        lo = std::min(lo, coords[i * dim + k]);
        hi = std::max(hi, coords[i * dim + k]);
      }
      for (std::size_t i = 0; i < n; ++i)
        coords[i * dim + k] = hi > lo ? (coords[i * dim + k] - lo) / (hi - lo) : 0.0;
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto row_less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(coords.begin() + a * dim, coords.begin() + (a + 1) * dim,
                                        coords.begin() + b * dim, coords.begin() + (b + 1) * dim);
  };
  std::sort(order.begin(), order.end(), row_less);
  for (std::size_t i = 1; i < n; ++i)
    if (!row_less(order[i - 1], order[i]))
      throw DataError("rows " + std::to_string(line_of_point[std::min(order[i - 1], order[i])]) + " and " +
                      std::to_string(line_of_point[std::max(order[i - 1], order[i])]) +
                      " hold the same point (columns 1-" + std::to_string(dim) + ")");
  return Dataset(dim, std::move(coords));
}

inline Dataset load_csv(const std::string& path, const CsvOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_csv(in, opt);
}

// Shortest round-trip decimal form, so save -> load is bit-identical.
inline void write_csv(std::ostream& os, const Dataset& data, bool header = false) {
  if (header) {
    for (std::size_t k = 0; k < data.dim(); ++k) os << (k ? "," : "") << 'x' << k;
    os << '\n';
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto p = data.point(i);
    for (std::size_t k = 0; k < p.size(); ++k) os << (k ? "," : "") << detail::format_double(p[k]);
    os << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& data, bool header = false) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_csv(out, data, header);
}

// Sidecar metadata (generator name, parameters, seed) next to a CSV file.
inline void save_sidecar(const std::string& csv_path, const nlohmann::json& meta) {
  std::ofstream out(csv_path + ".json");
  if (!out) throw DataError("cannot write " + csv_path + ".json");
  out << meta.dump(2) << '\n';
}

}  // namespace hkm
