#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "leakdet/distance.hpp"

namespace leakdet {

/// Binary merge tree. Node ids 0..M-1 name the leaves; merge t creates
/// node M+t.
struct Dendrogram {
  struct Merge {
    std::size_t left;   // smaller node id
    std::size_t right;  // larger node id
    double distance;

    friend bool operator==(const Merge&, const Merge&) = default;
  };

  std::vector<std::size_t> leaves;  // record index of each leaf node
  std::vector<Merge> merges;

  std::size_t leaf_count() const { return leaves.size(); }

  friend bool operator==(const Dendrogram&, const Dendrogram&) = default;
};

struct FlatClusters {
  std::vector<std::vector<std::size_t>> clusters;  // record indices
  double tau = 0.0;
};

/// Mean distance over all cross pairs of two disjoint, non-empty clusters.
inline double group_average(std::span<const std::size_t> cx, std::span<const std::size_t> cy,
                            const DistanceMatrix& m) {
  if (cx.empty() || cy.empty()) throw std::invalid_argument("group_average of an empty cluster");
  double sum = 0.0;
  for (auto i : cx) {
    for (auto j : cy) sum += m.at(i, j);
  }
  return sum / (static_cast<double>(cx.size()) * static_cast<double>(cy.size()));
}

/// Group-average agglomerative clustering.
///
/// Each step merges the globally closest pair of live clusters. Ties go to
/// the lexicographically least (smaller id, larger id) pair. Distances to a
/// new cluster come from the size-weighted update
/// d(x+y, k) = (|x| d(x,k) + |y| d(y,k)) / (|x| + |y|),
/// which equals the mean over all cross pairs.
inline Dendrogram agglomerate(const DistanceMatrix& m) {
  const std::size_t n = m.size();
  Dendrogram out;
  out.leaves.resize(n);
  std::iota(out.leaves.begin(), out.leaves.end(), std::size_t{0});
  if (n <= 1) return out;

  // Slot s holds one live cluster; a merge reuses the lower slot.
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] = m.at(i, j);
  }
  std::vector<std::size_t> node_of(n), size_of(n, 1);
  std::iota(node_of.begin(), node_of.end(), std::size_t{0});
  std::vector<std::size_t> live(n);
  std::iota(live.begin(), live.end(), std::size_t{0});

  out.merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best_a = 0, best_b = 0;
    auto best = std::make_tuple(std::numeric_limits<double>::infinity(), std::numeric_limits<std::size_t>::max(),
                                std::numeric_limits<std::size_t>::max());
    for (std::size_t ia = 0; ia < live.size(); ++ia) {
      for (std::size_t ib = ia + 1; ib < live.size(); ++ib) {
        const std::size_t a = live[ia], b = live[ib];
        auto key = std::make_tuple(d[a * n + b], std::min(node_of[a], node_of[b]), std::max(node_of[a], node_of[b]));
        if (key < best) {
          best = key;
          best_a = a;
          best_b = b;
        }
      }
    }
    const auto [dist, lo, hi] = best;
    out.merges.push_back({lo, hi, dist});

    const std::size_t keep = std::min(best_a, best_b), drop = std::max(best_a, best_b);
    const double wa = static_cast<double>(size_of[keep]);
    const double wb = static_cast<double>(size_of[drop]);
    for (auto k : live) {
      if (k == keep || k == drop) continue;
      const double v = (wa * d[keep * n + k] + wb * d[drop * n + k]) / (wa + wb);
      d[keep * n + k] = d[k * n + keep] = v;
    }
    size_of[keep] += size_of[drop];
    node_of[keep] = n + step;
    live.erase(std::find(live.begin(), live.end(), drop));
  }
  return out;
}

/// Drop merges above `tau`; the remaining connected components are the
/// clusters. Clusters are sorted internally and ordered by first member.
inline FlatClusters cut(const Dendrogram& d, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("cut threshold must be non-negative");
  const std::size_t n = d.leaf_count();
  std::vector<std::size_t> parent(n + d.merges.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t t = 0; t < d.merges.size(); ++t) {
    const auto& mg = d.merges[t];
    if (mg.distance > tau) continue;
    parent[find(mg.left)] = n + t;
    parent[find(mg.right)] = n + t;
  }

  std::vector<std::vector<std::size_t>> by_root(parent.size());
  for (std::size_t leaf = 0; leaf < n; ++leaf) by_root[find(leaf)].push_back(d.leaves[leaf]);
  FlatClusters out;
  out.tau = tau;
  for (auto& c : by_root) {
    if (c.empty()) continue;
    std::sort(c.begin(), c.end());
    out.clusters.push_back(std::move(c));
  }
  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

/// Round to 9 significant digits so the JSON text carries at most 9.
inline double round_sig9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

inline nlohmann::ordered_json dendrogram_to_json(const Dendrogram& d) {
  nlohmann::ordered_json j;
  j["leaves"] = d.leaves;
  auto merges = nlohmann::ordered_json::array();
  for (const auto& m : d.merges) merges.push_back({m.left, m.right, round_sig9(m.distance)});
  j["merges"] = std::move(merges);
  return j;
}

}  // namespace leakdet
