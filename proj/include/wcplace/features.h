// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WCPLACE_FEATURES_H_
#define WCPLACE_FEATURES_H_

#include <array>
#include <vector>

#include "wcplace/graph.h"

namespace wcplace {

inline constexpr double kDefaultCommFactor = 4.0;

// Column order of StaticGraphFeatures::rows.
enum StaticFeature : int {
  kComputeCost = 0,
  kInCommSum = 1,
  kOutCommSum = 2,
  kTLevelCost = 3,
  kBLevelCost = 4,
};
inline constexpr int kNumStaticFeatures = 5;

// Per-vertex static features. Levels follow the orientation used by the
// placement policy: the b-level path runs from v back toward an entry vertex,
// the t-level path runs from v forward toward an exit vertex. Both costs
// include v's own compute cost plus every compute and communication cost
// along the path.
struct StaticGraphFeatures {
  std::vector<std::array<double, kNumStaticFeatures>> rows;
  // b_path[v] = v, argmax predecessor, its argmax predecessor, ...
  std::vector<std::vector<VertexId>> b_path;
  // t_path[v] = v, argmax successor, its argmax successor, ...
  std::vector<std::vector<VertexId>> t_path;

  double compute_cost(VertexId v) const { return rows[v][kComputeCost]; }
  double t_level(VertexId v) const { return rows[v][kTLevelCost]; }
  double b_level(VertexId v) const { return rows[v][kBLevelCost]; }
};

// Communication cost of edge (src, *): output bytes of src times comm_factor.
inline double comm_cost(const DataflowGraph& graph, VertexId src, double comm_factor) {
  return static_cast<double>(graph.vertex(src).output_bytes) * comm_factor;
}

// Longest-path ties go to the smallest neighbouring vertex id.
StaticGraphFeatures static_features(const DataflowGraph& graph,
                                    double comm_factor = kDefaultCommFactor);

}  // namespace wcplace

#endif  // WCPLACE_FEATURES_H_
