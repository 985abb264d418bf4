// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// Non-learned assignment engines.

#ifndef WCPLACE_HEURISTICS_H_
#define WCPLACE_HEURISTICS_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "wcplace/assignment.h"
#include "wcplace/cluster.h"
#include "wcplace/features.h"
#include "wcplace/graph.h"
#include "wcplace/simulator.h"
#include "wcplace/timeline.h"

namespace wcplace {

// Candidate with the largest t-level. Ties go to a uniformly random member
// when `rng` is given and to the lowest id otherwise.
VertexId pick_critical_vertex(const std::vector<VertexId>& candidates, const StaticGraphFeatures& features,
                              std::mt19937_64* rng);

// One critical-path list-scheduling pass.
Assignment critical_path_trial(const DataflowGraph& graph, const ClusterSpec& cluster,
                               const StaticGraphFeatures& features, std::mt19937_64* rng);

struct CriticalPathResult {
  Assignment best;
  double best_makespan_ms = 0.0;
  std::vector<double> trial_makespans_ms;
};

// Runs `trials` randomized passes (trial k seeded from (seed, k)) and keeps
// the one with the smallest simulated makespan, earliest trial on ties.
CriticalPathResult critical_path_search(const DataflowGraph& graph, const ClusterSpec& cluster, int trials,
                                        std::uint64_t seed, Strategy strategy = Strategy::kFifo, int jobs = 1);

Assignment critical_path_assign(const DataflowGraph& graph, const ClusterSpec& cluster, int trials,
                                std::uint64_t seed, Strategy strategy = Strategy::kFifo, int jobs = 1);

// Level-by-level exhaustive placement of meta-ops: each meta-op's shard ops
// go to distinct devices minimizing summed input transfer time, then its
// reduce ops likewise. Graphs without meta-ops are handled one non-entry
// vertex at a time in topological order. Entry vertices go to device 0.
// Throws std::invalid_argument if a meta-op has more shard ops than devices
// or if meta-ops leave a non-entry vertex uncovered.
Assignment enumerative_optimizer(const DataflowGraph& graph, const ClusterSpec& cluster);

Assignment random_assign(const DataflowGraph& graph, int devices, std::uint64_t seed);
Assignment single_device_assign(const DataflowGraph& graph);

class SearchCapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::uint64_t kDefaultBruteForceCap = std::uint64_t{1} << 20;

struct OracleResult {
  Assignment best;
  double makespan_ms = 0.0;
};

// Exhaustive search over all assignments with the lexicographically smallest
// argmin. Entry vertices never execute, so their device does not affect the
// makespan; they are pinned to device 0, which the smallest argmin uses
// anyway. Throws SearchCapError if device_count^|V| exceeds `cap`.
OracleResult brute_force_optimal(const DataflowGraph& graph, const ClusterSpec& cluster,
                                 Strategy strategy = Strategy::kFifo, std::uint64_t cap = kDefaultBruteForceCap,
                                 int jobs = 1);

}  // namespace wcplace

#endif  // WCPLACE_HEURISTICS_H_
