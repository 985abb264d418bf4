// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// Incremental list-scheduling state shared by the critical-path heuristic,
// the imitation teacher and the policy's dynamic device features.

#ifndef WCPLACE_TIMELINE_H_
#define WCPLACE_TIMELINE_H_

#include <array>
#include <stdexcept>
#include <vector>

#include "wcplace/assignment.h"
#include "wcplace/cluster.h"
#include "wcplace/graph.h"

namespace wcplace {

// Greedy earliest-start model. Each device runs placed vertices back to back
// in placement order; an input produced elsewhere arrives after its transfer
// time. Entry vertices take no time and are available on every device.
class GreedyTimeline {
 public:
  GreedyTimeline(const DataflowGraph& graph, const ClusterSpec& cluster);

  // Throws std::logic_error if a predecessor of v is not placed yet.
  double earliest_start(VertexId v, DeviceId d) const;
  // Lowest-id device among those with minimal earliest start.
  DeviceId best_device(VertexId v) const;
  void place(VertexId v, DeviceId d);

  bool placed(VertexId v) const { return device_[v] >= 0; }
  DeviceId device(VertexId v) const { return device_[v]; }
  double start(VertexId v) const { return start_[v]; }
  double end(VertexId v) const { return end_[v]; }
  double device_ready(DeviceId d) const { return device_ready_[d]; }
  std::int64_t assigned_flops(DeviceId d) const { return assigned_flops_[d]; }
  int placed_count() const { return placed_count_; }

  const DataflowGraph& graph() const { return *graph_; }
  const ClusterSpec& cluster() const { return *cluster_; }
  // Device map so far; unplaced vertices are -1.
  const std::vector<DeviceId>& devices() const { return device_; }

 private:
  const DataflowGraph* graph_;
  const ClusterSpec* cluster_;
  std::vector<DeviceId> device_;
  std::vector<double> start_;
  std::vector<double> end_;
  std::vector<double> device_ready_;
  std::vector<std::int64_t> assigned_flops_;
  int placed_count_ = 0;
};

// Vertices whose predecessors are all placed and which are not placed
// themselves, kept in ascending id order. Starts as the entry vertices.
class CandidateSet {
 public:
  explicit CandidateSet(const DataflowGraph& graph);

  const std::vector<VertexId>& ids() const { return ids_; }
  bool contains(VertexId v) const;
  bool empty() const { return ids_.empty(); }
  // Removes v and admits successors whose last predecessor was v. Throws
  // std::logic_error if v is not a candidate.
  void take(VertexId v);

 private:
  const DataflowGraph* graph_;
  std::vector<int> missing_preds_;
  std::vector<VertexId> ids_;
};

inline constexpr int kNumDeviceFeatures = 5;

enum DeviceFeature : int {
  kAssignedCompute = 0,
  kPredCompute = 1,
  kMinInputStart = 2,
  kMaxInputEnd = 3,
  kEarliestStart = 4,
};

// One row per device: total FLOPs placed on d, FLOPs of v's predecessors on
// d, min start and max end over v's predecessors on d (0 when none), and the
// earliest start of v on d.
using DeviceFeatureRows = std::vector<std::array<double, kNumDeviceFeatures>>;

DeviceFeatureRows device_features(const GreedyTimeline& timeline, VertexId v);

// Rebuilds the timeline from a partial assignment (-1 = unassigned) by
// placing assigned vertices in topological order. Throws std::logic_error if
// a predecessor of v is unassigned.
DeviceFeatureRows dynamic_device_features(const DataflowGraph& graph, const std::vector<DeviceId>& partial,
                                          VertexId v, const ClusterSpec& cluster);

}  // namespace wcplace

#endif  // WCPLACE_TIMELINE_H_
