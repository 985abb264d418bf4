// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/timeline.h"

#include <algorithm>
#include <limits>
#include <string>

namespace wcplace {

GreedyTimeline::GreedyTimeline(const DataflowGraph& graph, const ClusterSpec& cluster)
    : graph_(&graph),
      cluster_(&cluster),
      device_(graph.num_vertices(), -1),
      start_(graph.num_vertices(), 0.0),
      end_(graph.num_vertices(), 0.0),
      device_ready_(cluster.device_count, 0.0),
      assigned_flops_(cluster.device_count, 0) {}

double GreedyTimeline::earliest_start(VertexId v, DeviceId d) const {
  double t = device_ready_[d];
  for (VertexId p : graph_->preds(v)) {
    if (!placed(p)) {
      throw std::logic_error("predecessor " + std::to_string(p) + " of vertex " + std::to_string(v) +
                             " is not placed");
    }
    if (graph_->is_entry(p)) continue;
    double arrival = end_[p];
    if (device_[p] != d) arrival += cluster_->transfer_ms(graph_->vertex(p).output_bytes, device_[p], d);
    t = std::max(t, arrival);
  }
  return t;
}

DeviceId GreedyTimeline::best_device(VertexId v) const {
  DeviceId best = 0;
  double best_t = std::numeric_limits<double>::infinity();
  for (DeviceId d = 0; d < cluster_->device_count; ++d) {
    const double t = earliest_start(v, d);
    if (t < best_t) {
      best_t = t;
      best = d;
    }
  }
  return best;
}

void GreedyTimeline::place(VertexId v, DeviceId d) {
  if (placed(v)) throw std::logic_error("vertex " + std::to_string(v) + " placed twice");
  if (graph_->is_entry(v)) {
    device_[v] = d;
    ++placed_count_;
    return;
  }
  const double s = earliest_start(v, d);
  const std::int64_t flops = graph_->vertex(v).flops;
  device_[v] = d;
  start_[v] = s;
  end_[v] = s + cluster_->exec_ms(flops, d);
  device_ready_[d] = end_[v];
  assigned_flops_[d] += flops;
  ++placed_count_;
}

CandidateSet::CandidateSet(const DataflowGraph& graph)
    : graph_(&graph), missing_preds_(graph.num_vertices(), 0) {
  for (VertexId v = 0; v < graph.num_vertices(); ++v) {
    missing_preds_[v] = static_cast<int>(graph.preds(v).size());
    if (missing_preds_[v] == 0) ids_.push_back(v);
  }
}

bool CandidateSet::contains(VertexId v) const { return std::binary_search(ids_.begin(), ids_.end(), v); }

void CandidateSet::take(VertexId v) {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), v);
  if (it == ids_.end() || *it != v) throw std::logic_error("vertex " + std::to_string(v) + " is not a candidate");
  ids_.erase(it);
  for (VertexId s : graph_->succs(v)) {
    // preds() keeps duplicates, so each listed edge decrements once.
    if (--missing_preds_[s] == 0) ids_.insert(std::lower_bound(ids_.begin(), ids_.end(), s), s);
  }
}

DeviceFeatureRows device_features(const GreedyTimeline& timeline, VertexId v) {
  const DataflowGraph& g = timeline.graph();
  const int devices = timeline.cluster().device_count;
  DeviceFeatureRows rows(devices);
  std::vector<bool> seen(devices, false);
  for (DeviceId d = 0; d < devices; ++d) rows[d][kAssignedCompute] = static_cast<double>(timeline.assigned_flops(d));
  for (VertexId p : g.preds(v)) {
    if (!timeline.placed(p)) {
      throw std::logic_error("predecessor " + std::to_string(p) + " of vertex " + std::to_string(v) +
                             " is not assigned");
    }
    const DeviceId d = timeline.device(p);
    auto& row = rows[d];
    row[kPredCompute] += static_cast<double>(g.vertex(p).flops);
    if (!seen[d]) {
      row[kMinInputStart] = timeline.start(p);
      row[kMaxInputEnd] = timeline.end(p);
      seen[d] = true;
    } else {
      row[kMinInputStart] = std::min(row[kMinInputStart], timeline.start(p));
      row[kMaxInputEnd] = std::max(row[kMaxInputEnd], timeline.end(p));
    }
  }
  for (DeviceId d = 0; d < devices; ++d) rows[d][kEarliestStart] = timeline.earliest_start(v, d);
  return rows;
}

DeviceFeatureRows dynamic_device_features(const DataflowGraph& graph, const std::vector<DeviceId>& partial,
                                          VertexId v, const ClusterSpec& cluster) {
  GreedyTimeline timeline(graph, cluster);
  for (VertexId u : topo_order(graph)) {
    if (partial[u] >= 0) timeline.place(u, partial[u]);
  }
  return device_features(timeline, v);
}

}  // namespace wcplace
