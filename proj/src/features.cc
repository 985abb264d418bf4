// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/features.h"

namespace wcplace {

StaticGraphFeatures static_features(const DataflowGraph& graph, double comm_factor) {
  const int n = graph.num_vertices();
  const std::vector<VertexId> order = topo_order(graph);

  StaticGraphFeatures f;
  f.rows.assign(n, {0, 0, 0, 0, 0});
  std::vector<VertexId> best_succ(n, -1);
  std::vector<VertexId> best_pred(n, -1);

  for (VertexId v = 0; v < n; ++v) {
    f.rows[v][kComputeCost] = static_cast<double>(graph.vertex(v).flops);
    for (VertexId p : graph.preds(v)) f.rows[v][kInCommSum] += comm_cost(graph, p, comm_factor);
    f.rows[v][kOutCommSum] = comm_cost(graph, v, comm_factor) * graph.succs(v).size();
  }

  // b-level: forward pass, longest path back to an entry vertex.
  for (VertexId v : order) {
    double best = 0.0;
    for (VertexId p : graph.preds(v)) {  // ascending ids: strict > keeps the smallest on ties
      const double through = f.rows[p][kBLevelCost] + comm_cost(graph, p, comm_factor);
      if (best_pred[v] == -1 || through > best) {
        best = through;
        best_pred[v] = p;
      }
    }
    f.rows[v][kBLevelCost] = f.rows[v][kComputeCost] + best;
  }

  // t-level: reverse pass, longest path forward to an exit vertex.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const VertexId v = *it;
    const double out = comm_cost(graph, v, comm_factor);
    double best = 0.0;
    for (VertexId s : graph.succs(v)) {
      const double through = out + f.rows[s][kTLevelCost];
      if (best_succ[v] == -1 || through > best) {
        best = through;
        best_succ[v] = s;
      }
    }
    f.rows[v][kTLevelCost] = f.rows[v][kComputeCost] + best;
  }

  f.b_path.resize(n);
  f.t_path.resize(n);
  for (VertexId v = 0; v < n; ++v) {
    for (VertexId u = v; u != -1; u = best_pred[u]) f.b_path[v].push_back(u);
    for (VertexId u = v; u != -1; u = best_succ[u]) f.t_path[v].push_back(u);
  }
  return f;
}

}  // namespace wcplace
