// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/graph.h"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <sstream>
#include <utility>

namespace wcplace {

namespace {

constexpr std::pair<OpKind, std::string_view> kOpKindNames[] = {
    {OpKind::kInput, "input"},         {OpKind::kMatmul, "matmul"},
    {OpKind::kAdd, "add"},             {OpKind::kElemwise, "elemwise"},
    {OpKind::kReduction, "reduction"}, {OpKind::kFormation, "formation"},
    {OpKind::kOther, "other"},
};

std::string join_ids(const std::vector<int>& ids) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << ",";
    out << ids[i];
  }
  return out.str();
}

// Kahn's algorithm restricted to the in-range adjacency. Returns the order
// found; it is shorter than n iff the graph has a cycle.
std::vector<VertexId> kahn(const DataflowGraph& graph) {
  const int n = graph.num_vertices();
  std::vector<int> indegree(n, 0);
  for (VertexId v = 0; v < n; ++v) indegree[v] = static_cast<int>(graph.preds(v).size());
  std::priority_queue<VertexId, std::vector<VertexId>, std::greater<>> ready;
  for (VertexId v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<VertexId> order;
  order.reserve(n);
  while (!ready.empty()) {
    VertexId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (VertexId s : graph.succs(v)) {
      if (--indegree[s] == 0) ready.push(s);
    }
  }
  return order;
}

// Given a Kahn order that stopped short, walks predecessor links among the
// unplaced vertices until one repeats; the repeated stretch is a cycle.
std::vector<VertexId> find_cycle(const DataflowGraph& graph, const std::vector<VertexId>& order) {
  const int n = graph.num_vertices();
  std::vector<bool> placed(n, false);
  for (VertexId v : order) placed[v] = true;
  VertexId start = 0;
  while (start < n && placed[start]) ++start;
  std::vector<int> visit_pos(n, -1);
  std::vector<VertexId> walk;
  VertexId v = start;
  while (visit_pos[v] == -1) {
    visit_pos[v] = static_cast<int>(walk.size());
    walk.push_back(v);
    for (VertexId p : graph.preds(v)) {
      if (!placed[p]) {
        v = p;
        break;
      }
    }
  }
  std::vector<VertexId> cycle(walk.begin() + visit_pos[v], walk.end());
  std::sort(cycle.begin(), cycle.end());
  return cycle;
}

}  // namespace

std::string_view op_kind_name(OpKind kind) {
  for (const auto& [k, name] : kOpKindNames) {
    if (k == kind) return name;
  }
  return "other";
}

std::optional<OpKind> parse_op_kind(std::string_view name) {
  for (const auto& [k, n] : kOpKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

DataflowGraph::DataflowGraph(std::vector<Vertex> vertices, std::vector<Edge> edges,
                             std::vector<MetaOp> meta_ops)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), meta_ops_(std::move(meta_ops)) {
  const int n = num_vertices();
  preds_.assign(n, {});
  succs_.assign(n, {});
  for (const Edge& e : edges_) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) continue;
    preds_[e.dst].push_back(e.src);
    succs_[e.src].push_back(e.dst);
  }
  for (auto& p : preds_) std::sort(p.begin(), p.end());
  for (auto& s : succs_) std::sort(s.begin(), s.end());
}

std::vector<VertexId> DataflowGraph::entries() const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < num_vertices(); ++v) {
    if (is_entry(v)) out.push_back(v);
  }
  return out;
}

std::vector<VertexId> DataflowGraph::exits() const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < num_vertices(); ++v) {
    if (is_exit(v)) out.push_back(v);
  }
  return out;
}

std::string_view violation_kind_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kEmptyGraph: return "empty-graph";
    case ViolationKind::kNonDenseId: return "non-dense-id";
    case ViolationKind::kInputFlops: return "input-flops";
    case ViolationKind::kZeroOutputBytes: return "zero-output-bytes";
    case ViolationKind::kEdgeOutOfRange: return "edge-out-of-range";
    case ViolationKind::kSelfLoop: return "self-loop";
    case ViolationKind::kDuplicateEdge: return "duplicate-edge";
    case ViolationKind::kCycle: return "cycle";
    case ViolationKind::kMetaOpUnknownVertex: return "meta-op-unknown-vertex";
    case ViolationKind::kMetaOpOverlap: return "meta-op-overlap";
    case ViolationKind::kMetaOpReduceTooLarge: return "meta-op-reduce-too-large";
    case ViolationKind::kMetaOpOrder: return "meta-op-order";
  }
  return "unknown";
}

std::vector<Violation> validate(const DataflowGraph& graph) {
  std::vector<Violation> out;
  auto add = [&out](ViolationKind kind, std::vector<int> ids, std::string msg) {
    out.push_back({kind, std::move(ids), std::move(msg)});
  };

  const int n = graph.num_vertices();
  if (n == 0) {
    add(ViolationKind::kEmptyGraph, {}, "graph has no vertices");
    return out;
  }

  for (VertexId i = 0; i < n; ++i) {
    const Vertex& v = graph.vertex(i);
    if (v.id != i) {
      add(ViolationKind::kNonDenseId, {i, v.id},
          "vertex at position " + std::to_string(i) + " has id " + std::to_string(v.id));
    }
    const bool is_input = v.op_kind == OpKind::kInput;
    if (v.flops < 0 || is_input != (v.flops == 0)) {
      add(ViolationKind::kInputFlops, {i},
          "vertex " + std::to_string(i) + ": flops must be zero exactly for input vertices");
    }
  }

  std::set<std::pair<int, int>> seen;
  bool edges_ok = true;
  for (const Edge& e : graph.edges()) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      add(ViolationKind::kEdgeOutOfRange, {e.src, e.dst},
          "edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) + ") out of range");
      edges_ok = false;
      continue;
    }
    if (e.src == e.dst) {
      add(ViolationKind::kSelfLoop, {e.src}, "self loop on vertex " + std::to_string(e.src));
      continue;
    }
    if (!seen.insert({e.src, e.dst}).second) {
      add(ViolationKind::kDuplicateEdge, {e.src, e.dst},
          "duplicate edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) + ")");
    }
  }

  for (VertexId v = 0; v < n; ++v) {
    if (!graph.succs(v).empty() && graph.vertex(v).output_bytes <= 0) {
      add(ViolationKind::kZeroOutputBytes, {v},
          "vertex " + std::to_string(v) + " is consumed but has no output bytes");
    }
  }

  std::vector<VertexId> order = kahn(graph);
  const bool acyclic = static_cast<int>(order.size()) == n;
  if (!acyclic) {
    std::vector<int> members = find_cycle(graph, order);
    add(ViolationKind::kCycle, members, "cycle through vertices {" + join_ids(members) + "}");
  }

  // Meta-op membership.
  std::vector<int> meta_of(n, -1);
  const auto& metas = graph.meta_ops();
  for (std::size_t m = 0; m < metas.size(); ++m) {
    const MetaOp& op = metas[m];
    if (op.reduce_ops.size() > op.shard_ops.size()) {
      add(ViolationKind::kMetaOpReduceTooLarge, {op.id},
          "meta-op " + std::to_string(op.id) + " has more reduce ops than shard ops");
    }
    for (const auto* list : {&op.shard_ops, &op.reduce_ops}) {
      for (VertexId v : *list) {
        if (v < 0 || v >= n) {
          add(ViolationKind::kMetaOpUnknownVertex, {op.id, v},
              "meta-op " + std::to_string(op.id) + " names unknown vertex " + std::to_string(v));
          continue;
        }
        if (meta_of[v] != -1) {
          add(ViolationKind::kMetaOpOverlap, {op.id, v},
              "vertex " + std::to_string(v) + " appears in more than one meta-op slot");
          continue;
        }
        meta_of[v] = static_cast<int>(m);
      }
    }
  }

  // Meta-op order: no vertex of a later meta-op may reach an earlier one.
  if (acyclic && edges_ok && !metas.empty()) {
    std::vector<int> ancestor_max(n, -1);
    for (VertexId v : order) {
      int upstream = -1;
      for (VertexId p : graph.preds(v)) upstream = std::max(upstream, ancestor_max[p]);
      if (meta_of[v] != -1 && upstream > meta_of[v]) {
        add(ViolationKind::kMetaOpOrder, {metas[meta_of[v]].id, v},
            "vertex " + std::to_string(v) + " of meta-op " + std::to_string(metas[meta_of[v]].id) +
                " is reachable from a later meta-op");
      }
      ancestor_max[v] = std::max(upstream, meta_of[v]);
    }
  }
  return out;
}

std::vector<VertexId> topo_order(const DataflowGraph& graph) {
  std::vector<VertexId> order = kahn(graph);
  if (static_cast<int>(order.size()) != graph.num_vertices()) {
    throw GraphError("cycle detected involving vertex " + std::to_string(find_cycle(graph, order).front()));
  }
  return order;
}

}  // namespace wcplace
