// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataflow graph data model: vertices carry compute cost (FLOPs) and result
// size (bytes), edges carry data dependencies, and meta-ops group the shards
// and reductions descended from one original tensor operation.

#ifndef WCPLACE_GRAPH_H_
#define WCPLACE_GRAPH_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wcplace {

using VertexId = int;
using DeviceId = int;

enum class OpKind { kInput, kMatmul, kAdd, kElemwise, kReduction, kFormation, kOther };

std::string_view op_kind_name(OpKind kind);
std::optional<OpKind> parse_op_kind(std::string_view name);

struct Vertex {
  VertexId id = 0;
  OpKind op_kind = OpKind::kOther;
  std::int64_t flops = 0;
  std::int64_t output_bytes = 0;
  std::string label;

  friend bool operator==(const Vertex&, const Vertex&) = default;
};

struct Edge {
  VertexId src = 0;
  VertexId dst = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct MetaOp {
  int id = 0;
  std::vector<VertexId> shard_ops;
  std::vector<VertexId> reduce_ops;

  friend bool operator==(const MetaOp&, const MetaOp&) = default;
};

// Immutable after construction. Adjacency lists are derived from the edge
// list; edges whose endpoints fall outside [0, n) are kept in edges() (so
// validate() can report them) but are left out of the adjacency.
class DataflowGraph {
 public:
  DataflowGraph() = default;
  DataflowGraph(std::vector<Vertex> vertices, std::vector<Edge> edges,
                std::vector<MetaOp> meta_ops = {});

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const Vertex& vertex(VertexId v) const { return vertices_[v]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<MetaOp>& meta_ops() const { return meta_ops_; }

  // Sorted ascending, duplicates preserved.
  const std::vector<VertexId>& preds(VertexId v) const { return preds_[v]; }
  const std::vector<VertexId>& succs(VertexId v) const { return succs_[v]; }

  bool is_entry(VertexId v) const { return preds_[v].empty(); }
  bool is_exit(VertexId v) const { return succs_[v].empty(); }
  std::vector<VertexId> entries() const;
  std::vector<VertexId> exits() const;

  friend bool operator==(const DataflowGraph& a, const DataflowGraph& b) {
    return a.vertices_ == b.vertices_ && a.edges_ == b.edges_ && a.meta_ops_ == b.meta_ops_;
  }

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<MetaOp> meta_ops_;
  std::vector<std::vector<VertexId>> preds_;
  std::vector<std::vector<VertexId>> succs_;
};

enum class ViolationKind {
  kEmptyGraph,
  kNonDenseId,
  kInputFlops,
  kZeroOutputBytes,
  kEdgeOutOfRange,
  kSelfLoop,
  kDuplicateEdge,
  kCycle,
  kMetaOpUnknownVertex,
  kMetaOpOverlap,
  kMetaOpReduceTooLarge,
  kMetaOpOrder,
};

std::string_view violation_kind_name(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::vector<int> ids;
  std::string message;
};

// Returns every invariant violation found; an empty list means the graph is
// valid.
std::vector<Violation> validate(const DataflowGraph& graph);

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Kahn's algorithm with a min-heap, so ties go to the smallest vertex id.
// Throws GraphError naming a vertex on a cycle.
std::vector<VertexId> topo_order(const DataflowGraph& graph);

}  // namespace wcplace

#endif  // WCPLACE_GRAPH_H_
