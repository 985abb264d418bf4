// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/fixtures.h"

#include <random>
#include <stdexcept>
#include <string>

namespace wcplace {

namespace {

Vertex input(VertexId id, std::int64_t bytes) { return {id, OpKind::kInput, 0, bytes, "in" + std::to_string(id)}; }

Vertex op(VertexId id, std::int64_t flops, std::int64_t bytes) {
  return {id, OpKind::kOther, flops, bytes, "op" + std::to_string(id)};
}

}  // namespace

ClusterSpec fixture_cluster(int devices) { return ClusterSpec::uniform(devices, 1000.0, 1000.0); }

DataflowGraph six_vertex_fixture() {
  return DataflowGraph({input(0, 1000), op(1, 4000, 500), op(2, 10000, 750), op(3, 5000, 500), op(4, 3000, 250),
                        op(5, 2000, 100)},
                       {{0, 1}, {0, 2}, {1, 3}, {2, 4}, {3, 5}, {4, 5}});
}

DataflowGraph diamond_fixture() {
  return DataflowGraph({input(0, 1000), op(1, 6000, 500), op(2, 3000, 250), op(3, 2000, 100)},
                       {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
}

DataflowGraph chain_fixture(int length) {
  if (length < 1) throw std::invalid_argument("chain length must be >= 1");
  std::vector<Vertex> vertices{input(0, 400)};
  std::vector<Edge> edges;
  for (VertexId v = 1; v < length; ++v) {
    vertices.push_back(op(v, 1000 * v, 400));
    edges.push_back({v - 1, v});
  }
  return DataflowGraph(std::move(vertices), std::move(edges));
}

DataflowGraph random_dag(int vertices, double edge_prob, std::uint64_t seed) {
  if (vertices < 1) throw std::invalid_argument("random DAG needs at least one vertex");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(edge_prob);
  std::uniform_int_distribution<std::int64_t> flops(1, 10);
  std::uniform_int_distribution<std::int64_t> bytes(1, 20);
  std::vector<Edge> edges;
  std::vector<bool> has_pred(vertices, false);
  for (VertexId j = 1; j < vertices; ++j) {
    for (VertexId i = 0; i < j; ++i) {
      if (coin(rng)) {
        edges.push_back({i, j});
        has_pred[j] = true;
      }
    }
  }
  std::vector<Vertex> vs;
  for (VertexId v = 0; v < vertices; ++v) {
    const std::int64_t b = 100 * bytes(rng);
    const std::int64_t f = 1000 * flops(rng);
    vs.push_back(has_pred[v] ? op(v, f, b) : input(v, b));
  }
  return DataflowGraph(std::move(vs), std::move(edges));
}

}  // namespace wcplace
