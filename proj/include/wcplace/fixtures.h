// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small hand-built graphs and a random DAG generator used by tests, the
// acceptance suite and `wcplace gen`. All fixtures run on fixture_cluster():
// 1000 FLOPs/ms and 1000 bytes/ms, so with the default comm factor of 4 a
// vertex of f FLOPs runs f/1000 ms and b output bytes travel in 4b/1000 ms.

#ifndef WCPLACE_FIXTURES_H_
#define WCPLACE_FIXTURES_H_

#include <cstdint>

#include "wcplace/cluster.h"
#include "wcplace/graph.h"

namespace wcplace {

ClusterSpec fixture_cluster(int devices = 2);

// Input 0 feeds a light branch 1 -> 3 and a heavy branch 2 -> 4 that join
// in 5. Exec times 4, 10, 5, 3, 2 ms; transfers of 1..4 cost 2, 3, 2, 1 ms.
DataflowGraph six_vertex_fixture();

// Input 0 feeds 1 (6 ms) and 2 (3 ms), which join in 3 (2 ms). Transfers of
// 1 and 2 cost 2 ms and 1 ms.
DataflowGraph diamond_fixture();

// Input 0 followed by `length` - 1 vertices of 1..length-1 ms.
DataflowGraph chain_fixture(int length);

// Random DAG on `vertices` vertices: each pair i < j is an edge with
// probability `edge_prob`; vertex 0 is always an entry. Entries are inputs,
// every other vertex has 1000..10000 FLOPs and every vertex 100..2000 bytes.
DataflowGraph random_dag(int vertices, double edge_prob, std::uint64_t seed);

}  // namespace wcplace

#endif  // WCPLACE_FIXTURES_H_
