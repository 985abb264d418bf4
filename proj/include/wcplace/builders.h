// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// Builders for sharded ("exploded") tensor dataflow graphs. Every matrix is
// cut into a shard_grid x shard_grid grid of blocks. A blocked matmul turns
// into shard_grid^3 block multiplies plus shard_grid^2 * (shard_grid - 1)
// partial-sum additions, chained per output block. The shards of one
// original operation are grouped into meta-ops holding at most `devices`
// shard ops each; a partial-sum addition lives in the meta-op of the block
// multiply it folds in, so the meta-op list stays topologically ordered.
// Tensors are float32 (4 bytes per element).

#ifndef WCPLACE_BUILDERS_H_
#define WCPLACE_BUILDERS_H_

#include <cstdint>
#include <vector>

#include "wcplace/graph.h"

namespace wcplace {

inline constexpr int kDefaultBuilderDevices = 4;

struct MatrixShape {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
};

// Left-associated product M0 x M1 x ... of the given matrices. Throws
// std::invalid_argument on non-conformable shapes, shard_grid < 1, or any
// dimension smaller than shard_grid.
DataflowGraph explode_matmul_chain(const std::vector<MatrixShape>& matrices, int shard_grid,
                                   int devices = kDefaultBuilderDevices);

// (A x B) + (C x (D x E)) with all five inputs n x n.
DataflowGraph build_chainmm(std::int64_t n, int shard_grid, int devices = kDefaultBuilderDevices);

// Softmax(ReLU(X W1 + b1) W2 + b2). The softmax is expanded into a row max,
// a broadcast subtract-exp, a row sum and a broadcast divide; row reductions
// over a sharded row produce one partial per block plus one combine per row
// block.
DataflowGraph build_ffnn(std::int64_t batch, std::int64_t d_in, std::int64_t d_hidden,
                         std::int64_t d_out, int shard_grid, int devices = kDefaultBuilderDevices);

}  // namespace wcplace

#endif  // WCPLACE_BUILDERS_H_
