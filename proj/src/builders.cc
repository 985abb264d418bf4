// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/builders.h"

#include <stdexcept>
#include <string>
#include <utility>

namespace wcplace {

namespace {

constexpr std::int64_t kBytesPerElement = 4;

// Near-even split of `dim` into `parts` extents.
std::vector<std::int64_t> split(std::int64_t dim, int parts) {
  std::vector<std::int64_t> out(parts, dim / parts);
  for (int i = 0; i < dim % parts; ++i) ++out[i];
  return out;
}

struct Blocked {
  std::vector<std::int64_t> row_extent;
  std::vector<std::int64_t> col_extent;
  std::vector<std::vector<VertexId>> ids;  // [row block][col block]

  int row_blocks() const { return static_cast<int>(row_extent.size()); }
  int col_blocks() const { return static_cast<int>(col_extent.size()); }
};

// A shard op together with the reduce ops that must share its meta-op.
struct ShardItem {
  VertexId shard;
  std::vector<VertexId> reduces;
};

class ShardedGraphBuilder {
 public:
  ShardedGraphBuilder(int grid, int devices) : grid_(grid), devices_(devices) {
    if (grid < 1) throw std::invalid_argument("shard_grid must be >= 1");
    if (devices < 1) throw std::invalid_argument("devices must be >= 1");
  }

  Blocked input(const std::string& name, std::int64_t rows, std::int64_t cols) {
    check_dim(name, rows);
    check_dim(name, cols);
    Blocked b{split(rows, grid_), split(cols, grid_), {}};
    b.ids.assign(grid_, std::vector<VertexId>(grid_));
    for (int i = 0; i < grid_; ++i) {
      for (int j = 0; j < grid_; ++j) {
        b.ids[i][j] = add_vertex(OpKind::kInput, 0, b.row_extent[i] * b.col_extent[j],
                                 block_label(name, i, j));
      }
    }
    return b;
  }

  // 1 x cols vector, sharded along its columns.
  Blocked input_row_vector(const std::string& name, std::int64_t cols) {
    check_dim(name, cols);
    Blocked b{{1}, split(cols, grid_), {}};
    b.ids.assign(1, std::vector<VertexId>(grid_));
    for (int j = 0; j < grid_; ++j) {
      b.ids[0][j] = add_vertex(OpKind::kInput, 0, b.col_extent[j], name + "[" + std::to_string(j) + "]");
    }
    return b;
  }

  Blocked matmul(const Blocked& a, const Blocked& b, const std::string& name) {
    if (a.col_extent != b.row_extent) {
      throw std::invalid_argument("non-conformable matmul for " + name);
    }
    const int rows = a.row_blocks(), cols = b.col_blocks(), inner = a.col_blocks();
    Blocked out{a.row_extent, b.col_extent, {}};
    out.ids.assign(rows, std::vector<VertexId>(cols, -1));
    std::vector<ShardItem> items;
    for (int k = 0; k < inner; ++k) {
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
          const std::int64_t m = a.row_extent[i], kk = a.col_extent[k], n = b.col_extent[j];
          VertexId mul = add_vertex(OpKind::kMatmul, 2 * m * kk * n, m * n,
                                    name + ".mul" + idx3(i, j, k));
          add_edge(a.ids[i][k], mul);
          add_edge(b.ids[k][j], mul);
          ShardItem item{mul, {}};
          if (k == 0) {
            out.ids[i][j] = mul;
          } else {
            VertexId sum = add_vertex(OpKind::kAdd, m * n, m * n, name + ".add" + idx3(i, j, k));
            add_edge(out.ids[i][j], sum);
            add_edge(mul, sum);
            out.ids[i][j] = sum;
            item.reduces.push_back(sum);
          }
          items.push_back(std::move(item));
        }
      }
    }
    emit_meta_ops(items);
    return out;
  }

  // Same-shape elementwise op over two operands.
  Blocked straight(const Blocked& a, const Blocked& b, OpKind kind, const std::string& name) {
    if (a.row_extent != b.row_extent || a.col_extent != b.col_extent) {
      throw std::invalid_argument("shape mismatch for " + name);
    }
    return map_blocks(a, kind, name, [&](int i, int j, VertexId v) {
      add_edge(a.ids[i][j], v);
      add_edge(b.ids[i][j], v);
    });
  }

  Blocked unary(const Blocked& a, const std::string& name) {
    return map_blocks(a, OpKind::kElemwise, name, [&](int i, int j, VertexId v) {
      add_edge(a.ids[i][j], v);
    });
  }

  // Matrix combined with a 1 x cols row vector broadcast down the rows.
  Blocked bcast_row(const Blocked& a, const Blocked& vec, const std::string& name) {
    if (vec.col_extent != a.col_extent) throw std::invalid_argument("bcast shape mismatch for " + name);
    return map_blocks(a, OpKind::kElemwise, name, [&](int i, int j, VertexId v) {
      add_edge(a.ids[i][j], v);
      add_edge(vec.ids[0][j], v);
    });
  }

  // Matrix combined with a rows x 1 column vector broadcast across columns.
  Blocked bcast_col(const Blocked& a, const Blocked& vec, const std::string& name) {
    if (vec.row_extent != a.row_extent) throw std::invalid_argument("bcast shape mismatch for " + name);
    return map_blocks(a, OpKind::kElemwise, name, [&](int i, int j, VertexId v) {
      add_edge(a.ids[i][j], v);
      add_edge(vec.ids[i][0], v);
    });
  }

  // Row-wise reduction to a rows x 1 column vector: one partial per block,
  // then (for more than one column block) one combine per row block.
  Blocked row_reduce(const Blocked& a, const std::string& name) {
    Blocked out{a.row_extent, {1}, {}};
    out.ids.assign(a.row_blocks(), std::vector<VertexId>(1, -1));
    std::vector<ShardItem> items;
    for (int i = 0; i < a.row_blocks(); ++i) {
      const std::int64_t m = a.row_extent[i];
      std::vector<VertexId> partials;
      for (int j = 0; j < a.col_blocks(); ++j) {
        VertexId p = add_vertex(OpKind::kReduction, m * a.col_extent[j], m,
                                name + ".part" + idx2(i, j));
        add_edge(a.ids[i][j], p);
        partials.push_back(p);
        items.push_back({p, {}});
      }
      if (partials.size() == 1) {
        out.ids[i][0] = partials.front();
        continue;
      }
      VertexId combine = add_vertex(OpKind::kReduction, m * static_cast<std::int64_t>(partials.size() - 1),
                                    m, name + ".combine[" + std::to_string(i) + "]");
      for (VertexId p : partials) add_edge(p, combine);
      items.back().reduces.push_back(combine);
      out.ids[i][0] = combine;
    }
    emit_meta_ops(items);
    return out;
  }

  DataflowGraph finish() && {
    return DataflowGraph(std::move(vertices_), std::move(edges_), std::move(meta_ops_));
  }

 private:
  template <typename Wire>
  Blocked map_blocks(const Blocked& a, OpKind kind, const std::string& name, Wire wire) {
    Blocked out{a.row_extent, a.col_extent, {}};
    out.ids.assign(a.row_blocks(), std::vector<VertexId>(a.col_blocks(), -1));
    std::vector<ShardItem> items;
    for (int i = 0; i < a.row_blocks(); ++i) {
      for (int j = 0; j < a.col_blocks(); ++j) {
        const std::int64_t elems = a.row_extent[i] * a.col_extent[j];
        VertexId v = add_vertex(kind, elems, elems, name + idx2(i, j));
        wire(i, j, v);
        out.ids[i][j] = v;
        items.push_back({v, {}});
      }
    }
    emit_meta_ops(items);
    return out;
  }

  void emit_meta_ops(const std::vector<ShardItem>& items) {
    for (std::size_t begin = 0; begin < items.size(); begin += devices_) {
      MetaOp op;
      op.id = static_cast<int>(meta_ops_.size());
      for (std::size_t k = begin; k < std::min(items.size(), begin + devices_); ++k) {
        op.shard_ops.push_back(items[k].shard);
        op.reduce_ops.insert(op.reduce_ops.end(), items[k].reduces.begin(), items[k].reduces.end());
      }
      meta_ops_.push_back(std::move(op));
    }
  }

  VertexId add_vertex(OpKind kind, std::int64_t flops, std::int64_t elements, std::string label) {
    const VertexId id = static_cast<VertexId>(vertices_.size());
    vertices_.push_back({id, kind, flops, elements * kBytesPerElement, std::move(label)});
    return id;
  }

  void add_edge(VertexId src, VertexId dst) { edges_.push_back({src, dst}); }

  void check_dim(const std::string& name, std::int64_t dim) const {
    if (dim < grid_) {
      throw std::invalid_argument("dimension of " + name + " (" + std::to_string(dim) +
                                  ") is smaller than shard_grid " + std::to_string(grid_));
    }
  }

  static std::string block_label(const std::string& name, int i, int j) { return name + idx2(i, j); }
  static std::string idx2(int i, int j) {
    return "[" + std::to_string(i) + "," + std::to_string(j) + "]";
  }
  static std::string idx3(int i, int j, int k) {
    return "[" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + "]";
  }

  int grid_;
  std::size_t devices_;
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<MetaOp> meta_ops_;
};

}  // namespace

DataflowGraph explode_matmul_chain(const std::vector<MatrixShape>& matrices, int shard_grid,
                                   int devices) {
  if (matrices.size() < 2) throw std::invalid_argument("a matmul chain needs at least two matrices");
  for (std::size_t i = 0; i + 1 < matrices.size(); ++i) {
    if (matrices[i].cols != matrices[i + 1].rows) {
      throw std::invalid_argument("non-conformable dims: M" + std::to_string(i) + " is " +
                                  std::to_string(matrices[i].rows) + "x" + std::to_string(matrices[i].cols) +
                                  " but M" + std::to_string(i + 1) + " is " +
                                  std::to_string(matrices[i + 1].rows) + "x" +
                                  std::to_string(matrices[i + 1].cols));
    }
  }
  ShardedGraphBuilder b(shard_grid, devices);
  std::vector<Blocked> inputs;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    inputs.push_back(b.input("M" + std::to_string(i), matrices[i].rows, matrices[i].cols));
  }
  Blocked acc = inputs[0];
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    acc = b.matmul(acc, inputs[i], "mm" + std::to_string(i - 1));
  }
  return std::move(b).finish();
}

DataflowGraph build_chainmm(std::int64_t n, int shard_grid, int devices) {
  ShardedGraphBuilder b(shard_grid, devices);
  Blocked a = b.input("A", n, n);
  Blocked bm = b.input("B", n, n);
  Blocked c = b.input("C", n, n);
  Blocked d = b.input("D", n, n);
  Blocked e = b.input("E", n, n);
  Blocked ab = b.matmul(a, bm, "AxB");
  Blocked de = b.matmul(d, e, "DxE");
  Blocked cde = b.matmul(c, de, "Cx(DxE)");
  b.straight(ab, cde, OpKind::kAdd, "sum");
  return std::move(b).finish();
}

DataflowGraph build_ffnn(std::int64_t batch, std::int64_t d_in, std::int64_t d_hidden,
                         std::int64_t d_out, int shard_grid, int devices) {
  if (batch <= 0 || d_in <= 0 || d_hidden <= 0 || d_out <= 0) {
    throw std::invalid_argument("ffnn dims must be positive");
  }
  ShardedGraphBuilder b(shard_grid, devices);
  Blocked x = b.input("X", batch, d_in);
  Blocked w1 = b.input("W1", d_in, d_hidden);
  Blocked b1 = b.input_row_vector("b1", d_hidden);
  Blocked w2 = b.input("W2", d_hidden, d_out);
  Blocked b2 = b.input_row_vector("b2", d_out);

  Blocked h = b.matmul(x, w1, "XW1");
  h = b.bcast_row(h, b1, "bias1");
  h = b.unary(h, "relu");
  Blocked y = b.matmul(h, w2, "HW2");
  y = b.bcast_row(y, b2, "bias2");
  Blocked row_max = b.row_reduce(y, "max");
  Blocked shifted = b.bcast_col(y, row_max, "sub_exp");
  Blocked row_sum = b.row_reduce(shifted, "sum");
  b.bcast_col(shifted, row_sum, "div");
  return std::move(b).finish();
}

}  // namespace wcplace
