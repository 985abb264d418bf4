// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over dense matrices. Values are
// recorded on a Tape as ops run; backward() walks the tape in reverse, so
// every node is visited exactly once, and adds leaf gradients into the
// Parameters they came from.

#ifndef WCPLACE_NN_AUTODIFF_H_
#define WCPLACE_NN_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "wcplace/nn/matrix.h"

namespace wcplace::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // same shape as value
};

// Named parameters in creation order. Element addresses are stable.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  // Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)), fan_in = rows.
  Parameter& add_xavier(const std::string& name, int rows, int cols, std::uint64_t seed);
  Parameter& add(const std::string& name, Matrix value);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  int size() const { return static_cast<int>(params_.size()); }

  void zero_grad();
  double grad_norm() const;

  // Same names with identical values, in any order.
  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

// Handle to a tape node. Valid while its Tape lives.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape& tape, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  // Computes d loss / d node for every node and adds the parameter leaves'
  // gradients into Parameter::grad. Throws ShapeError unless loss is 1x1.
  void backward(Var loss);

  const Matrix& value(int id) const { return nodes_[id].value; }
  // Gradient from the last backward(); empty if the node was unreached.
  const Matrix& grad(Var v) const { return nodes_[v.id()].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Op plumbing: records a node whose backward receives the output gradient.
  Var record(Matrix value, const std::vector<Var>& parents, BackwardFn backward);
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }
  // Gradient accumulator for a parent, allocated on first use.
  Matrix& grad_slot(Var v);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

// Forward ops. All throw ShapeError naming both shapes on mismatch.
Var matmul(Var a, Var b);
// Elementwise sum; b may also be a single row broadcast over a's rows.
Var add(Var a, Var b);
// Elementwise product of equal shapes.
Var mul(Var a, Var b);
// Column-wise concatenation of matrices with equal row counts.
Var concat(const std::vector<Var>& parts);
// out[i] = a[indices[i]].
Var row_gather(Var a, const std::vector<int>& indices);
// out[s] = sum of rows i with segments[i] == s, for s in [0, num_segments).
Var segment_sum(Var a, const std::vector<int>& segments, int num_segments);
Var leaky_relu(Var a, double slope = 0.01);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var log(Var a);
// Sum of all entries as a 1x1.
Var sum(Var a);
Var scalar_mul(Var a, double c);
Var transpose(Var a);

// Affine map x W + b over rows.
Var linear(Var x, Var w, Var b);

}  // namespace wcplace::nn

#endif  // WCPLACE_NN_AUTODIFF_H_
