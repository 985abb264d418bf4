// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/nn/autodiff.h"

#include <algorithm>
#include <cmath>
#include <random>

namespace wcplace::nn {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape() + " and " + b.shape());
}

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw std::invalid_argument("variable is not bound to a tape");
  return *a.tape();
}

}  // namespace

ParamStore::ParamStore(const ParamStore& other) : index_(other.index_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    ParamStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParamStore::add(const std::string& name, Matrix value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter \"" + name + "\"");
  Matrix grad(value.rows(), value.cols());
  params_.push_back(std::make_unique<Parameter>(Parameter{name, std::move(value), std::move(grad)}));
  index_[name] = params_.size() - 1;
  return *params_.back();
}

Parameter& ParamStore::add_xavier(const std::string& name, int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix m(rows, cols);
  for (double& x : m.values()) x = dist(rng);
  return add(name, std::move(m));
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter \"" + name + "\"");
  return *params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter \"" + name + "\"");
  return *params_[it->second];
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) std::fill(p->grad.values().begin(), p->grad.values().end(), 0.0);
}

double ParamStore::grad_norm() const {
  double ss = 0.0;
  for (const auto& p : params_) {
    for (double g : p->grad.values()) ss += g * g;
  }
  return std::sqrt(ss);
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.params_.size() != b.params_.size()) return false;
  for (const auto& p : a.params_) {
    if (!b.contains(p->name) || b.get(p->name).value != p->value) return false;
  }
  return true;
}

const Matrix& Var::value() const { return tape_of(*this).value(id_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), {}, nullptr, nullptr, false});
  return Var(this, size() - 1);
}

Var Tape::param(Parameter& p) {
  nodes_.push_back({p.value, {}, nullptr, &p, true});
  return Var(this, size() - 1);
}

Var Tape::record(Matrix value, const std::vector<Var>& parents, BackwardFn backward) {
  bool needs = false;
  for (Var p : parents) {
    if (p.tape() != this) throw std::invalid_argument("op mixes variables from different tapes");
    needs = needs || nodes_[p.id()].needs_grad;
  }
  nodes_.push_back({std::move(value), {}, needs ? std::move(backward) : nullptr, nullptr, needs});
  return Var(this, size() - 1);
}

Matrix& Tape::grad_slot(Var v) {
  Node& n = nodes_[v.id()];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::invalid_argument("loss belongs to another tape");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward needs a 1x1 loss, got " + lv.shape());
  for (Node& n : nodes_) n.grad = Matrix();
  nodes_[loss.id()].grad = Matrix::scalar(1.0);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    if (n.backward) {
      // The callback only touches parents (lower ids), never this node.
      n.backward(*this, n.grad);
    }
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

Var matmul(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.cols() != y.rows()) shape_error("matmul", x, y);
  Matrix out(x.rows(), y.cols());
  for (int i = 0; i < x.rows(); ++i) {
    double* o = out.row(i);
    for (int k = 0; k < x.cols(); ++k) {
      const double xik = x(i, k);
      if (xik == 0.0) continue;
      const double* yk = y.row(k);
      for (int j = 0; j < y.cols(); ++j) o[j] += xik * yk[j];
    }
  }
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    const Matrix& x = a.value();
    const Matrix& y = b.value();
    if (t.needs_grad(a)) {
      Matrix& ga = t.grad_slot(a);  // g y^T
      for (int i = 0; i < g.rows(); ++i) {
        for (int k = 0; k < y.rows(); ++k) {
          const double* gi = g.row(i);
          const double* yk = y.row(k);
          double s = 0.0;
          for (int j = 0; j < g.cols(); ++j) s += gi[j] * yk[j];
          ga(i, k) += s;
        }
      }
    }
    if (t.needs_grad(b)) {
      Matrix& gb = t.grad_slot(b);  // x^T g
      for (int i = 0; i < x.rows(); ++i) {
        const double* gi = g.row(i);
        for (int k = 0; k < x.cols(); ++k) {
          const double xik = x(i, k);
          if (xik == 0.0) continue;
          double* gk = gb.row(k);
          for (int j = 0; j < g.cols(); ++j) gk[j] += xik * gi[j];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  const bool broadcast = !x.same_shape(y);
  if (broadcast && !(y.rows() == 1 && y.cols() == x.cols())) shape_error("add", x, y);
  Matrix out = x;
  for (int i = 0; i < x.rows(); ++i) {
    const double* yi = y.row(broadcast ? 0 : i);
    double* o = out.row(i);
    for (int j = 0; j < x.cols(); ++j) o[j] += yi[j];
  }
  return tape_of(a).record(std::move(out), {a, b}, [a, b, broadcast](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.grad_slot(a) += g;
    if (t.needs_grad(b)) {
      Matrix& gb = t.grad_slot(b);
      if (!broadcast) {
        gb += g;
      } else {
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
        }
      }
    }
  });
}

Var mul(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (!x.same_shape(y)) shape_error("mul", x, y);
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= y.values()[i];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) {
      Matrix& ga = t.grad_slot(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga.values()[i] += g.values()[i] * b.value().values()[i];
    }
    if (t.needs_grad(b)) {
      Matrix& gb = t.grad_slot(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb.values()[i] += g.values()[i] * a.value().values()[i];
    }
  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat of no matrices");
  const int rows = parts.front().rows();
  int cols = 0;
  for (Var p : parts) {
    if (p.rows() != rows) shape_error("concat", parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  int offset = 0;
  for (Var p : parts) {
    const Matrix& v = p.value();
    for (int i = 0; i < rows; ++i) std::copy(v.row(i), v.row(i) + v.cols(), out.row(i) + offset);
    offset += v.cols();
  }
  return tape_of(parts.front()).record(std::move(out), parts, [parts](Tape& t, const Matrix& g) {
    int offset = 0;
    for (Var p : parts) {
      const int c = p.cols();
      if (t.needs_grad(p)) {
        Matrix& gp = t.grad_slot(p);
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < c; ++j) gp(i, j) += g(i, offset + j);
        }
      }
      offset += c;
    }
  });
}

Var row_gather(Var a, const std::vector<int>& indices) {
  const Matrix& x = a.value();
  Matrix out(static_cast<int>(indices.size()), x.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= x.rows()) {
      throw ShapeError("row_gather: index " + std::to_string(indices[i]) + " outside " + x.shape());
    }
    std::copy(x.row(indices[i]), x.row(indices[i]) + x.cols(), out.row(static_cast<int>(i)));
  }
  return tape_of(a).record(std::move(out), {a}, [a, indices](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_slot(a);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      for (int j = 0; j < g.cols(); ++j) ga(indices[i], j) += g(static_cast<int>(i), j);
    }
  });
}

Var segment_sum(Var a, const std::vector<int>& segments, int num_segments) {
  const Matrix& x = a.value();
  if (static_cast<int>(segments.size()) != x.rows()) {
    throw ShapeError("segment_sum: " + std::to_string(segments.size()) + " segment ids for " + x.shape());
  }
  Matrix out(num_segments, x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    if (segments[i] < 0 || segments[i] >= num_segments) {
      throw ShapeError("segment_sum: segment " + std::to_string(segments[i]) + " outside [0, " +
                       std::to_string(num_segments) + ")");
    }
    double* o = out.row(segments[i]);
    for (int j = 0; j < x.cols(); ++j) o[j] += x(i, j);
  }
  return tape_of(a).record(std::move(out), {a}, [a, segments](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_slot(a);
    for (std::size_t i = 0; i < segments.size(); ++i) {
      for (int j = 0; j < g.cols(); ++j) ga(static_cast<int>(i), j) += g(segments[i], j);
    }
  });
}

Var leaky_relu(Var a, double slope) {
  Matrix out = a.value();
  for (double& x : out.values()) x = x > 0 ? x : slope * x;
  return tape_of(a).record(std::move(out), {a}, [a, slope](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_slot(a);
    const auto& x = a.value().values();
    for (std::size_t i = 0; i < g.size(); ++i) ga.values()[i] += g.values()[i] * (x[i] > 0 ? 1.0 : slope);
  });
}

Var softmax_rows(Var a) {
  Matrix out = a.value();
  for (int i = 0; i < out.rows(); ++i) {
    double* r = out.row(i);
    const double m = *std::max_element(r, r + out.cols());
    double z = 0.0;
    for (int j = 0; j < out.cols(); ++j) z += (r[j] = std::exp(r[j] - m));
    for (int j = 0; j < out.cols(); ++j) r[j] /= z;
  }
  const int id = tape_of(a).size();  // id of the node about to be recorded
  return tape_of(a).record(std::move(out), {a}, [a, id](Tape& t, const Matrix& g) {
    const Matrix& s = t.value(id);
    Matrix& ga = t.grad_slot(a);
    for (int i = 0; i < s.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < s.cols(); ++j) dot += g(i, j) * s(i, j);
      for (int j = 0; j < s.cols(); ++j) ga(i, j) += s(i, j) * (g(i, j) - dot);
    }
  });
}

Var log_softmax_rows(Var a) {
  Matrix out = a.value();
  for (int i = 0; i < out.rows(); ++i) {
    double* r = out.row(i);
    const double m = *std::max_element(r, r + out.cols());
    double z = 0.0;
    for (int j = 0; j < out.cols(); ++j) z += std::exp(r[j] - m);
    const double lse = m + std::log(z);
    for (int j = 0; j < out.cols(); ++j) r[j] -= lse;
  }
  const int id = tape_of(a).size();
  return tape_of(a).record(std::move(out), {a}, [a, id](Tape& t, const Matrix& g) {
    const Matrix& ls = t.value(id);
    Matrix& ga = t.grad_slot(a);
    for (int i = 0; i < ls.rows(); ++i) {
      double total = 0.0;
      for (int j = 0; j < ls.cols(); ++j) total += g(i, j);
      for (int j = 0; j < ls.cols(); ++j) ga(i, j) += g(i, j) - std::exp(ls(i, j)) * total;
    }
  });
}

Var log(Var a) {
  Matrix out = a.value();
  for (double& x : out.values()) x = std::log(x);
  return tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_slot(a);
    const auto& x = a.value().values();
    for (std::size_t i = 0; i < g.size(); ++i) ga.values()[i] += g.values()[i] / x[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  return tape_of(a).record(Matrix::scalar(s), {a}, [a](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_slot(a);
    for (double& x : ga.values()) x += g(0, 0);
  });
}

Var scalar_mul(Var a, double c) {
  Matrix out = a.value();
  for (double& x : out.values()) x *= c;
  return tape_of(a).record(std::move(out), {a}, [a, c](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.values()[i] += c * g.values()[i];
  });
}

Var transpose(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.cols(), x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  }
  return tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_slot(a);
    for (int i = 0; i < g.rows(); ++i) {
      for (int j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
    }
  });
}

Var linear(Var x, Var w, Var b) { return add(matmul(x, w), b); }

}  // namespace wcplace::nn
