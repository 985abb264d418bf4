// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "wcplace/nn/autodiff.h"
#include "wcplace/nn/optim.h"

namespace wcplace::nn {
namespace {

constexpr int kTrials = 100;
constexpr double kStep = 1e-4;
constexpr double kRelTol = 1e-3;

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (double& x : m.values()) x = u(rng);
  return m;
}

using OpFn = std::function<Var(const std::vector<Var>&)>;

// Loss = sum(op(inputs) * weights) with fixed random weights so that every
// output entry carries a distinct gradient.
double eval_loss(const std::vector<Matrix>& inputs, const OpFn& fn, const Matrix* weights, Matrix* out_shape) {
  Tape tape;
  std::vector<Var> vars;
  for (const Matrix& m : inputs) vars.push_back(tape.constant(m));
  Var out = fn(vars);
  if (out_shape) *out_shape = out.value();
  if (!weights) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < out.value().size(); ++i) s += out.value().values()[i] * weights->values()[i];
  return s;
}

// Analytic gradients through Parameters against central differences.
void check_gradients(const std::vector<Matrix>& inputs, const OpFn& fn, std::mt19937_64& rng, const std::string& what) {
  Matrix out;
  eval_loss(inputs, fn, nullptr, &out);
  const Matrix weights = random_matrix(rng, out.rows(), out.cols());

  ParamStore store;
  for (std::size_t i = 0; i < inputs.size(); ++i) store.add("x" + std::to_string(i), inputs[i]);
  Tape tape;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < inputs.size(); ++i) vars.push_back(tape.param(store.get("x" + std::to_string(i))));
  tape.backward(sum(mul(fn(vars), tape.constant(weights))));

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Matrix& analytic = store.get("x" + std::to_string(i)).grad;
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      std::vector<Matrix> plus = inputs, minus = inputs;
      plus[i].values()[k] += kStep;
      minus[i].values()[k] -= kStep;
      const double numeric = (eval_loss(plus, fn, &weights, nullptr) - eval_loss(minus, fn, &weights, nullptr)) /
                             (2 * kStep);
      const double a = analytic.values()[k];
      const double scale = std::max({std::abs(a), std::abs(numeric), 1e-2});
      ASSERT_LE(std::abs(a - numeric), kRelTol * scale)
          << what << ": input " << i << " entry " << k << " analytic " << a << " numeric " << numeric;
    }
  }
}

// Keeps entries away from the leaky-relu kink so differences stay smooth.
Matrix away_from_zero(Matrix m) {
  for (double& x : m.values()) x = x >= 0 ? x + 0.05 : x - 0.05;
  return m;
}

class GradCheck : public ::testing::Test {
 protected:
  template <typename Body>
  void run(Body body) {
    for (int seed = 0; seed < kTrials; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<int> dim(1, 4);
      body(rng, dim);
      if (HasFatalFailure()) return;
    }
  }
};

TEST_F(GradCheck, Matmul) {
  run([](auto& rng, auto& dim) {
    const int n = dim(rng), k = dim(rng), m = dim(rng);
    check_gradients({random_matrix(rng, n, k), random_matrix(rng, k, m)}, [](auto& v) { return matmul(v[0], v[1]); },
                    rng, "matmul");
  });
}

TEST_F(GradCheck, AddAndRowBroadcast) {
  run([](auto& rng, auto& dim) {
    const int r = dim(rng), c = dim(rng);
    check_gradients({random_matrix(rng, r, c), random_matrix(rng, r, c)}, [](auto& v) { return add(v[0], v[1]); },
                    rng, "add");
    check_gradients({random_matrix(rng, r, c), random_matrix(rng, 1, c)}, [](auto& v) { return add(v[0], v[1]); },
                    rng, "add broadcast");
  });
}

TEST_F(GradCheck, Mul) {
  run([](auto& rng, auto& dim) {
    const int r = dim(rng), c = dim(rng);
    check_gradients({random_matrix(rng, r, c), random_matrix(rng, r, c)}, [](auto& v) { return mul(v[0], v[1]); },
                    rng, "mul");
  });
}

TEST_F(GradCheck, Concat) {
  run([](auto& rng, auto& dim) {
    const int r = dim(rng);
    check_gradients({random_matrix(rng, r, dim(rng)), random_matrix(rng, r, dim(rng)), random_matrix(rng, r, 1)},
                    [](auto& v) { return concat({v[0], v[1], v[2]}); }, rng, "concat");
  });
}

TEST_F(GradCheck, RowGatherWithRepeats) {
  run([](auto& rng, auto& dim) {
    const int r = dim(rng), c = dim(rng);
    std::uniform_int_distribution<int> pick(0, r - 1);
    std::vector<int> idx(dim(rng) + 2);
    for (int& i : idx) i = pick(rng);
    check_gradients({random_matrix(rng, r, c)}, [idx](auto& v) { return row_gather(v[0], idx); }, rng, "row_gather");
  });
}

TEST_F(GradCheck, SegmentSum) {
  run([](auto& rng, auto& dim) {
    const int r = dim(rng) + 1, c = dim(rng), segs = dim(rng);
    std::uniform_int_distribution<int> pick(0, segs - 1);
    std::vector<int> seg(r);
    for (int& s : seg) s = pick(rng);
    check_gradients({random_matrix(rng, r, c)}, [seg, segs](auto& v) { return segment_sum(v[0], seg, segs); }, rng,
                    "segment_sum");
  });
}

TEST_F(GradCheck, LeakyRelu) {
  run([](auto& rng, auto& dim) {
    check_gradients({away_from_zero(random_matrix(rng, dim(rng), dim(rng)))},
                    [](auto& v) { return leaky_relu(v[0], 0.01); }, rng, "leaky_relu");
  });
}

TEST_F(GradCheck, SoftmaxAndLogSoftmax) {
  run([](auto& rng, auto& dim) {
    const int r = dim(rng), c = dim(rng) + 1;
    check_gradients({random_matrix(rng, r, c, -3, 3)}, [](auto& v) { return softmax_rows(v[0]); }, rng, "softmax");
    check_gradients({random_matrix(rng, r, c, -3, 3)}, [](auto& v) { return log_softmax_rows(v[0]); }, rng,
                    "log_softmax");
  });
}

TEST_F(GradCheck, Log) {
  run([](auto& rng, auto& dim) {
    check_gradients({random_matrix(rng, dim(rng), dim(rng), 0.2, 3.0)}, [](auto& v) { return log(v[0]); }, rng,
                    "log");
  });
}

TEST_F(GradCheck, SumScalarMulTranspose) {
  run([](auto& rng, auto& dim) {
    const int r = dim(rng), c = dim(rng);
    check_gradients({random_matrix(rng, r, c)}, [](auto& v) { return sum(v[0]); }, rng, "sum");
    check_gradients({random_matrix(rng, r, c)}, [](auto& v) { return scalar_mul(v[0], -1.7); }, rng, "scalar_mul");
    check_gradients({random_matrix(rng, r, c)}, [](auto& v) { return transpose(v[0]); }, rng, "transpose");
  });
}

TEST_F(GradCheck, Linear) {
  run([](auto& rng, auto& dim) {
    const int n = dim(rng), k = dim(rng), m = dim(rng);
    check_gradients({random_matrix(rng, n, k), random_matrix(rng, k, m), random_matrix(rng, 1, m)},
                    [](auto& v) { return linear(v[0], v[1], v[2]); }, rng, "linear");
  });
}

// A small policy-shaped pipeline reusing one input through several paths.
TEST_F(GradCheck, ComposedPipeline) {
  run([](auto& rng, auto& dim) {
    const int n = dim(rng) + 1, h = dim(rng);
    std::vector<int> seg(n);
    for (int i = 0; i < n; ++i) seg[i] = i % 2;
    check_gradients({random_matrix(rng, n, h), random_matrix(rng, 2 * h, 1)},
                    [seg](auto& v) {
                      Var agg = row_gather(segment_sum(v[0], seg, 2), seg);
                      Var logits = transpose(matmul(concat({v[0], agg}), v[1]));
                      return log_softmax_rows(logits);
                    },
                    rng, "pipeline");
  });
}

TEST(Ops, Examples) {
  Tape t;
  const Matrix s = softmax_rows(t.constant(Matrix(1, 4))).value();
  for (double x : s.values()) EXPECT_DOUBLE_EQ(x, 0.25);
  EXPECT_DOUBLE_EQ(leaky_relu(t.constant(Matrix::scalar(-1.0)), 0.01).value()(0, 0), -0.01);
  const Matrix seg = segment_sum(t.constant(Matrix(3, 1, {1, 2, 3})), {0, 0, 1}, 2).value();
  EXPECT_EQ(seg, Matrix(2, 1, {3, 3}));
}

TEST(Ops, SoftmaxRowsSumToOne) {
  std::mt19937_64 rng(4);
  Tape t;
  const Matrix s = softmax_rows(t.constant(random_matrix(rng, 20, 7, -30, 30))).value();
  for (int r = 0; r < s.rows(); ++r) {
    double total = 0;
    for (int c = 0; c < s.cols(); ++c) total += s(r, c);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Ops, ShapeErrorNamesBothShapes) {
  Tape t;
  try {
    matmul(t.constant(Matrix(2, 3)), t.constant(Matrix(2, 3)));
    FAIL();
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos) << what;
  }
  EXPECT_THROW(add(t.constant(Matrix(2, 3)), t.constant(Matrix(3, 2))), ShapeError);
  EXPECT_THROW(concat({t.constant(Matrix(2, 1)), t.constant(Matrix(3, 1))}), ShapeError);
}

TEST(Backward, LinearCaseAndAccumulation) {
  ParamStore store;
  Parameter& w = store.add("w", Matrix(1, 2, {0.5, -1.0}));
  const Matrix x(2, 1, {3.0, 4.0});
  for (int pass = 1; pass <= 2; ++pass) {
    Tape t;
    t.backward(sum(matmul(t.param(w), t.constant(x))));
    EXPECT_EQ(w.grad, Matrix(1, 2, {3.0 * pass, 4.0 * pass}));
  }
  store.zero_grad();
  EXPECT_EQ(w.grad, Matrix(1, 2));
}

TEST(Backward, RejectsNonScalarLoss) {
  ParamStore store;
  Parameter& w = store.add("w", Matrix(2, 2, 1.0));
  Tape t;
  EXPECT_THROW(t.backward(t.param(w)), ShapeError);
}

TEST(Params, XavierBoundsAndDeterminism) {
  ParamStore a, b;
  const Parameter& pa = a.add_xavier("w", 10, 6, 42);
  b.add_xavier("w", 10, 6, 42);
  EXPECT_TRUE(a == b);
  const double bound = std::sqrt(6.0 / 16.0);
  for (double x : pa.value.values()) EXPECT_LE(std::abs(x), bound);
  ParamStore c;
  c.add_xavier("w", 10, 6, 43);
  EXPECT_FALSE(a == c);
}

TEST(Optim, ScheduleEndpointsAndMidpoint) {
  const LinearSchedule s{1e-4, 1e-7, 4000};
  EXPECT_DOUBLE_EQ(s.value(0), 1e-4);
  EXPECT_DOUBLE_EQ(s.value(4000), 1e-7);
  EXPECT_NEAR(s.value(2000), 5.005e-5, 1e-15);
  EXPECT_DOUBLE_EQ(s.value(9000), 1e-7);
}

TEST(Optim, ZeroRateLeavesParams) {
  ParamStore store;
  Parameter& w = store.add("w", Matrix(1, 3, {1, 2, 3}));
  w.grad = Matrix(1, 3, {5, 5, 5});
  Sgd sgd({0.0, 0.0, 10});
  EXPECT_DOUBLE_EQ(sgd.step(store), 0.0);
  EXPECT_EQ(w.value, Matrix(1, 3, {1, 2, 3}));
}

// Minimizing loss = -J with dJ/dtheta = 1 moves theta up by the rate.
TEST(Optim, AscentOnObjective) {
  ParamStore store;
  Parameter& theta = store.add("theta", Matrix::scalar(2.0));
  Tape t;
  t.backward(scalar_mul(t.param(theta), -1.0));
  Sgd sgd({0.1, 0.1, 1});
  EXPECT_NEAR(sgd.step(store), 0.1, 1e-15);
  EXPECT_NEAR(theta.value(0, 0), 2.1, 1e-15);
  EXPECT_EQ(sgd.step_count(), 1);
}

TEST(Checkpoint, RoundTripIsExact) {
  ParamStore store;
  store.add_xavier("b.w", 3, 5, 1);
  store.add_xavier("a.w", 4, 2, 2);
  store.get("a.w").value(0, 0) = 1.0 / 3.0;
  const auto doc = params_to_json(store);
  EXPECT_EQ(doc.at("version"), kCheckpointVersion);
  const ParamStore back = params_from_json(nlohmann::json::parse(doc.dump()));
  EXPECT_TRUE(back == store);
  EXPECT_THROW(params_from_json({{"version", 99}, {"params", nlohmann::json::object()}}), std::invalid_argument);
}

}  // namespace
}  // namespace wcplace::nn
