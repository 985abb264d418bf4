// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "wcplace/builders.h"
#include "wcplace/fixtures.h"
#include "wcplace/heuristics.h"
#include "wcplace/stats.h"
#include "wcplace/training.h"

namespace wcplace {
namespace {

Vertex input(VertexId id, std::int64_t bytes) { return {id, OpKind::kInput, 0, bytes, "in"}; }
Vertex op(VertexId id, std::int64_t flops, std::int64_t bytes) { return {id, OpKind::kOther, flops, bytes, "op"}; }

PolicyConfig small_config() {
  PolicyConfig c;
  c.hidden = 16;
  return c;
}

TrainConfig quick(int episodes, double lr, std::uint64_t seed = 0) {
  TrainConfig t;
  t.episodes = episodes;
  t.lr_start = lr;
  t.lr_end = lr;
  t.seed = seed;
  t.eval_runs = 3;
  return t;
}

class ConstantExecutor final : public Executor {
 public:
  explicit ConstantExecutor(double ms) : ms_(ms) {}
  double run(const DataflowGraph&, const Assignment&) override { return ms_; }

 private:
  double ms_;
};

class FailingExecutor final : public Executor {
 public:
  explicit FailingExecutor(int fail_at) : fail_at_(fail_at) {}
  double run(const DataflowGraph&, const Assignment&) override {
    if (calls_++ == fail_at_) throw std::runtime_error("device lost");
    return 1.0;
  }

 private:
  int fail_at_;
  int calls_ = 0;
};

TEST(TrainConfig, ChecksAndSchedules) {
  TrainConfig t;
  EXPECT_NO_THROW(t.check());
  t.episodes = 5;
  EXPECT_DOUBLE_EQ(t.epsilon(0), 0.2);
  EXPECT_DOUBLE_EQ(t.epsilon(4), 0.0);
  EXPECT_DOUBLE_EQ(t.epsilon(2), 0.1);
  t.episodes = 0;
  EXPECT_THROW(t.check(), std::invalid_argument);
  t.episodes = 1;
  t.entropy_weight = -1;
  EXPECT_THROW(t.check(), std::invalid_argument);
}

TEST(TrainConfig, JsonRoundTripAndOverrides) {
  TrainConfig t = quick(77, 3e-3, 9);
  t.strategy = Strategy::kDepthFirst;
  const TrainConfig back = train_config_from_json(train_config_to_json(t));
  EXPECT_EQ(train_config_to_json(back), train_config_to_json(t));
  const TrainConfig partial = train_config_from_json({{"episodes", 3}}, t);
  EXPECT_EQ(partial.episodes, 3);
  EXPECT_EQ(partial.seed, 9u);
  EXPECT_THROW(train_config_from_json({{"episodes", "many"}}), std::invalid_argument);
}

TEST(RewardTracker, BaselineIsExactMean) {
  RewardTracker t;
  EXPECT_EQ(t.baseline(), 0.0);
  const std::vector<double> rs{-3.0, -7.5, -1.25, -10.0};
  double sum = 0;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    t.add(rs[k]);
    sum += rs[k];
    EXPECT_DOUBLE_EQ(t.baseline(), sum / static_cast<double>(k + 1));
  }
}

TEST(Imitation, SingleVertexLossIsPlacementOnly) {
  const DataflowGraph g({op(0, 1000, 100)}, {});
  ClusterSpec c = fixture_cluster(3);
  c.rate = {1000.0, 3000.0, 2000.0};
  PolicyBundle b = PolicyBundle::create(small_config(), 3);
  const GraphContext ctx(g, c);
  const auto q = plc_distribution(ctx, b, MdpState(ctx), 0);
  const auto report = imitation_stage(g, c, quick(1, 0.0), b);
  // Teacher places on the fastest device.
  EXPECT_NEAR(report.curve[0].loss, -std::log(q[1]), 1e-12);
}

TEST(Imitation, ZeroRateKeepsParams) {
  const DataflowGraph g = six_vertex_fixture();
  PolicyBundle b = PolicyBundle::create(small_config(), 4);
  const nn::ParamStore before = b.params();
  const auto report = imitation_stage(g, fixture_cluster(2), quick(5, 0.0), b);
  EXPECT_TRUE(b.params() == before);
  for (const CurvePoint& p : report.curve) {
    EXPECT_TRUE(std::isfinite(p.loss));
    EXPECT_EQ(p.update_norm, 0.0);
  }
}

TEST(Imitation, ChainAgreementReachesTarget) {
  const DataflowGraph g = chain_fixture(4);
  PolicyBundle b = PolicyBundle::create(small_config(), 5);
  imitation_stage(g, fixture_cluster(2), quick(200, 1e-2), b);
  EXPECT_GE(teacher_agreement(g, fixture_cluster(2), b, 100), 0.95);
}

TEST(Imitation, RejectsNonCandidateTeacher) {
  const DataflowGraph g = six_vertex_fixture();
  PolicyBundle b = PolicyBundle::create(small_config(), 6);
  const Teacher bad = [](const MdpState&) { return TeacherAction{5, 0}; };
  EXPECT_THROW(imitation_stage(g, fixture_cluster(2), quick(1, 1e-3), b, bad), std::logic_error);
}

TEST(SimRl, FirstAdvantageIsReward) {
  const DataflowGraph g = six_vertex_fixture();
  PolicyBundle b = PolicyBundle::create(small_config(), 7);
  const auto r = sim_rl_stage(g, fixture_cluster(2), quick(3, 1e-3), b);
  EXPECT_DOUBLE_EQ(r.curve[0].advantage, -r.curve[0].makespan_ms);
  EXPECT_DOUBLE_EQ(r.curve[1].advantage, -r.curve[1].makespan_ms + r.curve[0].makespan_ms);
}

TEST(SimRl, RepeatedOutcomeDrivesAdvantageToZero) {
  // One device: every rollout has the same makespan.
  const DataflowGraph g = six_vertex_fixture();
  TrainConfig t = quick(10, 1e-3);
  t.epsilon_start = t.epsilon_end = 0.0;
  t.entropy_weight = 0.0;
  PolicyBundle b = PolicyBundle::create(small_config(), 8);
  const auto r = sim_rl_stage(g, fixture_cluster(1), t, b);
  EXPECT_GT(std::abs(r.curve[0].advantage), 0.0);
  for (std::size_t i = 1; i < r.curve.size(); ++i) {
    EXPECT_EQ(r.curve[i].advantage, 0.0);
    EXPECT_EQ(r.curve[i].update_norm, 0.0);
  }
}

TEST(SimRl, BestBeatsRandomMean) {
  const DataflowGraph g = six_vertex_fixture();
  const ClusterSpec c = fixture_cluster(2);
  PolicyBundle b = PolicyBundle::create(small_config(), 9);
  const auto r = sim_rl_stage(g, c, quick(300, 3e-3), b);
  std::vector<double> random_ms;
  for (int i = 0; i < 100; ++i) random_ms.push_back(exec_time(g, random_assign(g, 2, i), c).makespan_ms);
  EXPECT_LE(r.best_makespan_ms, mean(random_ms));
  EXPECT_DOUBLE_EQ(exec_time(g, r.best, c).makespan_ms, r.best_makespan_ms);
}

TEST(SystemRl, ConstantExecutorStopsUpdates) {
  const DataflowGraph g = six_vertex_fixture();
  TrainConfig t = quick(20, 1e-2);
  t.entropy_weight = 0.0;
  ConstantExecutor exec(12.0);
  PolicyBundle b = PolicyBundle::create(small_config(), 10);
  const auto r = system_rl_stage(g, fixture_cluster(2), exec, t, b);
  EXPECT_GT(r.curve[0].update_norm, 0.0);
  for (std::size_t i = 1; i < r.curve.size(); ++i) EXPECT_EQ(r.curve[i].update_norm, 0.0);
  EXPECT_DOUBLE_EQ(r.final_best_ms, 12.0);
}

TEST(SystemRl, ExecutorFailureNamesEpisode) {
  const DataflowGraph g = six_vertex_fixture();
  FailingExecutor exec(3);
  PolicyBundle b = PolicyBundle::create(small_config(), 11);
  try {
    system_rl_stage(g, fixture_cluster(2), exec, quick(10, 1e-3), b);
    FAIL();
  } catch (const ExecutorError& e) {
    EXPECT_EQ(e.episode(), 3);
  }
}

TEST(SystemRl, JitteredExecutorEndToEnd) {
  const DataflowGraph g = six_vertex_fixture();
  ClusterSpec noisy = fixture_cluster(2);
  noisy.jitter = {0.1, 4};
  SimulatorExecutor exec(noisy, Strategy::kFifo, 4);
  PolicyBundle b = PolicyBundle::create(small_config(), 12);
  const auto r = system_rl_stage(g, fixture_cluster(2), exec, quick(30, 1e-3), b);
  EXPECT_EQ(r.curve.size(), 30u);
  EXPECT_EQ(exec.calls(), 30u + 3u);
}

// Episodes until the trailing 10-episode mean of observed makespans comes
// within 5% of the target; this tracks the policy, not one lucky sample.
int episodes_to_within(const std::vector<CurvePoint>& curve, double target) {
  constexpr std::size_t kWindow = 10;
  double sum = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    sum += curve[i].makespan_ms;
    if (i >= kWindow) sum -= curve[i - kWindow].makespan_ms;
    const double n = static_cast<double>(std::min(i + 1, kWindow));
    if (i + 1 >= kWindow && sum / n <= 1.05 * target) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(curve.size()) + 1;
}

// Both runs face the same jittered executor and are timed to the warm run's
// final best (mean of its evaluation runs). Single seed pairs are noisy, so
// the ratio is checked at the median over nine pairs.
TEST(SystemRl, WarmStartConvergesFaster) {
  const DataflowGraph g = six_vertex_fixture();
  const ClusterSpec c = fixture_cluster(2);
  constexpr int kEpisodes = 200;
  std::vector<double> ratios;
  for (const std::uint64_t policy_seed : {13, 21, 34}) {
    for (const std::uint64_t system_seed : {1, 2, 3}) {
      ClusterSpec noisy = c;
      noisy.jitter = {0.1, system_seed + 1};

      PolicyBundle cold = PolicyBundle::create(small_config(), policy_seed);
      SimulatorExecutor cold_exec(noisy, Strategy::kFifo, 2);
      const auto cold_run = system_rl_stage(g, c, cold_exec, quick(kEpisodes, 3e-3, system_seed), cold);

      PolicyBundle warm = PolicyBundle::create(small_config(), policy_seed);
      imitation_stage(g, c, quick(100, 1e-2), warm);
      sim_rl_stage(g, c, quick(100, 3e-3), warm);
      SimulatorExecutor warm_exec(noisy, Strategy::kFifo, 2);
      const auto warm_run = system_rl_stage(g, c, warm_exec, quick(kEpisodes, 3e-3, system_seed), warm);

      const int cold_n = episodes_to_within(cold_run.curve, warm_run.final_best_ms);
      const int warm_n = episodes_to_within(warm_run.curve, warm_run.final_best_ms);
      EXPECT_LT(warm_n, cold_n) << "seeds " << policy_seed << "/" << system_seed;
      ratios.push_back(static_cast<double>(warm_n) / cold_n);
    }
  }
  std::nth_element(ratios.begin(), ratios.begin() + 4, ratios.end());
  EXPECT_LE(ratios[4], 0.25);
}

TEST(FineTune, SameGraphContinuesCurve) {
  const DataflowGraph g = six_vertex_fixture();
  const ClusterSpec c = fixture_cluster(2);
  PolicyBundle b = PolicyBundle::create(small_config(), 14);
  sim_rl_stage(g, c, quick(15, 1e-3), b);
  const auto ft = fine_tune(b, g, c, quick(10, 1e-3, 1));
  EXPECT_EQ(ft.report.curve.front().index, 15);
  EXPECT_EQ(ft.report.curve.back().index, 24);
  EXPECT_EQ(ft.bundle.episodes_trained, 25);
}

TEST(FineTune, ZeroShotOnNewGraphIsValid) {
  const DataflowGraph small = chain_fixture(5);
  const DataflowGraph other = build_ffnn(8, 4, 16, 4, 2);
  const ClusterSpec c = fixture_cluster(4);
  PolicyBundle b = PolicyBundle::create(small_config(), 15);
  sim_rl_stage(small, c, quick(20, 1e-3), b);
  const auto r = assign_rollout(other, c, b, 0.0, 0, ActionMode::kGreedy);
  EXPECT_NO_THROW(check_assignment(other, r.assignment, 4));
}

TEST(FineTune, TransferBeatsZeroShot) {
  const DataflowGraph source = chain_fixture(6);
  const DataflowGraph target = build_ffnn(8, 4, 16, 4, 2);
  ClusterSpec c = fixture_cluster(4);
  c.rate.assign(4, 1.0);
  PolicyBundle b = PolicyBundle::create(small_config(), 16);
  sim_rl_stage(source, c, quick(100, 3e-3), b);
  const double zero_shot = assign_rollout(target, c, b, 0.0, 0, ActionMode::kGreedy).trace.makespan_ms;
  const auto ft = fine_tune(b, target, c, quick(200, 3e-3, 2), Stage::kSimRl, nullptr, small_config());
  EXPECT_LT(ft.report.best_makespan_ms, zero_shot);
}

TEST(FineTune, RejectsDimensionMismatch) {
  PolicyBundle b = PolicyBundle::create(small_config(), 17);
  PolicyConfig wider = small_config();
  wider.hidden = 32;
  EXPECT_THROW(fine_tune(b, six_vertex_fixture(), fixture_cluster(2), quick(1, 0.0), Stage::kSimRl, nullptr, wider),
               std::invalid_argument);
}

TEST(Pipeline, SingleStageEqualsDirectCall) {
  const DataflowGraph g = six_vertex_fixture();
  const ClusterSpec c = fixture_cluster(2);
  PolicyBundle a = PolicyBundle::create(small_config(), 18);
  PolicyBundle b = a;
  const auto direct = sim_rl_stage(g, c, quick(20, 1e-3), a);
  const auto piped = run_pipeline(g, c, {{Stage::kSimRl, quick(20, 1e-3)}}, b);
  EXPECT_TRUE(a.params() == b.params());
  EXPECT_EQ(curve_to_json(direct.curve), curve_to_json(piped.stages[0].curve));
  EXPECT_EQ(piped.final_best, direct.best);
}

TEST(Pipeline, ThreeStagesAndOrdering) {
  const DataflowGraph g = six_vertex_fixture();
  const ClusterSpec c = fixture_cluster(2);
  ClusterSpec noisy = c;
  noisy.jitter = {0.1, 1};
  SimulatorExecutor exec(noisy);
  PolicyBundle b = PolicyBundle::create(small_config(), 19);
  const auto r = run_pipeline(
      g, c, {{Stage::kImitation, quick(5, 1e-2)}, {Stage::kSimRl, quick(5, 1e-3)}, {Stage::kSystemRl, quick(5, 1e-3)}},
      b, &exec);
  ASSERT_EQ(r.stages.size(), 3u);
  EXPECT_EQ(r.stages[2].curve.front().index, 10);
  EXPECT_EQ(pipeline_report_to_json(r)["stages"].size(), 3u);
  PolicyBundle fresh = PolicyBundle::create(small_config(), 19);
  EXPECT_THROW(run_pipeline(g, c, {{Stage::kSimRl, quick(1, 0)}, {Stage::kImitation, quick(1, 0)}}, fresh),
               std::invalid_argument);
  EXPECT_THROW(run_pipeline(g, c, {{Stage::kSystemRl, quick(1, 0)}}, fresh), std::invalid_argument);
}

TEST(Checkpoint, TrainedPolicyRoundTripsBitIdentically) {
  const DataflowGraph g = six_vertex_fixture();
  const ClusterSpec c = fixture_cluster(2);
  PolicyBundle b = PolicyBundle::create(small_config(), 20);
  sim_rl_stage(g, c, quick(30, 3e-3), b);
  const PolicyBundle back = PolicyBundle::from_json(nlohmann::json::parse(b.checkpoint_json().dump()),
                                                    nlohmann::json::parse(b.sidecar_json().dump()));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = assign_rollout(g, c, b, 0.0, seed);
    const auto y = assign_rollout(g, c, back, 0.0, seed);
    EXPECT_EQ(x.assignment, y.assignment);
    for (std::size_t i = 0; i < x.trace.steps.size(); ++i) {
      EXPECT_EQ(x.trace.steps[i].device_log_prob, y.trace.steps[i].device_log_prob);
    }
  }
}

// Placing one vertex on two devices of different speed is a two-armed
// bandit. The averaged score-function estimate R * grad log pi must match
// the gradient of J = sum_a pi(a) R(a), here taken by central differences of
// the exact head probabilities.
TEST(Reinforce, UnbiasedOnTwoArmedBandit) {
  const DataflowGraph g({op(0, 4000, 100)}, {});
  ClusterSpec c = fixture_cluster(2);
  c.rate = {1000.0, 2000.0};
  const GraphContext ctx(g, c);
  PolicyConfig config;
  config.hidden = 4;
  config.layers = 1;
  PolicyBundle b = PolicyBundle::create(config, 21);
  const double eps = 0.2;
  const std::vector<double> reward{-4.0, -2.0};

  struct Coord {
    std::string name;
    int index;
  };
  const std::vector<Coord> coords{{"plc.head2.b", 0}, {"plc.head2.W", 0}, {"plc.head2.W", 3},
                                  {"plc.head1.W", 5}, {"plc.y.W", 2},     {"plc.z.W", 1}};

  auto objective = [&](const PolicyBundle& bundle) {
    const auto q = plc_distribution(ctx, bundle, MdpState(ctx), 0);
    double j = 0;
    for (int a = 0; a < 2; ++a) j += (eps / 2 + (1 - eps) * q[a]) * reward[a];
    return j;
  };
  std::vector<double> closed;
  for (const Coord& k : coords) {
    PolicyBundle plus = b, minus = b;
    plus.params().get(k.name).value.values()[k.index] += 1e-6;
    minus.params().get(k.name).value.values()[k.index] -= 1e-6;
    closed.push_back((objective(plus) - objective(minus)) / 2e-6);
  }

  constexpr int kSamples = 100000;
  std::vector<double> sum(coords.size(), 0.0), sum_sq(coords.size(), 0.0);
  nn::ParamStore grads = b.params();
  for (int s = 0; s < kSamples; ++s) {
    grads.zero_grad();
    TapedEpisode ep = run_episode(ctx, config, b.params(), &grads, {eps, static_cast<std::uint64_t>(s)});
    const double r = reward[ep.assignment[0]];
    ep.tape->backward(nn::scalar_mul(ep.log_prob_sum, r));
    for (std::size_t k = 0; k < coords.size(); ++k) {
      const double x = grads.get(coords[k].name).grad.values()[coords[k].index];
      sum[k] += x;
      sum_sq[k] += x * x;
    }
  }
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const double m = sum[k] / kSamples;
    const double var = sum_sq[k] / kSamples - m * m;
    const double se = std::sqrt(var / kSamples);
    EXPECT_LE(std::abs(m - closed[k]), 3 * se + 1e-9)
        << coords[k].name << "[" << coords[k].index << "] mean " << m << " closed " << closed[k] << " se " << se;
  }
}

// Mean KL(Q || uniform) of both heads along the greedy trajectory.
double kl_to_uniform(const DataflowGraph& g, const ClusterSpec& c, const PolicyBundle& b) {
  const GraphContext ctx(g, c);
  const auto r = assign_rollout(g, c, b, 0.0, 0, ActionMode::kGreedy);
  MdpState s(ctx);
  double kl = 0;
  int terms = 0;
  auto add = [&](const std::vector<double>& q) {
    for (double p : q) kl += p > 0 ? p * std::log(p * q.size()) : 0.0;
    ++terms;
  };
  for (const StepRecord& step : r.trace.steps) {
    add(sel_distribution(ctx, b, s));
    add(plc_distribution(ctx, b, s, step.vertex));
    s.apply(step.vertex, step.device);
  }
  return kl / terms;
}

TEST(Entropy, HeavierWeightStaysCloserToUniform) {
  const DataflowGraph g({input(0, 100), op(1, 2000, 100), op(2, 2000, 100), op(3, 2000, 100), op(4, 1000, 100)},
                        {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 4}, {3, 4}});
  const ClusterSpec c = fixture_cluster(2);
  std::vector<double> kls;
  for (double w : {0.0, 0.3, 3.0}) {
    PolicyBundle b = PolicyBundle::create(small_config(), 22);
    TrainConfig t = quick(300, 3e-3);
    t.entropy_weight = w;
    sim_rl_stage(g, c, t, b);
    kls.push_back(kl_to_uniform(g, c, b));
  }
  EXPECT_GT(kls[0], kls[1]);
  EXPECT_GT(kls[1], kls[2]);
}

}  // namespace
}  // namespace wcplace
