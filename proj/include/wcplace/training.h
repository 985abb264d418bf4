// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// Three training stages for the dual policy: imitation of the critical-path
// rule, policy-gradient RL against the simulator, and the same RL loop
// against an arbitrary Executor standing in for a real system.

#ifndef WCPLACE_TRAINING_H_
#define WCPLACE_TRAINING_H_

#include <atomic>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wcplace/assignment.h"
#include "wcplace/cluster.h"
#include "wcplace/graph.h"
#include "wcplace/nn/optim.h"
#include "wcplace/policy.h"
#include "wcplace/simulator.h"

namespace wcplace {

enum class Stage { kImitation, kSimRl, kSystemRl };

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);

struct TrainConfig {
  int episodes = 500;
  double lr_start = 1e-4;
  double lr_end = 1e-7;
  double epsilon_start = 0.2;
  double epsilon_end = 0.0;
  double entropy_weight = 1e-2;
  std::uint64_t seed = 0;
  // Executor runs averaged when scoring a stage's best assignment.
  int eval_runs = 10;
  Strategy strategy = Strategy::kFifo;

  // Throws std::invalid_argument on episodes < 1 or negative weights.
  void check() const;
  // Epsilon decays linearly from start at episode 0 to end at the last one.
  double epsilon(int episode) const;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
// Missing keys keep their defaults from `base`.
TrainConfig train_config_from_json(const nlohmann::json& doc, const TrainConfig& base = {});

// Observed runtime of an assignment on some system.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual double run(const DataflowGraph& graph, const Assignment& a) = 0;
};

// Simulator-backed executor. Every call uses a fresh run seed, so with
// jitter enabled repeated calls observe different runtimes; the sequence is
// fixed by the base seed. Safe to call concurrently.
class SimulatorExecutor final : public Executor {
 public:
  SimulatorExecutor(ClusterSpec cluster, Strategy strategy = Strategy::kFifo, std::uint64_t seed = 0)
      : cluster_(std::move(cluster)), strategy_(strategy), seed_(seed) {}

  double run(const DataflowGraph& graph, const Assignment& a) override;
  std::uint64_t calls() const { return calls_; }

 private:
  ClusterSpec cluster_;
  Strategy strategy_;
  std::uint64_t seed_;
  std::atomic<std::uint64_t> calls_{0};
};

class ExecutorError : public std::runtime_error {
 public:
  ExecutorError(int episode, const std::string& what)
      : std::runtime_error("executor failed in episode " + std::to_string(episode) + ": " + what),
        episode_(episode) {}
  int episode() const { return episode_; }

 private:
  int episode_;
};

// Running mean of every return seen so far; 0 before the first.
class RewardTracker {
 public:
  double baseline() const { return count_ == 0 ? 0.0 : sum_ / static_cast<double>(count_); }
  void add(double reward) {
    sum_ += reward;
    ++count_;
  }
  int count() const { return count_; }

 private:
  double sum_ = 0.0;
  int count_ = 0;
};

struct CurvePoint {
  // Counts every episode the policy has trained, so resumed runs continue
  // the numbering of earlier ones.
  int index = 0;
  double makespan_ms = 0.0;
  double advantage = 0.0;
  double epsilon = 0.0;
  double lr = 0.0;
  double loss = 0.0;
  double update_norm = 0.0;
};

struct StageReport {
  Stage stage = Stage::kSimRl;
  std::vector<CurvePoint> curve;
  Assignment best;
  double best_makespan_ms = 0.0;
  // Mean over eval_runs executor runs of `best`.
  double final_best_ms = 0.0;
  long encoder_calls = 0;
};

nlohmann::json curve_to_json(const std::vector<CurvePoint>& curve);
nlohmann::json stage_report_to_json(const StageReport& report);

// Teacher-forced imitation of `teacher` (the critical-path rule when empty).
// Each episode minimizes -sum(log Q_sel(teacher vertex) + log Q_plc(teacher
// device)); the curve records the makespan of the student's greedy rollout.
StageReport imitation_stage(const DataflowGraph& graph, const ClusterSpec& cluster, const TrainConfig& config,
                            PolicyBundle& bundle, Teacher teacher = {});

// REINFORCE with reward -makespan from `executor`, advantage against the
// running-mean baseline, and an entropy bonus. One update per episode.
StageReport rl_stage(Stage stage, const DataflowGraph& graph, const ClusterSpec& cluster, Executor& executor,
                     const TrainConfig& config, PolicyBundle& bundle);

// rl_stage against the deterministic simulator of `cluster`.
StageReport sim_rl_stage(const DataflowGraph& graph, const ClusterSpec& cluster, const TrainConfig& config,
                         PolicyBundle& bundle);

// rl_stage against an external executor; failures become ExecutorError.
StageReport system_rl_stage(const DataflowGraph& graph, const ClusterSpec& cluster, Executor& executor,
                            const TrainConfig& config, PolicyBundle& bundle);

// Fraction of steps on the student's own greedy trajectory where both heads'
// argmax equals the critical-path teacher's action.
double teacher_agreement(const DataflowGraph& graph, const ClusterSpec& cluster, const PolicyBundle& bundle,
                         int rollouts = 100);

struct FineTuneResult {
  PolicyBundle bundle;
  StageReport report;
};

// Continues training a checkpoint on a (possibly different) graph. Feature
// normalization is recomputed for the new graph. Throws std::invalid_argument
// if the checkpoint's width or depth differs from `expected`, or its
// parameters do not match its own config.
FineTuneResult fine_tune(const PolicyBundle& checkpoint, const DataflowGraph& graph, const ClusterSpec& cluster,
                         const TrainConfig& config, Stage stage = Stage::kSimRl, Executor* executor = nullptr,
                         std::optional<PolicyConfig> expected = std::nullopt);

struct PipelineStage {
  Stage stage = Stage::kSimRl;
  TrainConfig config;
};

struct PipelineReport {
  std::vector<StageReport> stages;
  Assignment final_best;
  double final_best_ms = 0.0;
};

// Runs stages in order, each continuing from the previous one's parameters.
// Stage kinds must form a subsequence of (imitation, sim_rl, system_rl);
// system_rl needs `system_executor`.
PipelineReport run_pipeline(const DataflowGraph& graph, const ClusterSpec& cluster,
                            const std::vector<PipelineStage>& stages, PolicyBundle& bundle,
                            Executor* system_executor = nullptr);

nlohmann::json pipeline_report_to_json(const PipelineReport& report);

}  // namespace wcplace

#endif  // WCPLACE_TRAINING_H_
