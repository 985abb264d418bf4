// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/training.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wcplace/seeding.h"
#include "wcplace/stats.h"

namespace wcplace {

using nlohmann::json;

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kImitation: return "imitation";
    case Stage::kSimRl: return "sim_rl";
    case Stage::kSystemRl: return "system_rl";
  }
  return "sim_rl";
}

Stage parse_stage(std::string_view name) {
  if (name == "imitation") return Stage::kImitation;
  if (name == "sim_rl") return Stage::kSimRl;
  if (name == "system_rl") return Stage::kSystemRl;
  throw std::invalid_argument("unknown stage \"" + std::string(name) + "\"");
}

void TrainConfig::check() const {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (lr_start < 0 || lr_end < 0) throw std::invalid_argument("learning rates must be >= 0");
  if (epsilon_start < 0 || epsilon_start > 1 || epsilon_end < 0 || epsilon_end > 1) {
    throw std::invalid_argument("epsilon must lie in [0, 1]");
  }
  if (entropy_weight < 0) throw std::invalid_argument("entropy weight must be >= 0");
  if (eval_runs < 1) throw std::invalid_argument("eval_runs must be >= 1");
}

double TrainConfig::epsilon(int episode) const {
  if (episodes <= 1) return epsilon_start;
  const double frac = static_cast<double>(std::clamp(episode, 0, episodes - 1)) / (episodes - 1);
  return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"episodes", c.episodes},
          {"lr", {{"start", c.lr_start}, {"end", c.lr_end}}},
          {"epsilon", {{"start", c.epsilon_start}, {"end", c.epsilon_end}}},
          {"entropy_weight", c.entropy_weight},
          {"seed", c.seed},
          {"eval_runs", c.eval_runs},
          {"strategy", strategy_name(c.strategy)}};
}

TrainConfig train_config_from_json(const json& doc, const TrainConfig& base) {
  TrainConfig c = base;
  try {
    c.episodes = doc.value("episodes", c.episodes);
    if (doc.contains("lr")) {
      c.lr_start = doc["lr"].value("start", c.lr_start);
      c.lr_end = doc["lr"].value("end", c.lr_end);
    }
    if (doc.contains("epsilon")) {
      c.epsilon_start = doc["epsilon"].value("start", c.epsilon_start);
      c.epsilon_end = doc["epsilon"].value("end", c.epsilon_end);
    }
    c.entropy_weight = doc.value("entropy_weight", c.entropy_weight);
    c.seed = doc.value("seed", c.seed);
    c.eval_runs = doc.value("eval_runs", c.eval_runs);
    if (doc.contains("strategy")) c.strategy = parse_strategy(doc["strategy"].get<std::string>());
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad training config: ") + e.what());
  }
  c.check();
  return c;
}

double SimulatorExecutor::run(const DataflowGraph& graph, const Assignment& a) {
  const std::uint64_t call = calls_++;
  return exec_time(graph, a, cluster_, strategy_, derive_seed(seed_, call)).makespan_ms;
}

json curve_to_json(const std::vector<CurvePoint>& curve) {
  json out = json::array();
  for (const CurvePoint& p : curve) {
    out.push_back({{"index", p.index},
                   {"makespan_ms", p.makespan_ms},
                   {"advantage", p.advantage},
                   {"epsilon", p.epsilon},
                   {"lr", p.lr},
                   {"loss", p.loss},
                   {"update_norm", p.update_norm}});
  }
  return out;
}

json stage_report_to_json(const StageReport& r) {
  return {{"stage", stage_name(r.stage)},
          {"episodes", r.curve.size()},
          {"best", assignment_to_json(r.best, r.best_makespan_ms)},
          {"final_best_ms", r.final_best_ms},
          {"encoder_calls", r.encoder_calls}};
}

namespace {

double evaluate(Executor& executor, const DataflowGraph& graph, const Assignment& a, int runs) {
  std::vector<double> observed;
  for (int i = 0; i < runs; ++i) observed.push_back(executor.run(graph, a));
  return mean(observed);
}

void record_training(PolicyBundle& bundle, const GraphContext& ctx, const TrainConfig& config) {
  bundle.normalization = ctx.normalization();
  bundle.episodes_trained += config.episodes;
  bundle.epsilon_start = config.epsilon_start;
  bundle.epsilon_end = config.epsilon_end;
}

}  // namespace

StageReport imitation_stage(const DataflowGraph& graph, const ClusterSpec& cluster, const TrainConfig& config,
                            PolicyBundle& bundle, Teacher teacher) {
  config.check();
  bundle.check();
  const GraphContext ctx(graph, cluster);
  if (!teacher) {
    teacher = [&ctx](const MdpState& s) { return critical_path_teacher(s, ctx.features()); };
  }
  const Simulator sim(graph, cluster, config.strategy);
  nn::Sgd sgd({config.lr_start, config.lr_end, config.episodes});
  StageReport report;
  report.stage = Stage::kImitation;
  report.best_makespan_ms = std::numeric_limits<double>::infinity();
  const int offset = bundle.episodes_trained;

  for (int i = 0; i < config.episodes; ++i) {
    EpisodeOptions forced;
    forced.seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    forced.teacher = teacher;
    const double lr = sgd.learning_rate();
    TapedEpisode ep = run_episode(ctx, bundle.config(), bundle.params(), &bundle.params(), forced);
    report.encoder_calls += ep.trace.encoder_calls;
    const nn::Var loss = nn::scalar_mul(ep.log_prob_sum, -1.0);
    bundle.params().zero_grad();
    ep.tape->backward(loss);
    const double norm = sgd.step(bundle.params());

    EpisodeOptions greedy;
    greedy.mode = ActionMode::kGreedy;
    const TapedEpisode student = run_episode(ctx, bundle.config(), bundle.params(), nullptr, greedy);
    const double ms = sim.makespan(student.assignment);
    report.curve.push_back({offset + i, ms, 0.0, 0.0, lr, loss.value()(0, 0), norm});
    if (ms < report.best_makespan_ms) {
      report.best_makespan_ms = ms;
      report.best = student.assignment;
    }
  }
  SimulatorExecutor eval(cluster, config.strategy, config.seed);
  report.final_best_ms = evaluate(eval, graph, report.best, config.eval_runs);
  record_training(bundle, ctx, config);
  return report;
}

StageReport rl_stage(Stage stage, const DataflowGraph& graph, const ClusterSpec& cluster, Executor& executor,
                     const TrainConfig& config, PolicyBundle& bundle) {
  config.check();
  bundle.check();
  const GraphContext ctx(graph, cluster);
  nn::Sgd sgd({config.lr_start, config.lr_end, config.episodes});
  RewardTracker tracker;
  StageReport report;
  report.stage = stage;
  report.best_makespan_ms = std::numeric_limits<double>::infinity();
  const int offset = bundle.episodes_trained;

  for (int i = 0; i < config.episodes; ++i) {
    EpisodeOptions opt;
    opt.epsilon = config.epsilon(i);
    opt.seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    const double lr = sgd.learning_rate();
    TapedEpisode ep = run_episode(ctx, bundle.config(), bundle.params(), &bundle.params(), opt);
    report.encoder_calls += ep.trace.encoder_calls;

    double ms = 0.0;
    try {
      ms = executor.run(graph, ep.assignment);
    } catch (const std::exception& e) {
      throw ExecutorError(i, e.what());
    }
    if (!std::isfinite(ms) || ms < 0) throw ExecutorError(i, "runtime " + std::to_string(ms) + " is not valid");
    const double reward = -ms;
    const double advantage = reward - tracker.baseline();
    // Gradient ascent on advantage * log pi + w * entropy.
    const nn::Var objective = nn::add(nn::scalar_mul(ep.log_prob_sum, advantage),
                                      nn::scalar_mul(ep.entropy_sum, config.entropy_weight));
    const nn::Var loss = nn::scalar_mul(objective, -1.0);
    bundle.params().zero_grad();
    ep.tape->backward(loss);
    const double norm = sgd.step(bundle.params());
    tracker.add(reward);

    report.curve.push_back({offset + i, ms, advantage, opt.epsilon, lr, loss.value()(0, 0), norm});
    if (ms < report.best_makespan_ms) {
      report.best_makespan_ms = ms;
      report.best = ep.assignment;
    }
  }
  report.final_best_ms = evaluate(executor, graph, report.best, config.eval_runs);
  record_training(bundle, ctx, config);
  return report;
}

StageReport sim_rl_stage(const DataflowGraph& graph, const ClusterSpec& cluster, const TrainConfig& config,
                         PolicyBundle& bundle) {
  SimulatorExecutor sim(cluster, config.strategy, config.seed);
  return rl_stage(Stage::kSimRl, graph, cluster, sim, config, bundle);
}

StageReport system_rl_stage(const DataflowGraph& graph, const ClusterSpec& cluster, Executor& executor,
                            const TrainConfig& config, PolicyBundle& bundle) {
  return rl_stage(Stage::kSystemRl, graph, cluster, executor, config, bundle);
}

double teacher_agreement(const DataflowGraph& graph, const ClusterSpec& cluster, const PolicyBundle& bundle,
                         int rollouts) {
  const GraphContext ctx(graph, cluster);
  long agree = 0, steps = 0;
  for (int r = 0; r < rollouts; ++r) {
    EpisodeOptions opt;
    opt.mode = ActionMode::kGreedy;
    opt.seed = static_cast<std::uint64_t>(r);
    const TapedEpisode ep = run_episode(ctx, bundle.config(), bundle.params(), nullptr, opt);
    MdpState replay(ctx);
    for (const StepRecord& s : ep.trace.steps) {
      const TeacherAction want = critical_path_teacher(replay, ctx.features());
      if (s.vertex == want.first && s.device == want.second) ++agree;
      ++steps;
      replay.apply(s.vertex, s.device);
    }
  }
  return steps == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(steps);
}

FineTuneResult fine_tune(const PolicyBundle& checkpoint, const DataflowGraph& graph, const ClusterSpec& cluster,
                         const TrainConfig& config, Stage stage, Executor* executor,
                         std::optional<PolicyConfig> expected) {
  checkpoint.check();
  if (expected && (expected->hidden != checkpoint.config().hidden || expected->layers != checkpoint.config().layers)) {
    throw std::invalid_argument("checkpoint has hidden=" + std::to_string(checkpoint.config().hidden) + " layers=" +
                                std::to_string(checkpoint.config().layers) + ", expected hidden=" +
                                std::to_string(expected->hidden) + " layers=" + std::to_string(expected->layers));
  }
  FineTuneResult out{checkpoint, {}};
  switch (stage) {
    case Stage::kImitation:
      out.report = imitation_stage(graph, cluster, config, out.bundle);
      break;
    case Stage::kSimRl:
      out.report = sim_rl_stage(graph, cluster, config, out.bundle);
      break;
    case Stage::kSystemRl:
      if (executor == nullptr) throw std::invalid_argument("system_rl fine-tuning needs an executor");
      out.report = system_rl_stage(graph, cluster, *executor, config, out.bundle);
      break;
  }
  return out;
}

PipelineReport run_pipeline(const DataflowGraph& graph, const ClusterSpec& cluster,
                            const std::vector<PipelineStage>& stages, PolicyBundle& bundle,
                            Executor* system_executor) {
  if (stages.empty()) throw std::invalid_argument("pipeline needs at least one stage");
  for (std::size_t i = 1; i < stages.size(); ++i) {
    if (static_cast<int>(stages[i].stage) <= static_cast<int>(stages[i - 1].stage)) {
      throw std::invalid_argument("stages must be a subsequence of imitation, sim_rl, system_rl");
    }
  }
  bundle.check();
  PipelineReport report;
  for (const PipelineStage& s : stages) {
    switch (s.stage) {
      case Stage::kImitation:
        report.stages.push_back(imitation_stage(graph, cluster, s.config, bundle));
        break;
      case Stage::kSimRl:
        report.stages.push_back(sim_rl_stage(graph, cluster, s.config, bundle));
        break;
      case Stage::kSystemRl:
        if (system_executor == nullptr) throw std::invalid_argument("system_rl stage needs an executor");
        report.stages.push_back(system_rl_stage(graph, cluster, *system_executor, s.config, bundle));
        break;
    }
  }
  report.final_best = report.stages.back().best;
  report.final_best_ms = report.stages.back().final_best_ms;
  return report;
}

json pipeline_report_to_json(const PipelineReport& r) {
  json stages = json::array();
  for (const StageReport& s : r.stages) stages.push_back(stage_report_to_json(s));
  return {{"stages", stages}, {"final_best", assignment_to_json(r.final_best, r.final_best_ms)},
          {"final_best_ms", r.final_best_ms}};
}

}  // namespace wcplace
