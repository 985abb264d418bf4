// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dual placement policy. A message-passing encoder embeds the graph; the
// select head scores the current candidate vertices and the place head
// scores devices for the selected vertex. A rollout alternates the two heads
// until every vertex is assigned.

#ifndef WCPLACE_POLICY_H_
#define WCPLACE_POLICY_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wcplace/assignment.h"
#include "wcplace/cluster.h"
#include "wcplace/features.h"
#include "wcplace/graph.h"
#include "wcplace/nn/autodiff.h"
#include "wcplace/simulator.h"
#include "wcplace/timeline.h"

namespace wcplace {

// per_episode encodes the graph once per rollout; per_step re-encodes
// before every decision with the current assigned/candidate flags.
enum class MpMode { kPerEpisode, kPerStep };

std::string_view mp_mode_name(MpMode mode);
MpMode parse_mp_mode(std::string_view name);

struct PolicyConfig {
  int hidden = 64;
  int layers = 2;  // message-passing rounds
  bool shared_encoder = false;
  MpMode mp_mode = MpMode::kPerEpisode;
  double leaky_slope = 0.01;
};

// Static feature columns plus is_assigned and is_candidate flags.
inline constexpr int kNodeInputDim = kNumStaticFeatures + 2;
// Standardized communication cost and direction (+1 from a predecessor,
// -1 from a successor).
inline constexpr int kEdgeInputDim = 2;

struct FeatureNormalization {
  std::array<double, kNumStaticFeatures> mean{};
  std::array<double, kNumStaticFeatures> scale{};
  double edge_mean = 0.0;
  double edge_scale = 1.0;
};

// Per-column mean and standard deviation over vertices; zero-variance
// columns get scale 1.
FeatureNormalization compute_normalization(const DataflowGraph& graph, const StaticGraphFeatures& features,
                                           double comm_factor);

// Constant network inputs derived from one (graph, cluster) pair. Holds
// references; both must outlive it.
class GraphContext {
 public:
  GraphContext(const DataflowGraph& graph, const ClusterSpec& cluster);

  const DataflowGraph& graph() const { return *graph_; }
  const ClusterSpec& cluster() const { return *cluster_; }
  const StaticGraphFeatures& features() const { return features_; }
  const FeatureNormalization& normalization() const { return norm_; }
  // n x 5 standardized static features.
  const nn::Matrix& static_inputs() const { return static_inputs_; }
  // Directed messages: both orientations of every edge.
  const std::vector<int>& senders() const { return senders_; }
  const std::vector<int>& receivers() const { return receivers_; }
  const nn::Matrix& edge_inputs() const { return edge_inputs_; }
  // Dynamic device features are divided by these: FLOP columns by the total
  // FLOPs of the graph, time columns by its serial time on the fastest device.
  double flops_scale() const { return flops_scale_; }
  double time_scale() const { return time_scale_; }

 private:
  const DataflowGraph* graph_;
  const ClusterSpec* cluster_;
  StaticGraphFeatures features_;
  FeatureNormalization norm_;
  nn::Matrix static_inputs_;
  std::vector<int> senders_;
  std::vector<int> receivers_;
  nn::Matrix edge_inputs_;
  double flops_scale_ = 1.0;
  double time_scale_ = 1.0;
};

// Partial assignment plus the list-scheduling state derived from it.
class MdpState {
 public:
  explicit MdpState(const GraphContext& ctx);

  const GreedyTimeline& timeline() const { return timeline_; }
  const std::vector<VertexId>& candidates() const { return candidates_.ids(); }
  int step() const { return step_; }
  bool done() const { return candidates_.empty(); }
  // Throws std::logic_error if v is not a candidate.
  void apply(VertexId v, DeviceId d);

  // n x 7 encoder input for the current state.
  nn::Matrix node_inputs() const;
  // |D| x 5 scaled device features for placing v.
  nn::Matrix device_inputs(VertexId v) const;

 private:
  const GraphContext* ctx_;
  GreedyTimeline timeline_;
  CandidateSet candidates_;
  int step_ = 0;
};

// Parameters plus the metadata written to the checkpoint sidecar.
class PolicyBundle {
 public:
  PolicyBundle() = default;
  PolicyBundle(PolicyConfig config, nn::ParamStore params);
  // Xavier weights and zero biases, deterministic in `seed`.
  static PolicyBundle create(const PolicyConfig& config, std::uint64_t seed);

  const PolicyConfig& config() const { return config_; }
  PolicyConfig& config() { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  double epsilon_start = 0.2;
  double epsilon_end = 0.0;
  int episodes_trained = 0;
  std::optional<FeatureNormalization> normalization;  // of the last training graph

  // Throws std::invalid_argument if any parameter is missing or misshapen
  // for config().
  void check() const;

  nlohmann::json checkpoint_json() const;
  // {"hidden", "layers", "shared_encoder", "mp_mode", "leaky_slope",
  //  "epsilon": {"start", "end"}, "episodes_trained", "normalization"}
  nlohmann::json sidecar_json() const;
  static PolicyBundle from_json(const nlohmann::json& checkpoint, const nlohmann::json& sidecar);

 private:
  PolicyConfig config_;
  nn::ParamStore params_;
};

// Names of the parameters a config needs, with their shapes.
std::vector<std::pair<std::string, std::pair<int, int>>> parameter_layout(const PolicyConfig& config);

// Builds the network on a tape. Parameters come from `values`; when
// `trainable` is given (normally the same store) they are recorded as
// differentiable leaves and backward() accumulates into it.
class PolicyNet {
 public:
  PolicyNet(nn::Tape& tape, const PolicyConfig& config, const nn::ParamStore& values, nn::ParamStore* trainable,
            const GraphContext& ctx);

  // Encoder for "sel" or "plc" (the same one when shared). n x hidden.
  nn::Var encode(std::string_view head, const nn::Matrix& node_inputs);
  // Per-vertex static embedding Z of a head. n x hidden, cached.
  nn::Var static_embedding(std::string_view head);
  // 1 x |candidates| logits.
  nn::Var sel_logits(nn::Var h, nn::Var z, const std::vector<VertexId>& candidates);
  // |D| x hidden: row d sums H over vertices assigned to d.
  nn::Var device_summary(nn::Var h, const GreedyTimeline& timeline);
  // 1 x |D| logits for placing v.
  nn::Var plc_logits(nn::Var h, nn::Var z, nn::Var device_summary, const nn::Matrix& device_inputs, VertexId v);

 private:
  nn::Var param(const std::string& name);
  nn::Var mlp_head(const std::string& head, nn::Var input);
  std::string encoder_prefix(std::string_view head) const;

  nn::Tape* tape_;
  PolicyConfig config_;
  const nn::ParamStore* values_;
  nn::ParamStore* trainable_;
  const GraphContext* ctx_;
  std::map<std::string, nn::Var> bound_;
  std::map<std::string, nn::Var, std::less<>> z_cache_;
};

enum class ActionMode { kSample, kGreedy };

struct StepRecord {
  std::vector<VertexId> candidates;
  VertexId vertex = 0;
  double vertex_log_prob = 0.0;
  DeviceId device = 0;
  double device_log_prob = 0.0;
  double sel_entropy = 0.0;
  double plc_entropy = 0.0;
  // The heads' argmax in this state (equal to the action in greedy mode).
  VertexId greedy_vertex = 0;
  DeviceId greedy_device = 0;
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  double makespan_ms = 0.0;
  // Graph encodings performed: 1 per episode or 1 per step, by MpMode.
  int encoder_calls = 0;
};

using TeacherAction = std::pair<VertexId, DeviceId>;
// Supplies the action to imitate in a state.
using Teacher = std::function<TeacherAction(const MdpState&)>;

// Largest t-level candidate (lowest id on ties) on the earliest-start device.
TeacherAction critical_path_teacher(const MdpState& state, const StaticGraphFeatures& features);

struct EpisodeOptions {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  ActionMode mode = ActionMode::kSample;
  // When set, actions follow the teacher and log-probs score its actions.
  Teacher teacher;
};

// One rollout recorded on its own tape.
struct TapedEpisode {
  std::unique_ptr<nn::Tape> tape;
  Assignment assignment;
  EpisodeTrace trace;
  nn::Var log_prob_sum;  // sum over steps of log pi(vertex) + log pi(device)
  nn::Var entropy_sum;   // sum over steps of H(Q_sel) + H(Q_plc)
};

// Sampling draws uniformly with probability epsilon and from the head's
// softmax otherwise, and records the log of the resulting mixture
// probability. Greedy mode takes the softmax argmax, lowest index on ties.
// Throws std::logic_error if a teacher action is not a candidate.
TapedEpisode run_episode(const GraphContext& ctx, const PolicyConfig& config, const nn::ParamStore& values,
                         nn::ParamStore* trainable, const EpisodeOptions& options);

struct RolloutResult {
  Assignment assignment;
  EpisodeTrace trace;
};

// Inference rollout; the trace's makespan comes from a clean simulation.
RolloutResult assign_rollout(const DataflowGraph& graph, const ClusterSpec& cluster, const PolicyBundle& bundle,
                             double epsilon, std::uint64_t seed, ActionMode mode = ActionMode::kSample,
                             Strategy strategy = Strategy::kFifo);

// Select-head distribution over the state's candidates and place-head
// distribution over devices for v, from a fresh encoding of `state`.
std::vector<double> sel_distribution(const GraphContext& ctx, const PolicyBundle& bundle, const MdpState& state);
std::vector<double> plc_distribution(const GraphContext& ctx, const PolicyBundle& bundle, const MdpState& state,
                                     VertexId v);

}  // namespace wcplace

#endif  // WCPLACE_POLICY_H_
