// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/policy.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "wcplace/nn/optim.h"
#include "wcplace/seeding.h"

namespace wcplace {

using nlohmann::json;
using nn::Matrix;
using nn::Var;

std::string_view mp_mode_name(MpMode mode) {
  return mode == MpMode::kPerStep ? "per_step" : "per_episode";
}

MpMode parse_mp_mode(std::string_view name) {
  if (name == "per_episode") return MpMode::kPerEpisode;
  if (name == "per_step") return MpMode::kPerStep;
  throw std::invalid_argument("unknown message-passing mode \"" + std::string(name) + "\"");
}

FeatureNormalization compute_normalization(const DataflowGraph& graph, const StaticGraphFeatures& features,
                                           double comm_factor) {
  FeatureNormalization norm;
  const auto n = static_cast<double>(features.rows.size());
  for (int c = 0; c < kNumStaticFeatures; ++c) {
    double m = 0.0;
    for (const auto& row : features.rows) m += row[c];
    m /= n;
    double var = 0.0;
    for (const auto& row : features.rows) var += (row[c] - m) * (row[c] - m);
    const double sd = std::sqrt(var / n);
    norm.mean[c] = m;
    norm.scale[c] = sd > 0 ? sd : 1.0;
  }
  if (graph.num_edges() > 0) {
    double m = 0.0;
    for (const Edge& e : graph.edges()) m += comm_cost(graph, e.src, comm_factor);
    m /= graph.num_edges();
    double var = 0.0;
    for (const Edge& e : graph.edges()) {
      const double d = comm_cost(graph, e.src, comm_factor) - m;
      var += d * d;
    }
    const double sd = std::sqrt(var / graph.num_edges());
    norm.edge_mean = m;
    norm.edge_scale = sd > 0 ? sd : 1.0;
  }
  return norm;
}

GraphContext::GraphContext(const DataflowGraph& graph, const ClusterSpec& cluster)
    : graph_(&graph), cluster_(&cluster), features_(static_features(graph, cluster.comm_factor)) {
  norm_ = compute_normalization(graph, features_, cluster.comm_factor);
  const int n = graph.num_vertices();
  static_inputs_ = Matrix(n, kNumStaticFeatures);
  for (int v = 0; v < n; ++v) {
    for (int c = 0; c < kNumStaticFeatures; ++c) {
      static_inputs_(v, c) = (features_.rows[v][c] - norm_.mean[c]) / norm_.scale[c];
    }
  }
  const int m = graph.num_edges();
  edge_inputs_ = Matrix(2 * m, kEdgeInputDim);
  for (int i = 0; i < m; ++i) {
    const Edge& e = graph.edges()[i];
    const double cost = (comm_cost(graph, e.src, cluster.comm_factor) - norm_.edge_mean) / norm_.edge_scale;
    senders_.push_back(e.src);
    receivers_.push_back(e.dst);
    edge_inputs_(i, 0) = cost;
    edge_inputs_(i, 1) = 1.0;
  }
  for (int i = 0; i < m; ++i) {
    const Edge& e = graph.edges()[i];
    senders_.push_back(e.dst);
    receivers_.push_back(e.src);
    edge_inputs_(m + i, 0) = edge_inputs_(i, 0);
    edge_inputs_(m + i, 1) = -1.0;
  }
  double total_flops = 0.0;
  for (const Vertex& v : graph.vertices()) total_flops += static_cast<double>(v.flops);
  const double fastest = *std::max_element(cluster.rate.begin(), cluster.rate.end());
  if (total_flops > 0) {
    flops_scale_ = total_flops;
    time_scale_ = total_flops / fastest;
  }
}

MdpState::MdpState(const GraphContext& ctx)
    : ctx_(&ctx), timeline_(ctx.graph(), ctx.cluster()), candidates_(ctx.graph()) {}

void MdpState::apply(VertexId v, DeviceId d) {
  if (!candidates_.contains(v)) throw std::logic_error("vertex " + std::to_string(v) + " is not a candidate");
  if (d < 0 || d >= ctx_->cluster().device_count) throw std::logic_error("device " + std::to_string(d) + " out of range");
  timeline_.place(v, d);
  candidates_.take(v);
  ++step_;
}

Matrix MdpState::node_inputs() const {
  const Matrix& s = ctx_->static_inputs();
  Matrix x(s.rows(), kNodeInputDim);
  for (int v = 0; v < s.rows(); ++v) {
    for (int c = 0; c < kNumStaticFeatures; ++c) x(v, c) = s(v, c);
    x(v, kNumStaticFeatures) = timeline_.placed(v) ? 1.0 : 0.0;
  }
  for (VertexId v : candidates_.ids()) x(v, kNumStaticFeatures + 1) = 1.0;
  return x;
}

Matrix MdpState::device_inputs(VertexId v) const {
  const DeviceFeatureRows rows = device_features(timeline_, v);
  Matrix x(static_cast<int>(rows.size()), kNumDeviceFeatures);
  for (int d = 0; d < x.rows(); ++d) {
    x(d, kAssignedCompute) = rows[d][kAssignedCompute] / ctx_->flops_scale();
    x(d, kPredCompute) = rows[d][kPredCompute] / ctx_->flops_scale();
    x(d, kMinInputStart) = rows[d][kMinInputStart] / ctx_->time_scale();
    x(d, kMaxInputEnd) = rows[d][kMaxInputEnd] / ctx_->time_scale();
    x(d, kEarliestStart) = rows[d][kEarliestStart] / ctx_->time_scale();
  }
  return x;
}

std::vector<std::pair<std::string, std::pair<int, int>>> parameter_layout(const PolicyConfig& config) {
  if (config.hidden < 1 || config.layers < 1) throw std::invalid_argument("hidden width and layers must be >= 1");
  const int h = config.hidden;
  std::vector<std::pair<std::string, std::pair<int, int>>> layout;
  auto linear = [&](const std::string& name, int in, int out) {
    layout.push_back({name + ".W", {in, out}});
    layout.push_back({name + ".b", {1, out}});
  };
  const std::vector<std::string> encoders =
      config.shared_encoder ? std::vector<std::string>{"enc"} : std::vector<std::string>{"sel.enc", "plc.enc"};
  for (const std::string& enc : encoders) {
    for (int k = 0; k < config.layers; ++k) {
      const int in = k == 0 ? kNodeInputDim : h;
      linear(enc + ".gnn" + std::to_string(k) + ".msg", 2 * in + kEdgeInputDim, h);
      linear(enc + ".gnn" + std::to_string(k) + ".upd", in + h, h);
    }
  }
  linear("sel.z", kNumStaticFeatures, h);
  linear("sel.head1", 4 * h, h);
  linear("sel.head2", h, 1);
  linear("plc.z", kNumStaticFeatures, h);
  linear("plc.y", kNumDeviceFeatures, h);
  linear("plc.head1", 4 * h, h);
  linear("plc.head2", h, 1);
  return layout;
}

PolicyBundle::PolicyBundle(PolicyConfig config, nn::ParamStore params)
    : config_(config), params_(std::move(params)) {
  check();
}

PolicyBundle PolicyBundle::create(const PolicyConfig& config, std::uint64_t seed) {
  nn::ParamStore params;
  const auto layout = parameter_layout(config);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& [name, shape] = layout[i];
    if (name.ends_with(".b")) {
      params.add(name, Matrix(shape.first, shape.second));
    } else {
      params.add_xavier(name, shape.first, shape.second, derive_seed(seed, i));
    }
  }
  return PolicyBundle(config, std::move(params));
}

void PolicyBundle::check() const {
  const auto layout = parameter_layout(config_);
  if (static_cast<int>(layout.size()) != params_.size()) {
    throw std::invalid_argument("policy has " + std::to_string(params_.size()) + " parameters, config needs " +
                                std::to_string(layout.size()));
  }
  for (const auto& [name, shape] : layout) {
    if (!params_.contains(name)) throw std::invalid_argument("policy is missing parameter \"" + name + "\"");
    const Matrix& m = params_.get(name).value;
    if (m.rows() != shape.first || m.cols() != shape.second) {
      throw std::invalid_argument("parameter \"" + name + "\" is " + m.shape() + ", config needs " +
                                  Matrix::shape_string(shape.first, shape.second));
    }
  }
}

json PolicyBundle::checkpoint_json() const { return nn::params_to_json(params_); }

json PolicyBundle::sidecar_json() const {
  json doc = {{"hidden", config_.hidden},
              {"layers", config_.layers},
              {"shared_encoder", config_.shared_encoder},
              {"mp_mode", mp_mode_name(config_.mp_mode)},
              {"leaky_slope", config_.leaky_slope},
              {"epsilon", {{"start", epsilon_start}, {"end", epsilon_end}}},
              {"episodes_trained", episodes_trained},
              {"normalization", nullptr}};
  if (normalization) {
    doc["normalization"] = {{"mean", normalization->mean},
                            {"scale", normalization->scale},
                            {"edge_mean", normalization->edge_mean},
                            {"edge_scale", normalization->edge_scale}};
  }
  return doc;
}

PolicyBundle PolicyBundle::from_json(const json& checkpoint, const json& sidecar) {
  PolicyConfig config;
  PolicyBundle bundle;
  try {
    config.hidden = sidecar.at("hidden").get<int>();
    config.layers = sidecar.at("layers").get<int>();
    config.shared_encoder = sidecar.value("shared_encoder", false);
    config.mp_mode = parse_mp_mode(sidecar.value("mp_mode", std::string("per_episode")));
    config.leaky_slope = sidecar.value("leaky_slope", 0.01);
    bundle = PolicyBundle(config, nn::params_from_json(checkpoint));
    if (sidecar.contains("epsilon")) {
      bundle.epsilon_start = sidecar["epsilon"].value("start", 0.2);
      bundle.epsilon_end = sidecar["epsilon"].value("end", 0.0);
    }
    bundle.episodes_trained = sidecar.value("episodes_trained", 0);
    if (sidecar.contains("normalization") && !sidecar["normalization"].is_null()) {
      const json& n = sidecar["normalization"];
      FeatureNormalization norm;
      norm.mean = n.at("mean").get<std::array<double, kNumStaticFeatures>>();
      norm.scale = n.at("scale").get<std::array<double, kNumStaticFeatures>>();
      norm.edge_mean = n.at("edge_mean").get<double>();
      norm.edge_scale = n.at("edge_scale").get<double>();
      bundle.normalization = norm;
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad policy sidecar: ") + e.what());
  }
  return bundle;
}

PolicyNet::PolicyNet(nn::Tape& tape, const PolicyConfig& config, const nn::ParamStore& values,
                     nn::ParamStore* trainable, const GraphContext& ctx)
    : tape_(&tape), config_(config), values_(&values), trainable_(trainable), ctx_(&ctx) {}

Var PolicyNet::param(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Var v = trainable_ != nullptr ? tape_->param(trainable_->get(name)) : tape_->constant(values_->get(name).value);
  bound_.emplace(name, v);
  return v;
}

std::string PolicyNet::encoder_prefix(std::string_view head) const {
  if (head != "sel" && head != "plc") throw std::invalid_argument("unknown head \"" + std::string(head) + "\"");
  return config_.shared_encoder ? "enc" : std::string(head) + ".enc";
}

Var PolicyNet::encode(std::string_view head, const Matrix& node_inputs) {
  const std::string prefix = encoder_prefix(head);
  if (node_inputs.rows() != ctx_->graph().num_vertices() || node_inputs.cols() != kNodeInputDim) {
    throw nn::ShapeError("encoder input is " + node_inputs.shape() + ", expected " +
                         Matrix::shape_string(ctx_->graph().num_vertices(), kNodeInputDim));
  }
  const int n = ctx_->graph().num_vertices();
  const double slope = config_.leaky_slope;
  Var h = tape_->constant(node_inputs);
  const Var edges = tape_->constant(ctx_->edge_inputs());
  for (int k = 0; k < config_.layers; ++k) {
    const std::string layer = prefix + ".gnn" + std::to_string(k);
    const Var msg_in = nn::concat({nn::row_gather(h, ctx_->senders()), nn::row_gather(h, ctx_->receivers()), edges});
    const Var msg = nn::leaky_relu(nn::linear(msg_in, param(layer + ".msg.W"), param(layer + ".msg.b")), slope);
    const Var agg = nn::segment_sum(msg, ctx_->receivers(), n);
    h = nn::leaky_relu(nn::linear(nn::concat({h, agg}), param(layer + ".upd.W"), param(layer + ".upd.b")), slope);
  }
  return h;
}

Var PolicyNet::static_embedding(std::string_view head) {
  auto it = z_cache_.find(head);
  if (it != z_cache_.end()) return it->second;
  const std::string name(head);
  const Var x = tape_->constant(ctx_->static_inputs());
  const Var z = nn::leaky_relu(nn::linear(x, param(name + ".z.W"), param(name + ".z.b")), config_.leaky_slope);
  z_cache_.emplace(name, z);
  return z;
}

Var PolicyNet::mlp_head(const std::string& head, Var input) {
  const Var hidden =
      nn::leaky_relu(nn::linear(input, param(head + ".head1.W"), param(head + ".head1.b")), config_.leaky_slope);
  return nn::transpose(nn::linear(hidden, param(head + ".head2.W"), param(head + ".head2.b")));
}

Var PolicyNet::sel_logits(Var h, Var z, const std::vector<VertexId>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("select head needs at least one candidate");
  const StaticGraphFeatures& f = ctx_->features();
  std::vector<int> b_rows, b_seg, t_rows, t_seg;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (VertexId u : f.b_path[candidates[i]]) {
      b_rows.push_back(u);
      b_seg.push_back(static_cast<int>(i));
    }
    for (VertexId u : f.t_path[candidates[i]]) {
      t_rows.push_back(u);
      t_seg.push_back(static_cast<int>(i));
    }
  }
  const int c = static_cast<int>(candidates.size());
  const Var input = nn::concat({nn::row_gather(h, candidates), nn::segment_sum(nn::row_gather(h, b_rows), b_seg, c),
                                nn::segment_sum(nn::row_gather(h, t_rows), t_seg, c), nn::row_gather(z, candidates)});
  return mlp_head("sel", input);
}

Var PolicyNet::device_summary(Var h, const GreedyTimeline& timeline) {
  std::vector<int> rows, devices;
  for (VertexId u = 0; u < ctx_->graph().num_vertices(); ++u) {
    if (timeline.placed(u)) {
      rows.push_back(u);
      devices.push_back(timeline.device(u));
    }
  }
  return nn::segment_sum(nn::row_gather(h, rows), devices, ctx_->cluster().device_count);
}

Var PolicyNet::plc_logits(Var h, Var z, Var device_summary, const Matrix& device_inputs, VertexId v) {
  const int devices = ctx_->cluster().device_count;
  if (device_inputs.rows() != devices || device_inputs.cols() != kNumDeviceFeatures) {
    throw nn::ShapeError("device features are " + device_inputs.shape() + ", expected " +
                         Matrix::shape_string(devices, kNumDeviceFeatures));
  }
  const Var y = nn::leaky_relu(nn::linear(tape_->constant(device_inputs), param("plc.y.W"), param("plc.y.b")),
                               config_.leaky_slope);
  const std::vector<int> repeat(devices, v);
  const Var input = nn::concat({nn::row_gather(h, repeat), device_summary, y, nn::row_gather(z, repeat)});
  return mlp_head("plc", input);
}

TeacherAction critical_path_teacher(const MdpState& state, const StaticGraphFeatures& features) {
  VertexId best = state.candidates().front();
  for (VertexId v : state.candidates()) {
    if (features.t_level(v) > features.t_level(best)) best = v;
  }
  return {best, state.timeline().best_device(best)};
}

namespace {

int argmax(const std::vector<double>& xs) {
  return static_cast<int>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

// Inverse-CDF draw, falling back to the last index against rounding.
int sample_index(const std::vector<double>& probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

struct Decision {
  int index = 0;
  int greedy = 0;
  Var log_prob;
  Var entropy;
};

// Chooses among the columns of 1 x k logits and scores the choice.
Decision decide(nn::Tape& tape, Var logits, const EpisodeOptions& opt, std::mt19937_64& rng,
                std::optional<int> forced) {
  const Var q = nn::softmax_rows(logits);
  const Var log_q = nn::log_softmax_rows(logits);
  const std::vector<double>& probs = q.value().values();
  const int k = static_cast<int>(probs.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double explore = unit(rng);
  const double pick = unit(rng);

  Decision d;
  d.greedy = argmax(probs);
  double eps = opt.epsilon;
  if (forced) {
    d.index = *forced;
    eps = 0.0;
  } else if (opt.mode == ActionMode::kGreedy) {
    d.index = d.greedy;
  } else if (explore < eps) {
    d.index = std::min(k - 1, static_cast<int>(pick * k));
  } else {
    d.index = sample_index(probs, pick);
  }
  if (eps <= 0.0) {
    d.log_prob = nn::row_gather(nn::transpose(log_q), {d.index});
  } else {
    const Var mass = nn::scalar_mul(nn::row_gather(nn::transpose(q), {d.index}), 1.0 - eps);
    d.log_prob = nn::log(nn::add(mass, tape.constant(Matrix::scalar(eps / k))));
  }
  d.entropy = nn::scalar_mul(nn::sum(nn::mul(q, log_q)), -1.0);
  return d;
}

Var total(nn::Tape& tape, const std::vector<Var>& terms) {
  if (terms.empty()) return tape.constant(Matrix::scalar(0.0));
  return nn::sum(nn::concat(terms));
}

}  // namespace

TapedEpisode run_episode(const GraphContext& ctx, const PolicyConfig& config, const nn::ParamStore& values,
                         nn::ParamStore* trainable, const EpisodeOptions& options) {
  TapedEpisode ep;
  ep.tape = std::make_unique<nn::Tape>();
  nn::Tape& tape = *ep.tape;
  PolicyNet net(tape, config, values, trainable, ctx);
  MdpState state(ctx);
  std::mt19937_64 rng(options.seed);
  const Var z_sel = net.static_embedding("sel");
  const Var z_plc = net.static_embedding("plc");
  Var h_sel, h_plc;
  std::vector<Var> log_probs, entropies;

  while (!state.done()) {
    if (state.step() == 0 || config.mp_mode == MpMode::kPerStep) {
      const Matrix nodes = state.node_inputs();
      h_sel = net.encode("sel", nodes);
      h_plc = config.shared_encoder ? h_sel : net.encode("plc", nodes);
      ++ep.trace.encoder_calls;
    }
    const std::vector<VertexId> cands = state.candidates();
    std::optional<TeacherAction> target;
    std::optional<int> forced_vertex, forced_device;
    if (options.teacher) {
      target = options.teacher(state);
      auto it = std::find(cands.begin(), cands.end(), target->first);
      if (it == cands.end()) {
        throw std::logic_error("teacher chose vertex " + std::to_string(target->first) +
                               ", which is not a candidate at step " + std::to_string(state.step()));
      }
      forced_vertex = static_cast<int>(it - cands.begin());
      forced_device = target->second;
    }
    const Decision sel = decide(tape, net.sel_logits(h_sel, z_sel, cands), options, rng, forced_vertex);
    const VertexId v = cands[sel.index];
    const Var summary = net.device_summary(h_plc, state.timeline());
    const Decision plc =
        decide(tape, net.plc_logits(h_plc, z_plc, summary, state.device_inputs(v), v), options, rng, forced_device);

    StepRecord rec;
    rec.candidates = cands;
    rec.vertex = v;
    rec.vertex_log_prob = sel.log_prob.value()(0, 0);
    rec.device = plc.index;
    rec.device_log_prob = plc.log_prob.value()(0, 0);
    rec.sel_entropy = sel.entropy.value()(0, 0);
    rec.plc_entropy = plc.entropy.value()(0, 0);
    rec.greedy_vertex = cands[sel.greedy];
    rec.greedy_device = plc.greedy;
    ep.trace.steps.push_back(std::move(rec));

    log_probs.push_back(sel.log_prob);
    log_probs.push_back(plc.log_prob);
    entropies.push_back(sel.entropy);
    entropies.push_back(plc.entropy);
    state.apply(v, plc.index);
  }
  ep.log_prob_sum = total(tape, log_probs);
  ep.entropy_sum = total(tape, entropies);
  ep.assignment = {state.timeline().devices(), "policy"};
  return ep;
}

RolloutResult assign_rollout(const DataflowGraph& graph, const ClusterSpec& cluster, const PolicyBundle& bundle,
                             double epsilon, std::uint64_t seed, ActionMode mode, Strategy strategy) {
  const GraphContext ctx(graph, cluster);
  EpisodeOptions opt;
  opt.epsilon = epsilon;
  opt.seed = seed;
  opt.mode = mode;
  TapedEpisode ep = run_episode(ctx, bundle.config(), bundle.params(), nullptr, opt);
  ep.trace.makespan_ms = exec_time(graph, ep.assignment, cluster, strategy).makespan_ms;
  return {std::move(ep.assignment), std::move(ep.trace)};
}

std::vector<double> sel_distribution(const GraphContext& ctx, const PolicyBundle& bundle, const MdpState& state) {
  nn::Tape tape;
  PolicyNet net(tape, bundle.config(), bundle.params(), nullptr, ctx);
  const Var h = net.encode("sel", state.node_inputs());
  return nn::softmax_rows(net.sel_logits(h, net.static_embedding("sel"), state.candidates())).value().values();
}

std::vector<double> plc_distribution(const GraphContext& ctx, const PolicyBundle& bundle, const MdpState& state,
                                     VertexId v) {
  nn::Tape tape;
  PolicyNet net(tape, bundle.config(), bundle.params(), nullptr, ctx);
  const Var h = net.encode("plc", state.node_inputs());
  const Var logits =
      net.plc_logits(h, net.static_embedding("plc"), net.device_summary(h, state.timeline()), state.device_inputs(v), v);
  return nn::softmax_rows(logits).value().values();
}

}  // namespace wcplace
