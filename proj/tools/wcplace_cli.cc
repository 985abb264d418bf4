// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// wcplace: graph generation, simulation, assignment engines, policy training
// and engine comparison. Every command writes its artifacts plus a
// manifest.json into --out. Exit codes: 0 ok, 2 invalid input, 3 runtime
// failure.
//
// Settings come from built-in defaults, then the --config JSON document,
// then flags, each overriding the previous. Config layout:
//   {"cluster": {...cluster JSON...}, "strategy": "fifo", "seed": 0,
//    "policy": {"hidden", "layers", "shared_encoder", "mp_mode"},
//    "train": {...TrainConfig JSON...},
//    "stages": {"imitation": {...}, "sim_rl": {...}, "system_rl": {...}},
//    "system": {"sigma": 0.1, "seed": 1}}

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wcplace/assignment.h"
#include "wcplace/builders.h"
#include "wcplace/cluster.h"
#include "wcplace/features.h"
#include "wcplace/fixtures.h"
#include "wcplace/graph.h"
#include "wcplace/graph_json.h"
#include "wcplace/heuristics.h"
#include "wcplace/policy.h"
#include "wcplace/report.h"
#include "wcplace/seeding.h"
#include "wcplace/simulator.h"
#include "wcplace/stats.h"
#include "wcplace/training.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wcplace {
namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t x) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << x;
  return out.str();
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// Collects outputs and writes manifest.json; outputs cite it by name.
class Run {
 public:
  Run(fs::path out, std::string command) : out_(std::move(out)), command_(std::move(command)) {
    fs::create_directories(out_);
  }

  json config;
  json seeds = json::object();
  json inputs = json::object();

  void write_json(const std::string& name, json doc) {
    if (doc.is_object()) doc["manifest"] = "manifest.json";
    write_text(name, doc.dump(2) + "\n");
  }
  void write_text(const std::string& name, const std::string& text) {
    std::ofstream f(out_ / name);
    if (!f) throw std::runtime_error("cannot write " + (out_ / name).string());
    f << text;
    outputs_.push_back(name);
  }
  void finish() {
    const json manifest = {{"tool", "wcplace"},
                           {"version", kToolVersion},
                           {"command", command_},
                           {"config", config},
                           {"config_hash", hex(fnv1a(config.dump()))},
                           {"seeds", seeds},
                           {"inputs", inputs},
                           {"outputs", outputs_}};
    std::ofstream f(out_ / "manifest.json");
    f << manifest.dump(2) << "\n";
  }
  const fs::path& out() const { return out_; }

 private:
  fs::path out_;
  std::string command_;
  std::vector<std::string> outputs_;
};

struct GlobalOptions {
  std::string out = "wcplace_out";
  std::string config_path;
  int jobs = 1;
  json config = json::object();

  void load() {
    if (!config_path.empty()) config = read_json(config_path);
    if (!config.is_object()) throw InputError("config must be a JSON object");
  }
  json section(const std::string& key) const {
    return config.contains(key) ? config[key] : json::object();
  }
};

struct ClusterFlags {
  std::string path;
  int devices = 4;
  double rate = 1e10;
  double bandwidth = 1e7;
  double jitter_sigma = 0.0;
  std::uint64_t jitter_seed = 0;
  CLI::Option* devices_opt = nullptr;
  CLI::Option* rate_opt = nullptr;
  CLI::Option* bandwidth_opt = nullptr;
  CLI::Option* sigma_opt = nullptr;
  CLI::Option* jseed_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--cluster", path, "cluster JSON file");
    devices_opt = app->add_option("--devices", devices, "device count")->check(CLI::PositiveNumber);
    rate_opt = app->add_option("--rate", rate, "FLOPs per ms per device");
    bandwidth_opt = app->add_option("--bandwidth", bandwidth, "bytes per ms per link");
    sigma_opt = app->add_option("--jitter-sigma", jitter_sigma, "lognormal duration jitter");
    jseed_opt = app->add_option("--jitter-seed", jitter_seed, "jitter seed");
  }

  ClusterSpec resolve(const GlobalOptions& g, Run* run) const {
    ClusterSpec c = ClusterSpec::uniform(devices, rate, bandwidth);
    if (!path.empty()) {
      c = cluster_from_json(read_json(path));
      if (run) run->inputs["cluster"] = path;
    } else if (g.config.contains("cluster")) {
      c = cluster_from_json(g.config["cluster"]);
    }
    if (devices_opt->count() || rate_opt->count() || bandwidth_opt->count()) {
      const int n = devices_opt->count() ? devices : c.device_count;
      const double r = rate_opt->count() ? rate : c.rate.front();
      const double b = bandwidth_opt->count() ? bandwidth
                       : n > 1 && c.device_count > 1 ? c.bandwidth[0][1]
                                                     : bandwidth;
      const Jitter j = c.jitter;
      const double factor = c.comm_factor;
      c = ClusterSpec::uniform(n, r, b);
      c.jitter = j;
      c.comm_factor = factor;
    }
    if (sigma_opt->count()) c.jitter.sigma = jitter_sigma;
    if (jseed_opt->count()) c.jitter.seed = jitter_seed;
    c.check();
    return c;
  }
};

Strategy resolve_strategy(const GlobalOptions& g, const std::string& flag, CLI::Option* opt) {
  if (opt->count()) return parse_strategy(flag);
  if (g.config.contains("strategy")) return parse_strategy(g.config["strategy"].get<std::string>());
  return Strategy::kFifo;
}

std::uint64_t resolve_seed(const GlobalOptions& g, std::uint64_t flag, CLI::Option* opt) {
  if (opt->count()) return flag;
  return g.config.value("seed", std::uint64_t{0});
}

DataflowGraph load_graph(const std::string& path, Run& run) {
  run.inputs["graph"] = path;
  return load_json(path);
}

PolicyBundle load_policy(const fs::path& dir) {
  return PolicyBundle::from_json(read_json(dir / "policy.ckpt.json"), read_json(dir / "policy.meta.json"));
}

void save_policy(Run& run, const PolicyBundle& bundle) {
  run.write_text("policy.ckpt.json", bundle.checkpoint_json().dump() + "\n");
  run.write_json("policy.meta.json", bundle.sidecar_json());
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
  std::string kind;
  std::int64_t n = 10000;
  int shard = 2;
  int devices = 4;
  std::int64_t batch = 32768, d_in = 32, d_hidden = 65536, d_out = 32;
  int vertices = 8;
  double edge_prob = 0.4;
  std::uint64_t seed = 0;
  int chain = 4;
};

void cmd_gen(const GlobalOptions& g, const GenArgs& a) {
  Run run(g.out, "gen");
  DataflowGraph graph;
  json params = {{"kind", a.kind}};
  if (a.kind == "chainmm") {
    graph = build_chainmm(a.n, a.shard, a.devices);
    params.update({{"n", a.n}, {"shard", a.shard}, {"devices", a.devices}});
  } else if (a.kind == "ffnn") {
    graph = build_ffnn(a.batch, a.d_in, a.d_hidden, a.d_out, a.shard, a.devices);
    params.update({{"batch", a.batch}, {"d_in", a.d_in}, {"d_hidden", a.d_hidden}, {"d_out", a.d_out},
                   {"shard", a.shard}, {"devices", a.devices}});
  } else if (a.kind == "fixture6" || a.kind == "diamond" || a.kind == "chain") {
    graph = a.kind == "fixture6" ? six_vertex_fixture() : a.kind == "diamond" ? diamond_fixture() : chain_fixture(a.chain);
    if (a.kind == "chain") params["length"] = a.chain;
    run.write_json("cluster.json", cluster_to_json(fixture_cluster(2)));
  } else if (a.kind == "random") {
    graph = random_dag(a.vertices, a.edge_prob, a.seed);
    params.update({{"vertices", a.vertices}, {"edge_prob", a.edge_prob}});
    run.seeds["graph"] = a.seed;
  } else {
    throw InputError("unknown graph kind \"" + a.kind + "\"");
  }
  run.config = params;
  run.write_json("graph.json", graph_to_json(graph));
  run.finish();
  std::cout << "vertices=" << graph.num_vertices() << " edges=" << graph.num_edges()
            << " meta_ops=" << graph.meta_ops().size() << "\n";
}

// ---- features ---------------------------------------------------------------

void cmd_features(const GlobalOptions& g, const std::string& graph_path, double comm_factor) {
  Run run(g.out, "features");
  const DataflowGraph graph = load_graph(graph_path, run);
  const StaticGraphFeatures f = static_features(graph, comm_factor);
  run.config = {{"comm_factor", comm_factor}};
  json rows = json::array();
  for (const auto& r : f.rows) rows.push_back(r);
  run.write_json("features.json", {{"columns", {"compute_cost", "in_comm_sum", "out_comm_sum", "t_level_cost",
                                                "b_level_cost"}},
                                   {"rows", rows},
                                   {"b_path", f.b_path},
                                   {"t_path", f.t_path}});
  run.finish();
  std::cout << "features for " << graph.num_vertices() << " vertices\n";
}

// ---- simulate ---------------------------------------------------------------

void cmd_simulate(const GlobalOptions& g, const std::string& graph_path, const std::string& assignment_path,
                  const ClusterFlags& cf, Strategy strategy, std::uint64_t seed) {
  Run run(g.out, "simulate");
  const DataflowGraph graph = load_graph(graph_path, run);
  const ClusterSpec cluster = cf.resolve(g, &run);
  run.inputs["assignment"] = assignment_path;
  const Assignment a = assignment_from_json(read_json(assignment_path));
  check_assignment(graph, a, cluster.device_count);
  run.config = {{"cluster", cluster_to_json(cluster)}, {"strategy", strategy_name(strategy)}};
  run.seeds["run"] = seed;
  const SimResult r = exec_time(graph, a, cluster, strategy, seed);
  const UtilizationReport util = utilization_report(r.schedule, cluster);
  run.write_json("schedule.json", schedule_to_json(r.schedule));
  run.write_json("utilization.json", report_to_json(util));
  run.write_text("gantt.svg", gantt_svg(util));
  run.finish();
  std::cout << "makespan_ms=" << json(r.makespan_ms).dump() << "\n";
}

// ---- assign -----------------------------------------------------------------

struct AssignArgs {
  std::string engine;
  std::string graph;
  std::string checkpoint;
  int trials = 50;
  std::uint64_t cap = kDefaultBruteForceCap;
};

Assignment run_engine(const std::string& engine, const DataflowGraph& graph, const ClusterSpec& cluster,
                      Strategy strategy, std::uint64_t seed, int trials, const PolicyBundle* policy, int jobs,
                      std::uint64_t cap) {
  if (engine == "critical_path") return critical_path_assign(graph, cluster, trials, seed, strategy, jobs);
  if (engine == "enumopt") return enumerative_optimizer(graph, cluster);
  if (engine == "random") return random_assign(graph, cluster.device_count, seed);
  if (engine == "single") return single_device_assign(graph);
  if (engine == "oracle") return brute_force_optimal(graph, cluster, strategy, cap, jobs).best;
  if (engine == "policy") {
    if (policy == nullptr) throw InputError("engine policy needs --checkpoint");
    return assign_rollout(graph, cluster, *policy, 0.0, seed, ActionMode::kGreedy, strategy).assignment;
  }
  throw InputError("unknown engine \"" + engine + "\"");
}

void cmd_assign(const GlobalOptions& g, const AssignArgs& a, const ClusterFlags& cf, Strategy strategy,
                std::uint64_t seed) {
  Run run(g.out, "assign");
  const DataflowGraph graph = load_graph(a.graph, run);
  const ClusterSpec cluster = cf.resolve(g, &run);
  std::optional<PolicyBundle> policy;
  if (!a.checkpoint.empty()) {
    policy = load_policy(a.checkpoint);
    run.inputs["checkpoint"] = a.checkpoint;
  }
  run.config = {{"engine", a.engine}, {"cluster", cluster_to_json(cluster)}, {"strategy", strategy_name(strategy)},
                {"trials", a.trials}};
  run.seeds["engine"] = seed;
  const Assignment assignment =
      run_engine(a.engine, graph, cluster, strategy, seed, a.trials, policy ? &*policy : nullptr, g.jobs, a.cap);
  const double ms = exec_time(graph, assignment, cluster, strategy).makespan_ms;
  run.write_json("assignment.json", assignment_to_json(assignment, ms));
  run.finish();
  std::cout << "engine=" << assignment.engine << " makespan_ms=" << json(ms).dump() << "\n";
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> stages{"sim_rl"};
  std::string graph;
  std::string checkpoint_in;
  int episodes = 0;
  int hidden = 64;
  int layers = 2;
  std::string mp_mode = "per_episode";
  bool shared = false;
  double lr_start = 0, lr_end = 0, entropy = 0, eps_start = 0, eps_end = 0;
  double system_sigma = 0.1;
  std::uint64_t system_seed = 1;
  CLI::Option *episodes_opt, *hidden_opt, *layers_opt, *mp_opt, *shared_opt, *lr0_opt, *lr1_opt, *ent_opt, *eps0_opt,
      *eps1_opt, *sigma_opt, *sseed_opt;
};

void cmd_train(const GlobalOptions& g, const TrainArgs& a, const ClusterFlags& cf, Strategy strategy,
               std::uint64_t seed) {
  Run run(g.out, "train");
  const DataflowGraph graph = load_graph(a.graph, run);
  const ClusterSpec cluster = cf.resolve(g, &run);

  PolicyConfig pc;
  const json pj = g.section("policy");
  pc.hidden = a.hidden_opt->count() ? a.hidden : pj.value("hidden", pc.hidden);
  pc.layers = a.layers_opt->count() ? a.layers : pj.value("layers", pc.layers);
  pc.shared_encoder = a.shared_opt->count() ? a.shared : pj.value("shared_encoder", pc.shared_encoder);
  pc.mp_mode = parse_mp_mode(a.mp_opt->count() ? a.mp_mode : pj.value("mp_mode", std::string("per_episode")));

  PolicyBundle bundle;
  if (!a.checkpoint_in.empty()) {
    bundle = load_policy(a.checkpoint_in);
    run.inputs["checkpoint"] = a.checkpoint_in;
    if (a.mp_opt->count()) bundle.config().mp_mode = pc.mp_mode;
  } else {
    bundle = PolicyBundle::create(pc, seed);
  }

  TrainConfig base;
  base.seed = seed;
  base.strategy = strategy;
  base = train_config_from_json(g.section("train"), base);
  const json per_stage = g.section("stages");
  std::vector<PipelineStage> stages;
  json stage_configs = json::object();
  for (const std::string& name : a.stages) {
    const Stage stage = parse_stage(name);
    TrainConfig c = per_stage.contains(name) ? train_config_from_json(per_stage[name], base) : base;
    if (a.episodes_opt->count()) c.episodes = a.episodes;
    if (a.lr0_opt->count()) c.lr_start = a.lr_start;
    if (a.lr1_opt->count()) c.lr_end = a.lr_end;
    if (a.ent_opt->count()) c.entropy_weight = a.entropy;
    if (a.eps0_opt->count()) c.epsilon_start = a.eps_start;
    if (a.eps1_opt->count()) c.epsilon_end = a.eps_end;
    c.check();
    stages.push_back({stage, c});
    stage_configs[name] = train_config_to_json(c);
  }
  const json sys = g.section("system");
  ClusterSpec system_cluster = cluster;
  system_cluster.jitter.sigma = a.sigma_opt->count() ? a.system_sigma : sys.value("sigma", a.system_sigma);
  system_cluster.jitter.seed = a.sseed_opt->count() ? a.system_seed : sys.value("seed", a.system_seed);
  SimulatorExecutor system(system_cluster, strategy, system_cluster.jitter.seed);

  run.config = {{"cluster", cluster_to_json(cluster)},
                {"system_cluster", cluster_to_json(system_cluster)},
                {"policy", bundle.sidecar_json()},
                {"stages", stage_configs},
                {"strategy", strategy_name(strategy)}};
  run.seeds["train"] = seed;
  run.seeds["system"] = system_cluster.jitter.seed;

  const PipelineReport report = run_pipeline(graph, cluster, stages, bundle, &system);
  for (const StageReport& s : report.stages) {
    run.write_json("curve_" + std::string(stage_name(s.stage)) + ".json",
                   {{"stage", stage_name(s.stage)}, {"curve", curve_to_json(s.curve)}});
  }
  run.write_json("report.json", pipeline_report_to_json(report));
  save_policy(run, bundle);
  run.finish();
  for (const StageReport& s : report.stages) {
    std::cout << stage_name(s.stage) << ": episodes=" << s.curve.size()
              << " best_ms=" << json(s.best_makespan_ms).dump() << " final_best_ms=" << json(s.final_best_ms).dump()
              << "\n";
  }
}

// ---- compare ----------------------------------------------------------------

struct CompareArgs {
  std::string graph;
  std::vector<std::string> engines{"critical_path", "enumopt", "random", "single"};
  int trials = 10;
  int cp_trials = 50;
  std::string checkpoint;
  double sigma = 0.1;
  std::uint64_t system_seed = 1;
};

void cmd_compare(const GlobalOptions& g, const CompareArgs& a, const ClusterFlags& cf, Strategy strategy,
                 std::uint64_t seed) {
  Run run(g.out, "compare");
  const DataflowGraph graph = load_graph(a.graph, run);
  const ClusterSpec cluster = cf.resolve(g, &run);
  std::optional<PolicyBundle> policy;
  if (!a.checkpoint.empty()) {
    policy = load_policy(a.checkpoint);
    run.inputs["checkpoint"] = a.checkpoint;
  }
  ClusterSpec jittered = cluster;
  jittered.jitter = {a.sigma, a.system_seed};
  SimulatorExecutor system(jittered, strategy, a.system_seed);
  const Simulator clean(graph, cluster, strategy);
  run.config = {{"cluster", cluster_to_json(cluster)}, {"engines", a.engines}, {"trials", a.trials},
                {"critical_path_trials", a.cp_trials}, {"sigma", a.sigma}, {"strategy", strategy_name(strategy)}};
  run.seeds["engines"] = seed;
  run.seeds["system"] = a.system_seed;

  std::vector<double> all_clean, all_system;
  json rows = json::array();
  std::cout << std::left << std::setw(16) << "engine" << std::setw(26) << "simulated ms" << "system ms\n";
  for (const std::string& engine : a.engines) {
    std::vector<double> c_ms, s_ms;
    for (int t = 0; t < a.trials; ++t) {
      const Assignment asg = run_engine(engine, graph, cluster, strategy, derive_seed(seed, t), a.cp_trials,
                                        policy ? &*policy : nullptr, g.jobs, kDefaultBruteForceCap);
      c_ms.push_back(clean.makespan(asg));
      s_ms.push_back(system.run(graph, asg));
    }
    all_clean.insert(all_clean.end(), c_ms.begin(), c_ms.end());
    all_system.insert(all_system.end(), s_ms.begin(), s_ms.end());
    rows.push_back({{"engine", engine},
                    {"simulated", {{"mean", mean(c_ms)}, {"std", stddev(c_ms)}, {"runs", c_ms}}},
                    {"system", {{"mean", mean(s_ms)}, {"std", stddev(s_ms)}, {"runs", s_ms}}}});
    std::ostringstream c, s;
    c << std::setprecision(6) << mean(c_ms) << " +- " << stddev(c_ms);
    s << std::setprecision(6) << mean(s_ms) << " +- " << stddev(s_ms);
    std::cout << std::setw(16) << engine << std::setw(26) << c.str() << s.str() << "\n";
  }
  json corr = {{"pearson", nullptr}, {"spearman", nullptr}, {"points", all_clean.size()}};
  try {
    corr["pearson"] = pearson(all_clean, all_system);
    corr["spearman"] = spearman(all_clean, all_system);
    std::cout << "pearson=" << corr["pearson"].dump() << " spearman=" << corr["spearman"].dump() << "\n";
  } catch (const std::invalid_argument& e) {
    std::cout << "correlation undefined: " << e.what() << "\n";
  }
  run.write_json("compare.json", {{"rows", rows}, {"correlation", corr}});
  run.finish();
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Device placement for sharded dataflow graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  GlobalOptions g;
  app.add_option("--out", g.out, "artifact directory")->capture_default_str();
  app.add_option("--config", g.config_path, "JSON config file; flags override it")->check(CLI::ExistingFile);
  app.add_option("--jobs", g.jobs, "threads for independent simulations")->check(CLI::PositiveNumber);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "build a graph and write graph.json");
  gen_cmd->add_option("kind", gen.kind, "chainmm | ffnn | fixture6 | diamond | chain | random")->required();
  gen_cmd->add_option("--n", gen.n, "chainmm matrix dimension")->capture_default_str();
  gen_cmd->add_option("--shard", gen.shard, "shard grid per matrix side")->capture_default_str();
  gen_cmd->add_option("--devices", gen.devices, "max shard ops per meta-op")->capture_default_str();
  gen_cmd->add_option("--batch", gen.batch, "ffnn batch")->capture_default_str();
  gen_cmd->add_option("--d-in", gen.d_in, "ffnn input width")->capture_default_str();
  gen_cmd->add_option("--d-hidden", gen.d_hidden, "ffnn hidden width")->capture_default_str();
  gen_cmd->add_option("--d-out", gen.d_out, "ffnn output width")->capture_default_str();
  gen_cmd->add_option("--vertices", gen.vertices, "random DAG size")->capture_default_str();
  gen_cmd->add_option("--edge-prob", gen.edge_prob, "random DAG edge probability")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "random DAG seed")->capture_default_str();
  gen_cmd->add_option("--length", gen.chain, "chain length")->capture_default_str();

  std::string feat_graph;
  double comm_factor = kDefaultCommFactor;
  CLI::App* feat_cmd = app.add_subcommand("features", "write static features");
  feat_cmd->add_option("--graph", feat_graph, "graph JSON")->required();
  feat_cmd->add_option("--comm-factor", comm_factor, "bytes multiplier for edge cost")->capture_default_str();

  auto add_common = [](CLI::App* cmd, ClusterFlags& cf, std::string& strategy, CLI::Option*& strategy_opt,
                       std::uint64_t& seed, CLI::Option*& seed_opt) {
    cf.attach(cmd);
    strategy_opt = cmd->add_option("--strategy", strategy, "fifo | depth_first | breadth_first");
    seed_opt = cmd->add_option("--seed", seed, "seed");
  };

  struct Common {
    ClusterFlags cluster;
    std::string strategy = "fifo";
    CLI::Option* strategy_opt = nullptr;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
  };

  Common sim_c;
  std::string sim_graph, sim_assignment;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "simulate an assignment; write schedule, utilization, Gantt");
  sim_cmd->add_option("--graph", sim_graph, "graph JSON")->required();
  sim_cmd->add_option("--assignment", sim_assignment, "assignment JSON")->required();
  add_common(sim_cmd, sim_c.cluster, sim_c.strategy, sim_c.strategy_opt, sim_c.seed, sim_c.seed_opt);

  Common asg_c;
  AssignArgs asg;
  CLI::App* asg_cmd = app.add_subcommand("assign", "run an assignment engine");
  asg_cmd->add_option("--engine", asg.engine, "critical_path | enumopt | random | single | oracle | policy")
      ->required();
  asg_cmd->add_option("--graph", asg.graph, "graph JSON")->required();
  asg_cmd->add_option("--trials", asg.trials, "critical-path trials")->capture_default_str();
  asg_cmd->add_option("--checkpoint", asg.checkpoint, "policy directory (policy engine)");
  asg_cmd->add_option("--cap", asg.cap, "oracle search cap")->capture_default_str();
  add_common(asg_cmd, asg_c.cluster, asg_c.strategy, asg_c.strategy_opt, asg_c.seed, asg_c.seed_opt);

  Common tr_c;
  TrainArgs tr;
  CLI::App* tr_cmd = app.add_subcommand("train", "train the placement policy");
  tr_cmd->add_option("--stages", tr.stages, "imitation, sim_rl, system_rl in order")->delimiter(',');
  tr_cmd->add_option("--graph", tr.graph, "graph JSON")->required();
  tr_cmd->add_option("--checkpoint-in", tr.checkpoint_in, "policy directory to resume from");
  tr.episodes_opt = tr_cmd->add_option("--episodes", tr.episodes, "episodes per stage");
  tr.hidden_opt = tr_cmd->add_option("--hidden", tr.hidden, "hidden width");
  tr.layers_opt = tr_cmd->add_option("--layers", tr.layers, "message-passing rounds");
  tr.mp_opt = tr_cmd->add_option("--mp-mode", tr.mp_mode, "per_episode | per_step");
  tr.shared_opt = tr_cmd->add_flag("--shared-encoder", tr.shared, "one encoder for both heads");
  tr.lr0_opt = tr_cmd->add_option("--lr-start", tr.lr_start, "initial learning rate");
  tr.lr1_opt = tr_cmd->add_option("--lr-end", tr.lr_end, "final learning rate");
  tr.ent_opt = tr_cmd->add_option("--entropy-weight", tr.entropy, "entropy bonus weight");
  tr.eps0_opt = tr_cmd->add_option("--epsilon-start", tr.eps_start, "initial exploration rate");
  tr.eps1_opt = tr_cmd->add_option("--epsilon-end", tr.eps_end, "final exploration rate");
  tr.sigma_opt = tr_cmd->add_option("--system-sigma", tr.system_sigma, "jitter of the stand-in system executor");
  tr.sseed_opt = tr_cmd->add_option("--system-seed", tr.system_seed, "jitter seed of the system executor");
  add_common(tr_cmd, tr_c.cluster, tr_c.strategy, tr_c.strategy_opt, tr_c.seed, tr_c.seed_opt);

  Common cmp_c;
  CompareArgs cmp;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "compare engines on simulator and jittered executor");
  cmp_cmd->add_option("--graph", cmp.graph, "graph JSON")->required();
  cmp_cmd->add_option("--engines", cmp.engines, "engines to run")->delimiter(',');
  cmp_cmd->add_option("--trials", cmp.trials, "runs per engine")->capture_default_str();
  cmp_cmd->add_option("--cp-trials", cmp.cp_trials, "critical-path trials per run")->capture_default_str();
  cmp_cmd->add_option("--checkpoint", cmp.checkpoint, "policy directory (policy engine)");
  cmp_cmd->add_option("--sigma", cmp.sigma, "jitter of the executor")->capture_default_str();
  cmp_cmd->add_option("--system-seed", cmp.system_seed, "executor seed")->capture_default_str();
  add_common(cmp_cmd, cmp_c.cluster, cmp_c.strategy, cmp_c.strategy_opt, cmp_c.seed, cmp_c.seed_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  g.load();
  if (*gen_cmd) {
    cmd_gen(g, gen);
  } else if (*feat_cmd) {
    cmd_features(g, feat_graph, comm_factor);
  } else if (*sim_cmd) {
    cmd_simulate(g, sim_graph, sim_assignment, sim_c.cluster, resolve_strategy(g, sim_c.strategy, sim_c.strategy_opt),
                 resolve_seed(g, sim_c.seed, sim_c.seed_opt));
  } else if (*asg_cmd) {
    cmd_assign(g, asg, asg_c.cluster, resolve_strategy(g, asg_c.strategy, asg_c.strategy_opt),
               resolve_seed(g, asg_c.seed, asg_c.seed_opt));
  } else if (*tr_cmd) {
    cmd_train(g, tr, tr_c.cluster, resolve_strategy(g, tr_c.strategy, tr_c.strategy_opt),
              resolve_seed(g, tr_c.seed, tr_c.seed_opt));
  } else if (*cmp_cmd) {
    cmd_compare(g, cmp, cmp_c.cluster, resolve_strategy(g, cmp_c.strategy, cmp_c.strategy_opt),
                resolve_seed(g, cmp_c.seed, cmp_c.seed_opt));
  }
  return 0;
}

}  // namespace
}  // namespace wcplace

int main(int argc, char** argv) {
  try {
    return wcplace::run_cli(argc, argv);
  } catch (const wcplace::InvalidGraphError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v.message << "\n";
    return wcplace::kExitInvalid;
  } catch (const wcplace::GraphError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return wcplace::kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return wcplace::kExitInvalid;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return wcplace::kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return wcplace::kExitRuntime;
  }
}
