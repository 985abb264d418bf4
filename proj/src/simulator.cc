// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/simulator.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <sstream>

#include "wcplace/seeding.h"

namespace wcplace {

using nlohmann::json;

namespace {

std::uint64_t task_key(const Task& t) {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(t.kind));
  h = splitmix64(h ^ static_cast<std::uint64_t>(t.vertex));
  h = splitmix64(h ^ static_cast<std::uint64_t>(t.device + 1));
  h = splitmix64(h ^ static_cast<std::uint64_t>(t.src + 1));
  return splitmix64(h ^ static_cast<std::uint64_t>(t.dst + 1));
}

struct Pending {
  double end;
  std::uint64_t seq;
  Task task;
  bool operator>(const Pending& o) const { return end != o.end ? end > o.end : seq > o.seq; }
};

}  // namespace

std::string to_string(const Task& t) {
  std::ostringstream out;
  if (t.kind == TaskKind::kExec) {
    out << "exec(" << t.vertex << "@" << t.device << ")";
  } else {
    out << "transfer(" << t.vertex << ":" << t.src << "->" << t.dst << ")";
  }
  return out.str();
}

ReadyMatrix ReadyMatrix::initial(const DataflowGraph& graph, int devices) {
  ReadyMatrix rdy(graph.num_vertices(), devices);
  for (VertexId v = 0; v < graph.num_vertices(); ++v) {
    if (graph.is_entry(v)) {
      for (DeviceId d = 0; d < devices; ++d) rdy.mark(v, d);
    }
  }
  return rdy;
}

BegunSet BegunSet::from_schedule(const Schedule& s, int vertices, int devices) {
  BegunSet begun(vertices, devices);
  for (const Event& e : s.events) {
    if (e.type == EventType::kBeg) begun.insert(e.task);
  }
  return begun;
}

ResourceState::ResourceState(const ClusterSpec& cluster)
    : cluster_(&cluster),
      exec_busy_(cluster.device_count, 0),
      transfer_busy_(cluster.device_count, std::vector<int>(cluster.device_count, 0)) {}

ResourceState ResourceState::from_schedule(const Schedule& s, const ClusterSpec& cluster) {
  ResourceState state(cluster);
  for (const Event& e : s.events) {
    if (e.type == EventType::kBeg) {
      state.acquire(e.task);
    } else {
      state.release(e.task);
    }
  }
  return state;
}

int ResourceState::in_use(const Task& t) const {
  return t.kind == TaskKind::kExec ? exec_busy_[t.device] : transfer_busy_[t.src][t.dst];
}

bool ResourceState::has_free_slot(const Task& t) const {
  const int cap = t.kind == TaskKind::kExec ? cluster_->exec_slots[t.device]
                                             : cluster_->transfer_slots[t.src][t.dst];
  return in_use(t) < cap;
}

void ResourceState::acquire(const Task& t) {
  if (t.kind == TaskKind::kExec) {
    ++exec_busy_[t.device];
  } else {
    ++transfer_busy_[t.src][t.dst];
  }
}

void ResourceState::release(const Task& t) {
  if (t.kind == TaskKind::kExec) {
    --exec_busy_[t.device];
  } else {
    --transfer_busy_[t.src][t.dst];
  }
}

std::vector<Task> enum_tasks(const DataflowGraph& graph, const ReadyMatrix& rdy, const Assignment& a,
                             const BegunSet& begun) {
  std::vector<Task> out;
  for (VertexId v1 = 0; v1 < graph.num_vertices(); ++v1) {
    const DeviceId src = a[v1];
    if (!rdy.ready(v1, src)) continue;
    // succs are sorted, but several may share a device; emit each
    // destination once, in ascending device order.
    std::vector<DeviceId> dsts;
    for (VertexId v2 : graph.succs(v1)) {
      const DeviceId dst = a[v2];
      if (!rdy.ready(v1, dst)) dsts.push_back(dst);
    }
    std::sort(dsts.begin(), dsts.end());
    dsts.erase(std::unique(dsts.begin(), dsts.end()), dsts.end());
    for (DeviceId dst : dsts) {
      Task t = Task::transfer(v1, src, dst);
      if (!begun.contains(t)) out.push_back(t);
    }
  }
  for (VertexId v2 = 0; v2 < graph.num_vertices(); ++v2) {
    const DeviceId d = a[v2];
    bool inputs_ready = true;
    for (VertexId v1 : graph.preds(v2)) {
      if (!rdy.ready(v1, d)) {
        inputs_ready = false;
        break;
      }
    }
    if (!inputs_ready) continue;
    Task t = Task::exec(v2, d);
    // Entry vertices are materialized everywhere from the start.
    if (graph.is_entry(v2) || rdy.ready(v2, d)) continue;
    if (!begun.contains(t)) out.push_back(t);
  }
  return out;
}

std::vector<Task> enum_tasks(const DataflowGraph& graph, const ReadyMatrix& rdy, const Assignment& a,
                             const Schedule& schedule, int devices) {
  return enum_tasks(graph, rdy, a, BegunSet::from_schedule(schedule, graph.num_vertices(), devices));
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kFifo: return "fifo";
    case Strategy::kDepthFirst: return "depth_first";
    case Strategy::kBreadthFirst: return "breadth_first";
  }
  return "fifo";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "fifo") return Strategy::kFifo;
  if (name == "depth_first") return Strategy::kDepthFirst;
  if (name == "breadth_first") return Strategy::kBreadthFirst;
  throw std::invalid_argument("unknown strategy \"" + std::string(name) + "\"");
}

std::optional<Task> choose_task(const std::vector<Task>& tasks, const ResourceState& resources,
                                Strategy strategy, const StaticGraphFeatures* features) {
  if (strategy != Strategy::kFifo && features == nullptr) {
    throw std::invalid_argument("level-based strategies need static features");
  }
  std::optional<Task> best;
  double best_key = 0.0;
  for (const Task& t : tasks) {
    if (!resources.has_free_slot(t)) continue;
    if (strategy == Strategy::kFifo) return t;
    const double key = strategy == Strategy::kDepthFirst ? features->t_level(t.vertex)
                                                         : -features->b_level(t.vertex);
    if (!best || key > best_key) {
      best = t;
      best_key = key;
    }
  }
  return best;
}

double duration(const DataflowGraph& graph, const Task& task, const ClusterSpec& cluster,
                std::uint64_t run_seed) {
  const Vertex& v = graph.vertex(task.vertex);
  double ms = task.kind == TaskKind::kExec ? cluster.exec_ms(v.flops, task.device)
                                           : cluster.transfer_ms(v.output_bytes, task.src, task.dst);
  if (cluster.jitter.enabled()) {
    const std::uint64_t key = splitmix64(cluster.jitter.seed ^ splitmix64(run_seed)) ^ task_key(task);
    std::mt19937_64 rng(splitmix64(key));
    std::lognormal_distribution<double> noise(0.0, cluster.jitter.sigma);
    ms *= noise(rng);
  }
  return ms;
}

Simulator::Simulator(const DataflowGraph& graph, ClusterSpec cluster, Strategy strategy)
    : graph_(&graph), cluster_(std::move(cluster)), strategy_(strategy),
      features_(static_features(graph, cluster_.comm_factor)) {
  cluster_.check();
}

SimResult Simulator::run(const Assignment& a, std::uint64_t seed) const {
  const DataflowGraph& g = *graph_;
  const int n = g.num_vertices();
  const int devices = cluster_.device_count;
  check_assignment(g, a, devices);

  ReadyMatrix rdy = ReadyMatrix::initial(g, devices);
  BegunSet begun(n, devices);
  ResourceState resources(cluster_);
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;
  std::uint64_t seq = 0;

  int remaining = 0;
  for (VertexId v = 0; v < n; ++v) {
    if (!rdy.ready(v, a[v])) ++remaining;
  }

  SimResult result;
  std::vector<Event>& events = result.schedule.events;
  double t = 0.0;
  while (remaining > 0) {
    std::vector<Task> tasks = enum_tasks(g, rdy, a, begun);
    while (auto task = choose_task(tasks, resources, strategy_, &features_)) {
      events.push_back({*task, t, EventType::kBeg});
      begun.insert(*task);
      resources.acquire(*task);
      pending.push({t + duration(g, *task, cluster_, seed), seq++, *task});
      tasks.erase(std::find(tasks.begin(), tasks.end(), *task));
    }
    if (pending.empty()) {
      std::ostringstream msg;
      msg << "deadlock at t=" << t << " ms; unfinished:";
      for (VertexId v = 0; v < n; ++v) {
        if (!rdy.ready(v, a[v])) {
          msg << " " << v << "@" << a[v] << " (missing inputs:";
          for (VertexId p : g.preds(v)) {
            if (!rdy.ready(p, a[v])) msg << " " << p;
          }
          msg << ")";
        }
      }
      throw DeadlockError(msg.str());
    }
    // Every completion sharing the earliest end time is processed before
    // re-enumerating.
    t = pending.top().end;
    while (!pending.empty() && pending.top().end == t) {
      const Task done = pending.top().task;
      pending.pop();
      events.push_back({done, t, EventType::kEnd});
      resources.release(done);
      const DeviceId where = done.target();
      if (!rdy.ready(done.vertex, where)) {
        rdy.mark(done.vertex, where);
        if (a[done.vertex] == where) --remaining;
      }
    }
  }
  result.makespan_ms = t;
  result.schedule.makespan_ms = t;
  return result;
}

SimResult exec_time(const DataflowGraph& graph, const Assignment& a, const ClusterSpec& cluster,
                    Strategy strategy, std::uint64_t seed) {
  return Simulator(graph, cluster, strategy).run(a, seed);
}

std::vector<std::string> verify_schedule(const DataflowGraph& graph, const Assignment& a,
                                         const ClusterSpec& cluster, const Schedule& schedule) {
  std::vector<std::string> out;
  const int n = graph.num_vertices();
  const int devices = cluster.device_count;
  ReadyMatrix rdy = ReadyMatrix::initial(graph, devices);
  BegunSet begun(n, devices);
  ResourceState resources(cluster);
  std::map<Task, double> running;
  double max_end = 0.0;

  auto check_conserving = [&](double now) {
    for (const Task& t : enum_tasks(graph, rdy, a, begun)) {
      if (resources.has_free_slot(t)) {
        std::ostringstream msg;
        msg << "work conservation: " << to_string(t) << " startable at t=" << now << " but not started";
        out.push_back(msg.str());
      }
    }
  };

  const auto& events = schedule.events;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    const Task& t = e.task;
    if (i > 0 && e.time_ms < events[i - 1].time_ms) {
      out.push_back("event " + std::to_string(i) + " goes back in time");
    }
    if (e.type == EventType::kBeg) {
      if (begun.contains(t)) out.push_back("task " + to_string(t) + " begun twice");
      if (t.kind == TaskKind::kExec) {
        if (t.device != a[t.vertex]) out.push_back(to_string(t) + " runs off its assigned device");
        for (VertexId p : graph.preds(t.vertex)) {
          if (!rdy.ready(p, t.device)) {
            out.push_back(to_string(t) + " began before input " + std::to_string(p) + " was ready");
          }
        }
      } else {
        if (t.src == t.dst) out.push_back(to_string(t) + " is a self transfer");
        if (t.src != a[t.vertex] || !rdy.ready(t.vertex, t.src)) {
          out.push_back(to_string(t) + " began from a device without the result");
        }
      }
      if (!resources.has_free_slot(t)) out.push_back("resource overflow starting " + to_string(t));
      begun.insert(t);
      resources.acquire(t);
      running[t] = e.time_ms;
    } else {
      auto it = running.find(t);
      if (it == running.end()) {
        out.push_back("end of " + to_string(t) + " without a matching beg");
      } else {
        if (e.time_ms < it->second) out.push_back(to_string(t) + " ends before it begins");
        running.erase(it);
        resources.release(t);
      }
      if (rdy.ready(t.vertex, t.target())) {
        out.push_back(to_string(t) + " re-materializes an existing result");
      }
      rdy.mark(t.vertex, t.target());
      max_end = std::max(max_end, e.time_ms);
    }
    const bool time_advances = i + 1 == events.size() || events[i + 1].time_ms > e.time_ms;
    if (time_advances) check_conserving(e.time_ms);
  }
  if (events.empty()) check_conserving(0.0);

  if (!running.empty()) out.push_back(std::to_string(running.size()) + " task(s) never end");
  for (VertexId v = 0; v < n; ++v) {
    if (!rdy.ready(v, a[v])) out.push_back("vertex " + std::to_string(v) + " never completes");
  }
  if (schedule.makespan_ms != max_end) {
    out.push_back("makespan " + std::to_string(schedule.makespan_ms) + " differs from last end " +
                  std::to_string(max_end));
  }
  return out;
}

json schedule_to_json(const Schedule& schedule) {
  json events = json::array();
  for (const Event& e : schedule.events) {
    json task = {{"kind", e.task.kind == TaskKind::kExec ? "exec" : "transfer"}, {"vertex", e.task.vertex}};
    auto opt = [](DeviceId d) { return d < 0 ? json(nullptr) : json(d); };
    task["src"] = opt(e.task.src);
    task["dst"] = opt(e.task.dst);
    task["device"] = opt(e.task.device);
    events.push_back({{"task", task}, {"time_ms", e.time_ms}, {"type", e.type == EventType::kBeg ? "beg" : "end"}});
  }
  return {{"makespan_ms", schedule.makespan_ms}, {"events", events}};
}

Schedule schedule_from_json(const json& doc) {
  Schedule s;
  try {
    s.makespan_ms = doc.at("makespan_ms").get<double>();
    for (const json& e : doc.at("events")) {
      const json& jt = e.at("task");
      Task t;
      t.kind = jt.at("kind").get<std::string>() == "exec" ? TaskKind::kExec : TaskKind::kTransfer;
      t.vertex = jt.at("vertex").get<VertexId>();
      auto opt = [&jt](const char* key) { return jt.at(key).is_null() ? -1 : jt.at(key).get<DeviceId>(); };
      t.device = opt("device");
      t.src = opt("src");
      t.dst = opt("dst");
      s.events.push_back({t, e.at("time_ms").get<double>(),
                          e.at("type").get<std::string>() == "beg" ? EventType::kBeg : EventType::kEnd});
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad schedule document: ") + e.what());
  }
  return s;
}

}  // namespace wcplace
