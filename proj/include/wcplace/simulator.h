// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// Event-driven simulation of a work-conserving dynamic scheduler. Given an
// assignment, the scheduler repeatedly starts every startable task at the
// current time and, when nothing more can start, advances to the earliest
// pending completion. Entry vertices are materialized on every device at
// t = 0 and are never executed or transferred.

#ifndef WCPLACE_SIMULATOR_H_
#define WCPLACE_SIMULATOR_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wcplace/assignment.h"
#include "wcplace/cluster.h"
#include "wcplace/features.h"
#include "wcplace/graph.h"

namespace wcplace {

enum class TaskKind { kExec, kTransfer };

struct Task {
  TaskKind kind = TaskKind::kExec;
  VertexId vertex = 0;
  DeviceId device = -1;  // exec only
  DeviceId src = -1;     // transfer only
  DeviceId dst = -1;     // transfer only

  static Task exec(VertexId v, DeviceId d) { return {TaskKind::kExec, v, d, -1, -1}; }
  static Task transfer(VertexId v, DeviceId src, DeviceId dst) {
    return {TaskKind::kTransfer, v, -1, src, dst};
  }
  // Device on which the task's result becomes ready.
  DeviceId target() const { return kind == TaskKind::kExec ? device : dst; }

  friend bool operator==(const Task&, const Task&) = default;
  friend auto operator<=>(const Task&, const Task&) = default;
};

std::string to_string(const Task& task);

enum class EventType { kBeg, kEnd };

struct Event {
  Task task;
  double time_ms = 0.0;
  EventType type = EventType::kBeg;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Schedule {
  std::vector<Event> events;
  double makespan_ms = 0.0;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

// rdy[v][d]: the result of v is materialized on device d. Monotone.
class ReadyMatrix {
 public:
  ReadyMatrix(int vertices, int devices) : devices_(devices), bits_(vertices * devices, false) {}
  // Entry vertices ready on every device, everything else not ready.
  static ReadyMatrix initial(const DataflowGraph& graph, int devices);

  bool ready(VertexId v, DeviceId d) const { return bits_[v * devices_ + d]; }
  void mark(VertexId v, DeviceId d) { bits_[v * devices_ + d] = true; }

 private:
  int devices_;
  std::vector<bool> bits_;
};

// Tasks present in a schedule (begun, possibly also ended).
class BegunSet {
 public:
  BegunSet(int vertices, int devices)
      : devices_(devices), exec_(vertices, false), transfer_(vertices * devices, false) {}
  static BegunSet from_schedule(const Schedule& s, int vertices, int devices);

  bool contains(const Task& t) const {
    return t.kind == TaskKind::kExec ? exec_[t.vertex] : transfer_[t.vertex * devices_ + t.dst];
  }
  void insert(const Task& t) {
    if (t.kind == TaskKind::kExec) {
      exec_[t.vertex] = true;
    } else {
      transfer_[t.vertex * devices_ + t.dst] = true;
    }
  }

 private:
  int devices_;
  std::vector<bool> exec_;
  std::vector<bool> transfer_;
};

// Exec and transfer slots currently occupied.
class ResourceState {
 public:
  explicit ResourceState(const ClusterSpec& cluster);
  // Occupancy implied by the tasks of `s` that have begun but not ended.
  static ResourceState from_schedule(const Schedule& s, const ClusterSpec& cluster);

  bool has_free_slot(const Task& t) const;
  void acquire(const Task& t);
  void release(const Task& t);
  int in_use(const Task& t) const;

 private:
  const ClusterSpec* cluster_;
  std::vector<int> exec_busy_;
  std::vector<std::vector<int>> transfer_busy_;
};

// Transfers first, ordered by (producer, destination device), then execs by
// vertex id.
std::vector<Task> enum_tasks(const DataflowGraph& graph, const ReadyMatrix& rdy, const Assignment& a,
                             const BegunSet& begun);
std::vector<Task> enum_tasks(const DataflowGraph& graph, const ReadyMatrix& rdy, const Assignment& a,
                             const Schedule& schedule, int devices);

enum class Strategy { kFifo, kDepthFirst, kBreadthFirst };

std::string_view strategy_name(Strategy s);
// Accepts "fifo", "depth_first", "breadth_first"; throws std::invalid_argument.
Strategy parse_strategy(std::string_view name);

// Picks among the tasks that have a free slot: fifo takes the first in
// order, depth_first the largest t-level of the task's vertex, breadth_first
// the smallest b-level (first in order on ties). Returns nullopt iff no task
// has a free slot. `features` is required for the two level-based strategies.
std::optional<Task> choose_task(const std::vector<Task>& tasks, const ResourceState& resources,
                                Strategy strategy, const StaticGraphFeatures* features);

// Deterministic duration plus optional lognormal jitter. The jitter factor is
// a pure function of (cluster jitter seed, run_seed, task).
double duration(const DataflowGraph& graph, const Task& task, const ClusterSpec& cluster,
                std::uint64_t run_seed = 0);

class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimResult {
  double makespan_ms = 0.0;
  Schedule schedule;
};

// Reusable simulator for one (graph, cluster, strategy); run() is const and
// may be called concurrently.
class Simulator {
 public:
  Simulator(const DataflowGraph& graph, ClusterSpec cluster, Strategy strategy = Strategy::kFifo);

  SimResult run(const Assignment& a, std::uint64_t seed = 0) const;
  double makespan(const Assignment& a, std::uint64_t seed = 0) const { return run(a, seed).makespan_ms; }

  const DataflowGraph& graph() const { return *graph_; }
  const ClusterSpec& cluster() const { return cluster_; }
  Strategy strategy() const { return strategy_; }
  const StaticGraphFeatures& features() const { return features_; }

 private:
  const DataflowGraph* graph_;
  ClusterSpec cluster_;
  Strategy strategy_;
  StaticGraphFeatures features_;
};

SimResult exec_time(const DataflowGraph& graph, const Assignment& a, const ClusterSpec& cluster,
                    Strategy strategy = Strategy::kFifo, std::uint64_t seed = 0);

// Replays `schedule` and reports every broken invariant: event ordering,
// beg/end pairing, resource feasibility, readiness of inputs at task start,
// work conservation at every point where time advances, completion, and the
// makespan.
std::vector<std::string> verify_schedule(const DataflowGraph& graph, const Assignment& a,
                                         const ClusterSpec& cluster, const Schedule& schedule);

nlohmann::json schedule_to_json(const Schedule& schedule);
Schedule schedule_from_json(const nlohmann::json& doc);

}  // namespace wcplace

#endif  // WCPLACE_SIMULATOR_H_
