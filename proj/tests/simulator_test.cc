// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "wcplace/builders.h"
#include "wcplace/fixtures.h"
#include "wcplace/heuristics.h"
#include "wcplace/report.h"
#include "wcplace/simulator.h"

namespace wcplace {
namespace {

Vertex input(VertexId id, std::int64_t bytes) { return {id, OpKind::kInput, 0, bytes, "in"}; }
Vertex op(VertexId id, std::int64_t flops, std::int64_t bytes) { return {id, OpKind::kOther, flops, bytes, "op"}; }

Assignment assign(std::vector<DeviceId> d) { return {std::move(d), "test"}; }

TEST(EnumTasks, InputNeverExecutes) {
  const DataflowGraph g({input(0, 10), op(1, 100, 10)}, {{0, 1}});
  const auto rdy = ReadyMatrix::initial(g, 2);
  EXPECT_EQ(enum_tasks(g, rdy, assign({0, 0}), Schedule{}, 2), (std::vector<Task>{Task::exec(1, 0)}));
}

TEST(EnumTasks, ExecutedProducerYieldsTransfer) {
  const DataflowGraph g({op(0, 100, 10), op(1, 100, 10)}, {{0, 1}});
  // Vertex 0 is an entry here but we mark it executed on d0 only, the state
  // the scheduler would reach for a non-input producer.
  ReadyMatrix rdy(2, 2);
  rdy.mark(0, 0);
  Schedule s;
  s.events = {{Task::exec(0, 0), 0, EventType::kBeg}, {Task::exec(0, 0), 1, EventType::kEnd}};
  EXPECT_EQ(enum_tasks(g, rdy, assign({0, 1}), s, 2), (std::vector<Task>{Task::transfer(0, 0, 1)}));
}

TEST(EnumTasks, BegunTaskExcluded) {
  const DataflowGraph g({input(0, 10), op(1, 100, 10), op(2, 100, 10)}, {{0, 1}, {0, 2}});
  const auto rdy = ReadyMatrix::initial(g, 1);
  Schedule s;
  s.events = {{Task::exec(1, 0), 0, EventType::kBeg}};
  EXPECT_EQ(enum_tasks(g, rdy, assign({0, 0, 0}), s, 1), (std::vector<Task>{Task::exec(2, 0)}));
}

TEST(EnumTasks, TransfersPrecedeExecsInOrder) {
  // 0 -> {1, 2} with 1 on d0 and 2 on d1; after 1 and 0's successors...
  const DataflowGraph g({input(0, 10), op(1, 1, 10), op(2, 1, 10), op(3, 1, 10)}, {{0, 1}, {1, 2}, {1, 3}, {0, 3}});
  ReadyMatrix rdy = ReadyMatrix::initial(g, 3);
  rdy.mark(1, 0);
  Schedule s;
  s.events = {{Task::exec(1, 0), 0, EventType::kBeg}, {Task::exec(1, 0), 1, EventType::kEnd}};
  EXPECT_EQ(enum_tasks(g, rdy, assign({0, 0, 2, 1}), s, 3),
            (std::vector<Task>{Task::transfer(1, 0, 1), Task::transfer(1, 0, 2)}));
}

TEST(ChooseTask, EmptyAndSingle) {
  const ClusterSpec c = fixture_cluster(2);
  const ResourceState res(c);
  EXPECT_FALSE(choose_task({}, res, Strategy::kFifo, nullptr).has_value());
  EXPECT_EQ(choose_task({Task::exec(1, 0)}, res, Strategy::kFifo, nullptr), Task::exec(1, 0));
}

TEST(ChooseTask, BusySlotYieldsNothing) {
  const ClusterSpec c = fixture_cluster(2);
  ResourceState res(c);
  res.acquire(Task::exec(3, 0));
  EXPECT_FALSE(choose_task({Task::exec(1, 0)}, res, Strategy::kFifo, nullptr).has_value());
  EXPECT_EQ(choose_task({Task::exec(1, 0), Task::exec(2, 1)}, res, Strategy::kFifo, nullptr), Task::exec(2, 1));
}

TEST(ChooseTask, DepthFirstPrefersLargerTLevel) {
  // 1 and 2 both read the input; 2 feeds a heavy successor, so its t-level
  // is larger even though 1 comes first in order.
  const DataflowGraph g({input(0, 1), op(1, 5, 1), op(2, 1, 1), op(3, 50, 1)}, {{0, 1}, {0, 2}, {2, 3}});
  const auto f = static_features(g);
  ASSERT_GT(f.t_level(2), f.t_level(1));
  const ClusterSpec c = fixture_cluster(1);
  const ResourceState res(c);
  const std::vector<Task> tasks{Task::exec(1, 0), Task::exec(2, 0)};
  EXPECT_EQ(choose_task(tasks, res, Strategy::kDepthFirst, &f), Task::exec(2, 0));
  EXPECT_EQ(choose_task(tasks, res, Strategy::kFifo, &f), Task::exec(1, 0));
}

TEST(ChooseTask, StrategyNames) {
  EXPECT_EQ(parse_strategy("breadth_first"), Strategy::kBreadthFirst);
  EXPECT_EQ(strategy_name(Strategy::kDepthFirst), "depth_first");
  EXPECT_THROW(parse_strategy("lifo"), std::invalid_argument);
}

TEST(Duration, Arithmetic) {
  const DataflowGraph g({op(0, 1000, 400), op(1, 1, 1)}, {{0, 1}});
  ClusterSpec c = ClusterSpec::uniform(2, 100.0, 800.0);
  EXPECT_DOUBLE_EQ(duration(g, Task::exec(0, 1), c), 10.0);
  EXPECT_DOUBLE_EQ(duration(g, Task::transfer(0, 0, 1), c), 2.0);
}

TEST(Duration, JitterIsSeeded) {
  const DataflowGraph g({op(0, 1000, 400)}, {});
  ClusterSpec c = ClusterSpec::uniform(1, 100.0, 800.0);
  c.jitter = {0.1, 7};
  const double a = duration(g, Task::exec(0, 0), c, 3);
  EXPECT_EQ(a, duration(g, Task::exec(0, 0), c, 3));
  EXPECT_NE(a, 10.0);
  EXPECT_NE(a, duration(g, Task::exec(0, 0), c, 4));
  EXPECT_GT(a, 0.0);
}

TEST(ExecTime, SerialChain) {
  const DataflowGraph g({input(0, 8), op(1, 10000, 8), op(2, 20000, 8)}, {{0, 1}, {1, 2}});
  const auto r = exec_time(g, assign({0, 0, 0}), fixture_cluster(2));
  EXPECT_DOUBLE_EQ(r.makespan_ms, 30.0);
}

TEST(ExecTime, PerfectParallelism) {
  const DataflowGraph g({op(0, 10000, 8), op(1, 10000, 8)}, {});
  // With no predecessors both are entries; give them an input so they run.
  const DataflowGraph h({input(0, 8), op(1, 10000, 8), op(2, 10000, 8)}, {{0, 1}, {0, 2}});
  EXPECT_DOUBLE_EQ(exec_time(h, assign({0, 0, 1}), fixture_cluster(2)).makespan_ms, 10.0);
  EXPECT_DOUBLE_EQ(exec_time(h, assign({0, 0, 0}), fixture_cluster(2)).makespan_ms, 20.0);
  EXPECT_DOUBLE_EQ(exec_time(g, assign({0, 1}), fixture_cluster(2)).makespan_ms, 0.0);
}

TEST(ExecTime, SixVertexFixtureHandValues) {
  const DataflowGraph g = six_vertex_fixture();
  const ClusterSpec c = fixture_cluster(2);
  EXPECT_DOUBLE_EQ(exec_time(g, assign({0, 0, 0, 0, 0, 0}), c).makespan_ms, 24.0);
  // Heavy branch on d0, light on d1: 4+5 on d1 finish at 9, transfer of 3
  // costs 2 -> 11; 10+3 on d0 finish at 13; 5 runs 13..15.
  EXPECT_DOUBLE_EQ(exec_time(g, assign({0, 1, 0, 1, 0, 0}), c).makespan_ms, 15.0);
}

// Independent reference for integer durations: advance one millisecond at a
// time, retire every task ending now, then start tasks in enumeration order
// while slots allow.
double reference_makespan(const DataflowGraph& g, const Assignment& a, const ClusterSpec& c) {
  const int n = g.num_vertices();
  const int d = c.device_count;
  std::vector<std::vector<bool>> rdy(n, std::vector<bool>(d, false));
  for (VertexId v = 0; v < n; ++v) {
    if (g.is_entry(v)) rdy[v].assign(d, true);
  }
  std::set<std::tuple<int, int, int>> begun;  // (kind, vertex, device)
  struct Running {
    long end;
    Task task;
  };
  std::vector<Running> running;
  long t = 0;
  auto done = [&] {
    for (VertexId v = 0; v < n; ++v) {
      if (!rdy[v][a[v]]) return false;
    }
    return true;
  };
  while (!done()) {
    for (auto it = running.begin(); it != running.end();) {
      if (it->end == t) {
        rdy[it->task.vertex][it->task.target()] = true;
        it = running.erase(it);
      } else {
        ++it;
      }
    }
    bool started = true;
    while (started) {
      started = false;
      std::vector<Task> cand;
      for (VertexId v = 0; v < n; ++v) {
        for (VertexId s : g.succs(v)) {
          const DeviceId src = a[v], dst = a[s];
          if (g.is_entry(v) || src == dst || !rdy[v][src] || rdy[v][dst]) continue;
          if (begun.count({1, v, dst})) continue;
          Task tr = Task::transfer(v, src, dst);
          if (std::find(cand.begin(), cand.end(), tr) == cand.end()) cand.push_back(tr);
        }
      }
      std::sort(cand.begin(), cand.end(), [](const Task& x, const Task& y) {
        return std::tie(x.vertex, x.dst) < std::tie(y.vertex, y.dst);
      });
      for (VertexId v = 0; v < n; ++v) {
        if (g.is_entry(v) || begun.count({0, v, a[v]})) continue;
        bool ok = true;
        for (VertexId p : g.preds(v)) ok = ok && rdy[p][a[v]];
        if (ok) cand.push_back(Task::exec(v, a[v]));
      }
      for (const Task& task : cand) {
        int busy = 0;
        for (const auto& r : running) {
          if (r.task.kind != task.kind) continue;
          if (task.kind == TaskKind::kExec ? r.task.device == task.device
                                            : r.task.src == task.src && r.task.dst == task.dst) {
            ++busy;
          }
        }
        const int slots = task.kind == TaskKind::kExec ? c.exec_slots[task.device] : c.transfer_slots[task.src][task.dst];
        if (busy >= slots) continue;
        const double dur = task.kind == TaskKind::kExec ? c.exec_ms(g.vertex(task.vertex).flops, task.device)
                                                        : c.transfer_ms(g.vertex(task.vertex).output_bytes, task.src, task.dst);
        running.push_back({t + std::lround(dur), task});
        begun.insert({task.kind == TaskKind::kExec ? 0 : 1, task.vertex, task.target()});
        started = true;
        break;
      }
    }
    if (done()) break;
    EXPECT_FALSE(running.empty());
    if (running.empty()) return -1;
    long next = running.front().end;
    for (const auto& r : running) next = std::min(next, r.end);
    t = next;
  }
  return static_cast<double>(t);
}

DataflowGraph with_unit_costs(const DataflowGraph& g) {
  std::vector<Vertex> vs = g.vertices();
  for (Vertex& v : vs) {
    v.flops = v.op_kind == OpKind::kInput ? 0 : 1000;
    v.output_bytes = 250;
  }
  return DataflowGraph(vs, g.edges(), g.meta_ops());
}

TEST(ExecTime, ExplodedChainMatchesReference) {
  const DataflowGraph g = with_unit_costs(explode_matmul_chain({{8, 8}, {8, 8}, {8, 8}}, 2));
  const ClusterSpec c = fixture_cluster(2);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Assignment a = random_assign(g, 2, rng());
    const auto r = exec_time(g, a, c);
    EXPECT_DOUBLE_EQ(r.makespan_ms, reference_makespan(g, a, c)) << "trial " << trial;
  }
}

TEST(ExecTime, RandomDagsMatchReferenceWithExtraSlots) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const DataflowGraph g = with_unit_costs(random_dag(8, 0.35, seed));
    ClusterSpec c = fixture_cluster(3);
    c.exec_slots = {1, 2, 1};
    const Assignment a = random_assign(g, 3, seed + 100);
    EXPECT_DOUBLE_EQ(exec_time(g, a, c).makespan_ms, reference_makespan(g, a, c)) << seed;
  }
}

TEST(ExecTime, SchedulesPassReplay) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const DataflowGraph g = random_dag(8, 0.4, seed);
    ClusterSpec c = fixture_cluster(2);
    if (seed % 2) c.jitter = {0.2, seed};
    for (Strategy s : {Strategy::kFifo, Strategy::kDepthFirst, Strategy::kBreadthFirst}) {
      const Assignment a = random_assign(g, 2, seed);
      const auto r = exec_time(g, a, c, s, seed);
      const auto problems = verify_schedule(g, a, c, r.schedule);
      EXPECT_TRUE(problems.empty()) << seed << ": " << (problems.empty() ? "" : problems.front());
    }
  }
}

TEST(ExecTime, ReplayCatchesTampering) {
  const DataflowGraph g = six_vertex_fixture();
  const ClusterSpec c = fixture_cluster(2);
  const Assignment a = assign({0, 1, 0, 1, 0, 0});
  const auto r = exec_time(g, a, c);
  ASSERT_TRUE(verify_schedule(g, a, c, r.schedule).empty());

  // Vertex 5 becomes startable at 13 on an idle device; starting it at 14
  // leaves work undone while time advances.
  Schedule late = r.schedule;
  for (Event& e : late.events) {
    if (e.task == Task::exec(5, 0)) e.time_ms += 1.0;
  }
  late.makespan_ms += 1.0;
  EXPECT_FALSE(verify_schedule(g, a, c, late).empty());

  Schedule truncated = r.schedule;
  truncated.events.pop_back();
  EXPECT_FALSE(verify_schedule(g, a, c, truncated).empty());

  Schedule wrong_device = r.schedule;
  for (Event& e : wrong_device.events) {
    if (e.task.kind == TaskKind::kExec && e.task.vertex == 2) e.task.device = 1;
  }
  EXPECT_FALSE(verify_schedule(g, a, c, wrong_device).empty());
}

TEST(ExecTime, DeterministicForFixedSeed) {
  const DataflowGraph g = build_chainmm(8, 2);
  ClusterSpec c = ClusterSpec::uniform(4, 1e3, 1e2);
  c.jitter = {0.1, 5};
  const Assignment a = random_assign(g, 4, 3);
  EXPECT_EQ(exec_time(g, a, c, Strategy::kFifo, 9).schedule, exec_time(g, a, c, Strategy::kFifo, 9).schedule);
}

TEST(ExecTime, MakespanLowerBounds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const DataflowGraph g = random_dag(8, 0.4, seed);
    const ClusterSpec c = fixture_cluster(2);
    const Assignment a = random_assign(g, 2, seed);
    const double ms = exec_time(g, a, c).makespan_ms;
    // Longest compute-only path.
    std::vector<double> longest(g.num_vertices(), 0.0);
    for (VertexId v : topo_order(g)) {
      double best = 0;
      for (VertexId p : g.preds(v)) best = std::max(best, longest[p]);
      longest[v] = best + c.exec_ms(g.vertex(v).flops, a[v]);
    }
    EXPECT_GE(ms + 1e-9, *std::max_element(longest.begin(), longest.end()));
    std::vector<double> work(2, 0.0);
    for (VertexId v = 0; v < g.num_vertices(); ++v) work[a[v]] += c.exec_ms(g.vertex(v).flops, a[v]);
    EXPECT_GE(ms + 1e-9, std::max(work[0], work[1]));
  }
}

TEST(ExecTime, RejectsPartialAssignment) {
  EXPECT_THROW(exec_time(six_vertex_fixture(), assign({0, 0}), fixture_cluster(2)), AssignmentError);
}

TEST(ScheduleJson, RoundTrip) {
  const DataflowGraph g = six_vertex_fixture();
  const auto r = exec_time(g, assign({0, 1, 0, 1, 0, 0}), fixture_cluster(2));
  EXPECT_EQ(schedule_from_json(schedule_to_json(r.schedule)), r.schedule);
}

TEST(Utilization, SerialSingleDevice) {
  const DataflowGraph g = chain_fixture(4);
  const auto r = exec_time(g, single_device_assign(g), fixture_cluster(2));
  const auto u = utilization_report(r.schedule, fixture_cluster(2));
  EXPECT_DOUBLE_EQ(u.device_busy_fraction[0], 1.0);
  EXPECT_DOUBLE_EQ(u.device_busy_fraction[1], 0.0);
  EXPECT_TRUE(u.link_transfers.empty());
}

TEST(Utilization, PerfectlyParallel) {
  const DataflowGraph g({input(0, 8), op(1, 10000, 8), op(2, 10000, 8)}, {{0, 1}, {0, 2}});
  const auto r = exec_time(g, assign({0, 0, 1}), fixture_cluster(2));
  const auto u = utilization_report(r.schedule, fixture_cluster(2));
  EXPECT_DOUBLE_EQ(u.device_busy_fraction[0], 1.0);
  EXPECT_DOUBLE_EQ(u.device_busy_fraction[1], 1.0);
}

TEST(Utilization, ChainMmMatchesRawEvents) {
  const DataflowGraph g = build_chainmm(64, 2);
  const ClusterSpec c = ClusterSpec::uniform(4, 1e4, 1e3);
  const Assignment a = critical_path_assign(g, c, 5, 1);
  const auto r = exec_time(g, a, c);
  const auto u = utilization_report(r.schedule, c);
  // One exec slot per device, so exec intervals never overlap and the busy
  // fraction is the summed exec length over the makespan.
  std::vector<double> busy(4, 0.0);
  std::map<Task, double> begin;
  int transfers = 0;
  for (const Event& e : r.schedule.events) {
    if (e.type == EventType::kBeg) {
      begin[e.task] = e.time_ms;
    } else if (e.task.kind == TaskKind::kExec) {
      busy[e.task.device] += e.time_ms - begin[e.task];
    } else {
      ++transfers;
    }
  }
  int reported = 0;
  for (const auto& [link, spans] : u.link_transfers) reported += static_cast<int>(spans.size());
  EXPECT_EQ(reported, transfers);
  for (int d = 0; d < 4; ++d) EXPECT_NEAR(u.device_busy_fraction[d], busy[d] / r.makespan_ms, 1e-12);
  const std::string svg = gantt_svg(u);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

}  // namespace
}  // namespace wcplace
