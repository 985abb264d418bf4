// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/heuristics.h"

#include <algorithm>
#include <limits>
#include <string>

#include "wcplace/parallel.h"
#include "wcplace/seeding.h"

namespace wcplace {

VertexId pick_critical_vertex(const std::vector<VertexId>& candidates, const StaticGraphFeatures& features,
                              std::mt19937_64* rng) {
  if (candidates.empty()) throw std::invalid_argument("no candidate vertices");
  double best = -std::numeric_limits<double>::infinity();
  std::vector<VertexId> ties;
  for (VertexId v : candidates) {
    const double level = features.t_level(v);
    if (level > best) {
      best = level;
      ties.assign(1, v);
    } else if (level == best) {
      ties.push_back(v);
    }
  }
  if (rng == nullptr || ties.size() == 1) return ties.front();
  std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
  return ties[pick(*rng)];
}

Assignment critical_path_trial(const DataflowGraph& graph, const ClusterSpec& cluster,
                               const StaticGraphFeatures& features, std::mt19937_64* rng) {
  GreedyTimeline timeline(graph, cluster);
  CandidateSet candidates(graph);
  while (!candidates.empty()) {
    const VertexId v = pick_critical_vertex(candidates.ids(), features, rng);
    timeline.place(v, timeline.best_device(v));
    candidates.take(v);
  }
  return {timeline.devices(), "critical_path"};
}

CriticalPathResult critical_path_search(const DataflowGraph& graph, const ClusterSpec& cluster, int trials,
                                        std::uint64_t seed, Strategy strategy, int jobs) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const Simulator sim(graph, cluster, strategy);
  std::vector<Assignment> found(trials);
  CriticalPathResult result;
  result.trial_makespans_ms.resize(trials);
  parallel_for(trials, jobs, [&](int k) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    found[k] = critical_path_trial(graph, cluster, sim.features(), &rng);
    result.trial_makespans_ms[k] = sim.makespan(found[k]);
  });
  const auto best = std::min_element(result.trial_makespans_ms.begin(), result.trial_makespans_ms.end());
  const auto k = static_cast<std::size_t>(best - result.trial_makespans_ms.begin());
  result.best = std::move(found[k]);
  result.best_makespan_ms = *best;
  return result;
}

Assignment critical_path_assign(const DataflowGraph& graph, const ClusterSpec& cluster, int trials,
                                std::uint64_t seed, Strategy strategy, int jobs) {
  return critical_path_search(graph, cluster, trials, seed, strategy, jobs).best;
}

namespace {

// Summed transfer time of v's non-entry inputs if v ran on d.
double network_time(const DataflowGraph& graph, const ClusterSpec& cluster, const std::vector<DeviceId>& placed,
                    VertexId v, DeviceId d) {
  double total = 0.0;
  for (VertexId p : graph.preds(v)) {
    if (graph.is_entry(p)) continue;
    if (placed[p] < 0) {
      throw std::logic_error("input " + std::to_string(p) + " of vertex " + std::to_string(v) +
                             " is placed after it; meta-ops are out of order");
    }
    if (placed[p] != d) total += cluster.transfer_ms(graph.vertex(p).output_bytes, placed[p], d);
  }
  return total;
}

// Places `ops` on pairwise distinct devices, trying injective device tuples
// in lexicographic order and keeping the first minimum.
void place_group(const DataflowGraph& graph, const ClusterSpec& cluster, const std::vector<VertexId>& ops,
                 std::vector<DeviceId>& placed) {
  const int devices = cluster.device_count;
  const int k = static_cast<int>(ops.size());
  if (k == 0) return;
  std::vector<std::vector<double>> cost(k, std::vector<double>(devices));
  for (int i = 0; i < k; ++i) {
    for (DeviceId d = 0; d < devices; ++d) cost[i][d] = network_time(graph, cluster, placed, ops[i], d);
  }
  std::vector<DeviceId> tuple(k), best;
  std::vector<bool> used(devices, false);
  double best_cost = std::numeric_limits<double>::infinity();
  auto search = [&](auto&& self, int i, double partial) -> void {
    if (i == k) {
      if (partial < best_cost) {
        best_cost = partial;
        best = tuple;
      }
      return;
    }
    for (DeviceId d = 0; d < devices; ++d) {
      if (used[d]) continue;
      used[d] = true;
      tuple[i] = d;
      self(self, i + 1, partial + cost[i][d]);
      used[d] = false;
    }
  };
  search(search, 0, 0.0);
  for (int i = 0; i < k; ++i) placed[ops[i]] = best[i];
}

}  // namespace

Assignment enumerative_optimizer(const DataflowGraph& graph, const ClusterSpec& cluster) {
  const int n = graph.num_vertices();
  std::vector<DeviceId> placed(n, -1);
  for (VertexId v : graph.entries()) placed[v] = 0;

  std::vector<MetaOp> groups = graph.meta_ops();
  if (groups.empty()) {
    for (VertexId v : topo_order(graph)) {
      if (!graph.is_entry(v)) groups.push_back({static_cast<int>(groups.size()), {v}, {}});
    }
  } else {
    std::vector<bool> covered(n, false);
    for (const MetaOp& m : groups) {
      for (VertexId v : m.shard_ops) covered[v] = true;
      for (VertexId v : m.reduce_ops) covered[v] = true;
    }
    for (VertexId v = 0; v < n; ++v) {
      if (!covered[v] && !graph.is_entry(v)) {
        throw std::invalid_argument("vertex " + std::to_string(v) + " belongs to no meta-op");
      }
    }
  }
  for (const MetaOp& m : groups) {
    if (static_cast<int>(m.shard_ops.size()) > cluster.device_count ||
        static_cast<int>(m.reduce_ops.size()) > cluster.device_count) {
      throw std::invalid_argument("meta-op " + std::to_string(m.id) + " has more ops than the " +
                                  std::to_string(cluster.device_count) + " devices");
    }
    place_group(graph, cluster, m.shard_ops, placed);
    place_group(graph, cluster, m.reduce_ops, placed);
  }
  for (VertexId v = 0; v < n; ++v) {
    if (placed[v] < 0) placed[v] = 0;  // input vertex listed inside a meta-op
  }
  return {placed, "enumopt"};
}

Assignment random_assign(const DataflowGraph& graph, int devices, std::uint64_t seed) {
  if (devices < 1) throw std::invalid_argument("devices must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<DeviceId> pick(0, devices - 1);
  Assignment a{std::vector<DeviceId>(graph.num_vertices()), "random"};
  for (auto& d : a.device_of) d = pick(rng);
  return a;
}

Assignment single_device_assign(const DataflowGraph& graph) {
  return {std::vector<DeviceId>(graph.num_vertices(), 0), "single"};
}

OracleResult brute_force_optimal(const DataflowGraph& graph, const ClusterSpec& cluster, Strategy strategy,
                                 std::uint64_t cap, int jobs) {
  const int n = graph.num_vertices();
  const auto devices = static_cast<std::uint64_t>(cluster.device_count);
  std::uint64_t space = 1;
  for (int i = 0; i < n; ++i) {
    if (space > cap / devices) {
      throw SearchCapError(std::to_string(devices) + "^" + std::to_string(n) + " assignments exceed the cap of " +
                           std::to_string(cap));
    }
    space *= devices;
  }
  std::vector<VertexId> free_vertices;
  for (VertexId v = 0; v < n; ++v) {
    if (!graph.is_entry(v)) free_vertices.push_back(v);
  }
  std::uint64_t combos = 1;
  for (std::size_t i = 0; i < free_vertices.size(); ++i) combos *= devices;

  const Simulator sim(graph, cluster, strategy);
  // Combination index c encodes devices with the lowest-id free vertex as the
  // most significant digit, so index order is lexicographic order.
  auto decode = [&](std::uint64_t c) {
    std::vector<DeviceId> a(n, 0);
    for (auto it = free_vertices.rbegin(); it != free_vertices.rend(); ++it) {
      a[*it] = static_cast<DeviceId>(c % devices);
      c /= devices;
    }
    return a;
  };
  const int chunks = static_cast<int>(std::min<std::uint64_t>(combos, 64));
  std::vector<std::uint64_t> chunk_best(chunks);
  std::vector<double> chunk_ms(chunks, std::numeric_limits<double>::infinity());
  parallel_for(chunks, jobs, [&](int c) {
    const std::uint64_t lo = combos * c / chunks;
    const std::uint64_t hi = combos * (c + 1) / chunks;
    for (std::uint64_t i = lo; i < hi; ++i) {
      const double ms = sim.makespan({decode(i), "oracle"});
      if (ms < chunk_ms[c]) {
        chunk_ms[c] = ms;
        chunk_best[c] = i;
      }
    }
  });
  std::size_t winner = 0;
  for (int c = 1; c < chunks; ++c) {
    if (chunk_ms[c] < chunk_ms[winner]) winner = c;
  }
  return {{decode(chunk_best[winner]), "oracle"}, chunk_ms[winner]};
}

}  // namespace wcplace
