// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WCPLACE_CLUSTER_H_
#define WCPLACE_CLUSTER_H_

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "wcplace/features.h"
#include "wcplace/graph.h"

namespace wcplace {

// Multiplicative lognormal noise on every task duration; sigma == 0 disables.
struct Jitter {
  double sigma = 0.0;
  std::uint64_t seed = 0;

  bool enabled() const { return sigma > 0.0; }
};

// Cost model of a multi-device server. Rates are FLOPs per millisecond and
// bandwidths bytes per millisecond; bandwidth[d][d] is never used since a
// result is never transferred to the device that holds it.
struct ClusterSpec {
  int device_count = 0;
  std::vector<double> rate;
  std::vector<std::vector<double>> bandwidth;
  std::vector<int> exec_slots;
  std::vector<std::vector<int>> transfer_slots;
  double comm_factor = kDefaultCommFactor;
  Jitter jitter;

  // Identical devices, all-to-all links, one exec slot per device and one
  // transfer slot per ordered device pair.
  static ClusterSpec uniform(int devices, double rate_flops_per_ms, double bandwidth_bytes_per_ms);

  // Throws std::invalid_argument describing the first broken invariant.
  void check() const;

  double transfer_ms(std::int64_t bytes, DeviceId src, DeviceId dst) const {
    return static_cast<double>(bytes) * comm_factor / bandwidth[src][dst];
  }
  double exec_ms(std::int64_t flops, DeviceId device) const {
    return static_cast<double>(flops) / rate[device];
  }
};

nlohmann::json cluster_to_json(const ClusterSpec& cluster);
// Accepts either the full form written by cluster_to_json or the short form
// {"devices", "rate", "bandwidth"} with optional "exec_slots",
// "transfer_slots", "comm_factor" and "jitter": {"sigma", "seed"}.
ClusterSpec cluster_from_json(const nlohmann::json& doc);

}  // namespace wcplace

#endif  // WCPLACE_CLUSTER_H_
