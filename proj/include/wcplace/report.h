// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WCPLACE_REPORT_H_
#define WCPLACE_REPORT_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wcplace/cluster.h"
#include "wcplace/simulator.h"

namespace wcplace {

struct Interval {
  double begin_ms = 0.0;
  double end_ms = 0.0;
  VertexId vertex = 0;
};

struct UtilizationReport {
  double makespan_ms = 0.0;
  // Fraction of [0, makespan] covered by at least one exec on the device.
  std::vector<double> device_busy_fraction;
  std::vector<std::vector<Interval>> device_execs;
  // Transfer intervals per (src, dst) link that carried anything.
  std::map<std::pair<DeviceId, DeviceId>, std::vector<Interval>> link_transfers;
};

UtilizationReport utilization_report(const Schedule& schedule, const ClusterSpec& cluster);

nlohmann::json report_to_json(const UtilizationReport& report);

// One row per device, then one per active link in (src, dst) order.
std::string gantt_svg(const UtilizationReport& report);

}  // namespace wcplace

#endif  // WCPLACE_REPORT_H_
