// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WCPLACE_ASSIGNMENT_H_
#define WCPLACE_ASSIGNMENT_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wcplace/graph.h"

namespace wcplace {

// Total map vertex -> device, tagged with the engine that produced it.
struct Assignment {
  std::vector<DeviceId> device_of;
  std::string engine;

  DeviceId operator[](VertexId v) const { return device_of[v]; }
  int size() const { return static_cast<int>(device_of.size()); }

  friend bool operator==(const Assignment& a, const Assignment& b) { return a.device_of == b.device_of; }
};

class AssignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws AssignmentError unless `a` maps every vertex of `graph` to a device
// id in [0, device_count).
void check_assignment(const DataflowGraph& graph, const Assignment& a, int device_count);

// {"engine", "assignment": [device per vertex id], "makespan_ms"}
nlohmann::json assignment_to_json(const Assignment& a, std::optional<double> makespan_ms);
Assignment assignment_from_json(const nlohmann::json& doc);

}  // namespace wcplace

#endif  // WCPLACE_ASSIGNMENT_H_
