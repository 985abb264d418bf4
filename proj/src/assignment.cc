// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/assignment.h"

namespace wcplace {

using nlohmann::json;

void check_assignment(const DataflowGraph& graph, const Assignment& a, int device_count) {
  if (a.size() != graph.num_vertices()) {
    throw AssignmentError("assignment covers " + std::to_string(a.size()) + " vertices, graph has " +
                          std::to_string(graph.num_vertices()));
  }
  for (VertexId v = 0; v < a.size(); ++v) {
    if (a[v] < 0 || a[v] >= device_count) {
      throw AssignmentError("vertex " + std::to_string(v) + " mapped to device " + std::to_string(a[v]) +
                            " outside [0, " + std::to_string(device_count) + ")");
    }
  }
}

json assignment_to_json(const Assignment& a, std::optional<double> makespan_ms) {
  json doc = {{"engine", a.engine}, {"assignment", a.device_of}};
  doc["makespan_ms"] = makespan_ms ? json(*makespan_ms) : json(nullptr);
  return doc;
}

Assignment assignment_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("assignment") || !doc["assignment"].is_array()) {
    throw AssignmentError("assignment document needs an \"assignment\" array");
  }
  Assignment a;
  try {
    a.device_of = doc["assignment"].get<std::vector<DeviceId>>();
  } catch (const json::exception& e) {
    throw AssignmentError(std::string("bad assignment array: ") + e.what());
  }
  a.engine = doc.value("engine", std::string("file"));
  return a;
}

}  // namespace wcplace
