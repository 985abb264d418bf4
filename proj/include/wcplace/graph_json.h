// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0
//
// Graph JSON schema:
//   {"vertices": [{"id", "op_kind", "flops", "output_bytes", "label"}],
//    "edges": [[src, dst], ...],
//    "meta_ops": [{"id", "shard_ops": [...], "reduce_ops": [...]}]}
// "meta_ops" may be omitted for ingested graphs.

#ifndef WCPLACE_GRAPH_JSON_H_
#define WCPLACE_GRAPH_JSON_H_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "wcplace/graph.h"

namespace wcplace {

// Malformed document; what() names the offending field.
class SchemaError : public GraphError {
 public:
  SchemaError(std::string field, const std::string& detail)
      : GraphError("schema error at \"" + field + "\": " + detail), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Well-formed document describing an invalid graph.
class InvalidGraphError : public GraphError {
 public:
  explicit InvalidGraphError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

nlohmann::json graph_to_json(const DataflowGraph& graph);
// Throws SchemaError or InvalidGraphError.
DataflowGraph graph_from_json(const nlohmann::json& doc);

DataflowGraph load_json(const std::filesystem::path& path);
void save_json(const DataflowGraph& graph, const std::filesystem::path& path);

}  // namespace wcplace

#endif  // WCPLACE_GRAPH_JSON_H_
