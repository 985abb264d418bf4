// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/graph_json.h"

#include <fstream>

namespace wcplace {

using nlohmann::json;

namespace {

std::string summarize(const std::vector<Violation>& violations) {
  std::string out = "invalid graph:";
  for (const Violation& v : violations) {
    out += " [";
    out += violation_kind_name(v.kind);
    out += "] ";
    out += v.message;
    out += ";";
  }
  return out;
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError(path + key, "missing field");
  return obj.at(key);
}

std::int64_t as_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) throw SchemaError(path, "expected an integer");
  return value.get<std::int64_t>();
}

std::vector<VertexId> as_id_list(const json& value, const std::string& path) {
  if (!value.is_array()) throw SchemaError(path, "expected an array of vertex ids");
  std::vector<VertexId> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(static_cast<VertexId>(as_int(value[i], path + "[" + std::to_string(i) + "]")));
  }
  return out;
}

}  // namespace

InvalidGraphError::InvalidGraphError(std::vector<Violation> violations)
    : GraphError(summarize(violations)), violations_(std::move(violations)) {}

json graph_to_json(const DataflowGraph& graph) {
  json vertices = json::array();
  for (const Vertex& v : graph.vertices()) {
    vertices.push_back({{"id", v.id},
                        {"op_kind", op_kind_name(v.op_kind)},
                        {"flops", v.flops},
                        {"output_bytes", v.output_bytes},
                        {"label", v.label}});
  }
  json edges = json::array();
  for (const Edge& e : graph.edges()) edges.push_back({e.src, e.dst});
  json metas = json::array();
  for (const MetaOp& m : graph.meta_ops()) {
    metas.push_back({{"id", m.id}, {"shard_ops", m.shard_ops}, {"reduce_ops", m.reduce_ops}});
  }
  return {{"vertices", vertices}, {"edges", edges}, {"meta_ops", metas}};
}

DataflowGraph graph_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("", "document must be an object");
  const json& jv = require(doc, "vertices", "");
  const json& je = require(doc, "edges", "");
  if (!jv.is_array()) throw SchemaError("vertices", "expected an array");
  if (!je.is_array()) throw SchemaError("edges", "expected an array");

  std::vector<Vertex> vertices;
  for (std::size_t i = 0; i < jv.size(); ++i) {
    const std::string path = "vertices[" + std::to_string(i) + "].";
    const json& item = jv[i];
    if (!item.is_object()) throw SchemaError("vertices[" + std::to_string(i) + "]", "expected an object");
    Vertex v;
    v.id = static_cast<VertexId>(as_int(require(item, "id", path), path + "id"));
    const json& kind = require(item, "op_kind", path);
    if (!kind.is_string()) throw SchemaError(path + "op_kind", "expected a string");
    auto parsed = parse_op_kind(kind.get<std::string>());
    if (!parsed) throw SchemaError(path + "op_kind", "unknown op kind \"" + kind.get<std::string>() + "\"");
    v.op_kind = *parsed;
    v.flops = as_int(require(item, "flops", path), path + "flops");
    v.output_bytes = as_int(require(item, "output_bytes", path), path + "output_bytes");
    if (item.contains("label")) {
      if (!item["label"].is_string()) throw SchemaError(path + "label", "expected a string");
      v.label = item["label"].get<std::string>();
    }
    vertices.push_back(std::move(v));
  }

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < je.size(); ++i) {
    const std::string path = "edges[" + std::to_string(i) + "]";
    if (!je[i].is_array() || je[i].size() != 2) throw SchemaError(path, "expected [src, dst]");
    edges.push_back({static_cast<VertexId>(as_int(je[i][0], path + "[0]")),
                     static_cast<VertexId>(as_int(je[i][1], path + "[1]"))});
  }

  std::vector<MetaOp> metas;
  if (doc.contains("meta_ops")) {
    const json& jm = doc["meta_ops"];
    if (!jm.is_array()) throw SchemaError("meta_ops", "expected an array");
    for (std::size_t i = 0; i < jm.size(); ++i) {
      const std::string path = "meta_ops[" + std::to_string(i) + "].";
      MetaOp m;
      m.id = static_cast<int>(as_int(require(jm[i], "id", path), path + "id"));
      m.shard_ops = as_id_list(require(jm[i], "shard_ops", path), path + "shard_ops");
      m.reduce_ops = as_id_list(require(jm[i], "reduce_ops", path), path + "reduce_ops");
      metas.push_back(std::move(m));
    }
  }

  DataflowGraph graph(std::move(vertices), std::move(edges), std::move(metas));
  if (auto violations = validate(graph); !violations.empty()) {
    throw InvalidGraphError(std::move(violations));
  }
  return graph;
}

DataflowGraph load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("parse error: ") + e.what());
  }
  return graph_from_json(doc);
}

void save_json(const DataflowGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw GraphError("cannot write " + path.string());
  out << graph_to_json(graph).dump(1) << "\n";
}

}  // namespace wcplace
