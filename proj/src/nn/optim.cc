// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/nn/optim.h"

#include <algorithm>
#include <cmath>

namespace wcplace::nn {

using nlohmann::json;

double LinearSchedule::value(int step) const {
  if (total <= 0) return end;
  const double frac = static_cast<double>(std::clamp(step, 0, total)) / static_cast<double>(total);
  return start * (1.0 - frac) + end * frac;
}

double Sgd::step(ParamStore& params) {
  const double lr = learning_rate();
  double ss = 0.0;
  for (Parameter* p : params.all()) {
    auto& v = p->value.values();
    const auto& g = p->grad.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double delta = lr * g[i];
      v[i] -= delta;
      ss += delta * delta;
    }
  }
  ++step_;
  return std::sqrt(ss);
}

json params_to_json(const ParamStore& params) {
  json table = json::object();
  for (const Parameter* p : params.all()) {
    table[p->name] = {{"shape", {p->value.rows(), p->value.cols()}}, {"values", p->value.values()}};
  }
  return {{"version", kCheckpointVersion}, {"params", table}};
}

ParamStore params_from_json(const json& doc) {
  ParamStore params;
  try {
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw std::invalid_argument("unsupported checkpoint version " + std::to_string(version));
    }
    // nlohmann objects iterate in key order, so parameter order is by name.
    for (const auto& [name, entry] : doc.at("params").items()) {
      const auto shape = entry.at("shape").get<std::vector<int>>();
      if (shape.size() != 2) throw std::invalid_argument("parameter \"" + name + "\" must be rank 2");
      params.add(name, Matrix(shape[0], shape[1], entry.at("values").get<std::vector<double>>()));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad checkpoint: ") + e.what());
  }
  return params;
}

}  // namespace wcplace::nn
