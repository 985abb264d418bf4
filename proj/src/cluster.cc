// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/cluster.h"

#include <stdexcept>
#include <string>

namespace wcplace {

using nlohmann::json;

ClusterSpec ClusterSpec::uniform(int devices, double rate_flops_per_ms, double bandwidth_bytes_per_ms) {
  ClusterSpec c;
  c.device_count = devices;
  c.rate.assign(devices, rate_flops_per_ms);
  c.bandwidth.assign(devices, std::vector<double>(devices, bandwidth_bytes_per_ms));
  c.exec_slots.assign(devices, 1);
  c.transfer_slots.assign(devices, std::vector<int>(devices, 1));
  c.check();
  return c;
}

void ClusterSpec::check() const {
  const auto n = static_cast<std::size_t>(device_count);
  if (device_count < 1) throw std::invalid_argument("cluster needs at least one device");
  if (rate.size() != n || bandwidth.size() != n || exec_slots.size() != n || transfer_slots.size() != n) {
    throw std::invalid_argument("cluster tables must have one entry per device");
  }
  for (std::size_t d = 0; d < n; ++d) {
    if (!(rate[d] > 0)) throw std::invalid_argument("rate of device " + std::to_string(d) + " must be positive");
    if (exec_slots[d] < 1) throw std::invalid_argument("exec slots of device " + std::to_string(d) + " must be >= 1");
    if (bandwidth[d].size() != n || transfer_slots[d].size() != n) {
      throw std::invalid_argument("link tables must be device_count x device_count");
    }
    for (std::size_t e = 0; e < n; ++e) {
      if (d == e) continue;
      if (!(bandwidth[d][e] > 0)) {
        throw std::invalid_argument("bandwidth " + std::to_string(d) + "->" + std::to_string(e) + " must be positive");
      }
      if (transfer_slots[d][e] < 1) {
        throw std::invalid_argument("transfer slots " + std::to_string(d) + "->" + std::to_string(e) + " must be >= 1");
      }
    }
  }
  if (!(comm_factor > 0)) throw std::invalid_argument("comm_factor must be positive");
  if (jitter.sigma < 0) throw std::invalid_argument("jitter sigma must be non-negative");
}

json cluster_to_json(const ClusterSpec& c) {
  return {{"device_count", c.device_count},
          {"rate", c.rate},
          {"bandwidth", c.bandwidth},
          {"exec_slots", c.exec_slots},
          {"transfer_slots", c.transfer_slots},
          {"comm_factor", c.comm_factor},
          {"jitter", {{"sigma", c.jitter.sigma}, {"seed", c.jitter.seed}}}};
}

ClusterSpec cluster_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("cluster document must be an object");
  ClusterSpec c;
  try {
    if (doc.contains("device_count")) {
      c.device_count = doc.at("device_count").get<int>();
    } else {
      c.device_count = doc.at("devices").get<int>();
    }
    const int n = c.device_count;
    if (n < 1) throw std::invalid_argument("cluster needs at least one device");
    const json& rate = doc.at("rate");
    if (rate.is_array()) {
      c.rate = rate.get<std::vector<double>>();
    } else {
      c.rate.assign(n, rate.get<double>());
    }
    const json& bw = doc.at("bandwidth");
    if (bw.is_array()) {
      c.bandwidth = bw.get<std::vector<std::vector<double>>>();
    } else {
      c.bandwidth.assign(n, std::vector<double>(n, bw.get<double>()));
    }
    c.exec_slots.assign(n, 1);
    if (doc.contains("exec_slots")) {
      const json& s = doc["exec_slots"];
      if (s.is_array()) {
        c.exec_slots = s.get<std::vector<int>>();
      } else {
        c.exec_slots.assign(n, s.get<int>());
      }
    }
    c.transfer_slots.assign(n, std::vector<int>(n, 1));
    if (doc.contains("transfer_slots")) {
      const json& s = doc["transfer_slots"];
      if (s.is_array()) {
        c.transfer_slots = s.get<std::vector<std::vector<int>>>();
      } else {
        c.transfer_slots.assign(n, std::vector<int>(n, s.get<int>()));
      }
    }
    if (doc.contains("comm_factor")) c.comm_factor = doc["comm_factor"].get<double>();
    if (doc.contains("jitter")) {
      c.jitter.sigma = doc["jitter"].value("sigma", 0.0);
      c.jitter.seed = doc["jitter"].value("seed", std::uint64_t{0});
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad cluster document: ") + e.what());
  }
  c.check();
  return c;
}

}  // namespace wcplace
