// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#include "wcplace/report.h"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace wcplace {

using nlohmann::json;

namespace {

double union_length(std::vector<Interval> spans) {
  std::sort(spans.begin(), spans.end(), [](const Interval& a, const Interval& b) { return a.begin_ms < b.begin_ms; });
  double total = 0.0, lo = 0.0, hi = -1.0;
  for (const Interval& s : spans) {
    if (s.begin_ms > hi) {
      if (hi > lo) total += hi - lo;
      lo = s.begin_ms;
      hi = s.end_ms;
    } else {
      hi = std::max(hi, s.end_ms);
    }
  }
  if (hi > lo) total += hi - lo;
  return total;
}

json intervals_to_json(const std::vector<Interval>& spans) {
  json out = json::array();
  for (const Interval& s : spans) out.push_back({{"vertex", s.vertex}, {"begin_ms", s.begin_ms}, {"end_ms", s.end_ms}});
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

UtilizationReport utilization_report(const Schedule& schedule, const ClusterSpec& cluster) {
  UtilizationReport r;
  r.makespan_ms = schedule.makespan_ms;
  r.device_execs.resize(cluster.device_count);
  std::map<Task, double> open;
  for (const Event& e : schedule.events) {
    if (e.type == EventType::kBeg) {
      open[e.task] = e.time_ms;
      continue;
    }
    auto it = open.find(e.task);
    if (it == open.end()) throw std::invalid_argument("end of " + to_string(e.task) + " without a beg");
    const Interval span{it->second, e.time_ms, e.task.vertex};
    open.erase(it);
    if (e.task.kind == TaskKind::kExec) {
      r.device_execs.at(e.task.device).push_back(span);
    } else {
      r.link_transfers[{e.task.src, e.task.dst}].push_back(span);
    }
  }
  for (const auto& spans : r.device_execs) {
    r.device_busy_fraction.push_back(r.makespan_ms > 0 ? union_length(spans) / r.makespan_ms : 0.0);
  }
  return r;
}

json report_to_json(const UtilizationReport& r) {
  json devices = json::array();
  for (std::size_t d = 0; d < r.device_execs.size(); ++d) {
    devices.push_back({{"device", d}, {"busy_fraction", r.device_busy_fraction[d]},
                       {"execs", intervals_to_json(r.device_execs[d])}});
  }
  json links = json::array();
  for (const auto& [link, spans] : r.link_transfers) {
    links.push_back({{"src", link.first}, {"dst", link.second}, {"transfers", intervals_to_json(spans)}});
  }
  return {{"makespan_ms", r.makespan_ms}, {"devices", devices}, {"links", links}};
}

std::string gantt_svg(const UtilizationReport& r) {
  constexpr double kLabelWidth = 90, kPlotWidth = 800, kRowHeight = 24, kTop = 10;
  struct Row {
    std::string label;
    const std::vector<Interval>* spans;
    const char* color;
  };
  std::vector<Row> rows;
  for (std::size_t d = 0; d < r.device_execs.size(); ++d) {
    rows.push_back({"dev " + std::to_string(d), &r.device_execs[d], "#4c78a8"});
  }
  for (const auto& [link, spans] : r.link_transfers) {
    rows.push_back({"link " + std::to_string(link.first) + "->" + std::to_string(link.second), &spans, "#f58518"});
  }
  const double scale = r.makespan_ms > 0 ? kPlotWidth / r.makespan_ms : 0.0;
  const double height = kTop * 2 + kRowHeight * static_cast<double>(rows.size()) + 20;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kLabelWidth + kPlotWidth + 10)
      << "\" height=\"" << fmt(height) << "\" font-family=\"monospace\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double y = kTop + kRowHeight * static_cast<double>(i);
    svg << "<text x=\"2\" y=\"" << fmt(y + 15) << "\">" << rows[i].label << "</text>\n";
    for (const Interval& s : *rows[i].spans) {
      svg << "<rect x=\"" << fmt(kLabelWidth + s.begin_ms * scale) << "\" y=\"" << fmt(y + 2) << "\" width=\""
          << fmt(std::max(0.5, (s.end_ms - s.begin_ms) * scale)) << "\" height=\"" << fmt(kRowHeight - 4)
          << "\" fill=\"" << rows[i].color << "\" stroke=\"white\"><title>v" << s.vertex << " "
          << fmt(s.begin_ms) << "-" << fmt(s.end_ms) << " ms</title></rect>\n";
    }
  }
  const double axis_y = kTop + kRowHeight * static_cast<double>(rows.size()) + 14;
  svg << "<text x=\"" << fmt(kLabelWidth) << "\" y=\"" << fmt(axis_y) << "\">0 ms</text>\n";
  svg << "<text x=\"" << fmt(kLabelWidth + kPlotWidth - 80) << "\" y=\"" << fmt(axis_y) << "\">"
      << fmt(r.makespan_ms) << " ms</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace wcplace
