// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Timeline export: Chrome trace-event JSON (complete events, microsecond
// timestamps) and flat CSV summaries.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "optishard/metrics.hpp"
#include "optishard/simulate.hpp"

namespace optishard {

// One process per exported timeline; tid 0 carries compute, tid 1 comm.
inline std::string chrome_trace_json(const std::vector<SimEvent>& events,
                                     const std::string& process_name) {
  nlohmann::json root;
  root["displayTimeUnit"] = "ms";
  nlohmann::json& arr = root["traceEvents"] = nlohmann::json::array();
  nlohmann::json meta;
  meta["name"] = "process_name";
  meta["ph"] = "M";
  meta["pid"] = 0;
  meta["tid"] = 0;
  meta["args"]["name"] = process_name;
  arr.push_back(meta);
  for (const char* tname : {"compute", "comm"}) {
    nlohmann::json t;
    t["name"] = "thread_name";
    t["ph"] = "M";
    t["pid"] = 0;
    t["tid"] = tname == std::string("compute") ? 0 : 1;
    t["args"]["name"] = tname;
    arr.push_back(t);
  }
  for (const SimEvent& e : events) {
    nlohmann::json j;
    j["name"] = e.name;
    j["cat"] = e.cat;
    j["ph"] = "X";
    j["pid"] = 0;
    j["tid"] = e.tid;
    j["ts"] = e.start_s * 1e6;
    j["dur"] = e.dur_s * 1e6;
    if (e.bytes > 0.0) j["args"]["bytes"] = e.bytes;
    arr.push_back(j);
  }
  return root.dump(2) + "\n";
}

inline std::string dp_summary_csv_header() {
  return "strategy,fwd_bwd_s,optimizer_compute_s,optimizer_comm_s,"
         "optimizer_s,iteration_s,grad_bytes,param_gather_bytes,"
         "optimizer_bytes\n";
}

inline std::string dp_summary_csv_row(const DpSimResult& r) {
  std::string out = to_string(r.strategy);
  for (double v : {r.fwd_bwd_s, r.optimizer_compute_s, r.optimizer_comm_s,
                   r.optimizer_s, r.iteration_s, r.grad_bytes,
                   r.param_gather_bytes, r.optimizer_bytes}) {
    out += ',';
    out += detail::fmt_double(v);
  }
  out += '\n';
  return out;
}

inline std::string tp_summary_csv_header() {
  return "mode,groups,time_s,comm_bytes,total_compute_cost\n";
}

inline std::string tp_summary_csv_row(const std::string& mode,
                                      const TpSimResult& r) {
  std::string out = mode;
  out += ',' + std::to_string(r.groups);
  out += ',' + detail::fmt_double(r.time_s);
  out += ',' + detail::fmt_double(r.comm_bytes);
  out += ',' + std::to_string(r.total_compute_cost);
  out += '\n';
  return out;
}

}  // namespace optishard
