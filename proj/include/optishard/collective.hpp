// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat latency + bandwidth network model with ring-style collective
// traffic accounting (per-rank wire bytes).

#pragma once

#include <string>

#include "optishard/common.hpp"

namespace optishard {

enum class Collective {
  kReduceScatter,
  kAllGather,
  kAllReduce,
  kAllToAll,
  kBroadcast
};

inline const char* to_string(Collective c) {
  switch (c) {
    case Collective::kReduceScatter: return "reduce_scatter";
    case Collective::kAllGather: return "all_gather";
    case Collective::kAllReduce: return "all_reduce";
    case Collective::kAllToAll: return "all_to_all";
    default: return "broadcast";
  }
}

enum class LinkClass { kIntra, kInter };

struct NetModel {
  double latency_s = 10e-6;
  double intra_bw_bps = 300e9;  // bytes/s inside a node (tensor-parallel)
  double inter_bw_bps = 60e9;   // bytes/s across nodes (data-parallel)
  double compute_throughput = 1e12;  // planning-cost units per second
};

inline double link_bandwidth(const NetModel& net, LinkClass link) {
  return link == LinkClass::kIntra ? net.intra_bw_bps : net.inter_bw_bps;
}

// Per-rank wire traffic for a collective moving `volume_bytes` of payload:
// one payload pass for reduce-scatter / all-gather / all-to-all, two for
// all-reduce, and the full payload for broadcast.
inline double collective_traffic_bytes(double volume_bytes, Collective prim,
                                       int ranks) {
  if (ranks < 1) throw UnsupportedError("collective needs ranks >= 1");
  const double frac =
      static_cast<double>(ranks - 1) / static_cast<double>(ranks);
  switch (prim) {
    case Collective::kAllReduce: return 2.0 * volume_bytes * frac;
    case Collective::kBroadcast: return volume_bytes;
    default: return volume_bytes * frac;
  }
}

inline double collective_time_s(double volume_bytes, Collective prim,
                                int ranks, const NetModel& net,
                                LinkClass link = LinkClass::kInter) {
  const double traffic = collective_traffic_bytes(volume_bytes, prim, ranks);
  return net.latency_s + traffic / link_bandwidth(net, link);
}

// Ring reduce-scatter / all-gather over unequal per-rank slices is gated by
// the largest slice on every hop.
inline double variable_collective_time_s(double max_slice_bytes, int ranks,
                                         const NetModel& net,
                                         LinkClass link = LinkClass::kInter) {
  if (ranks < 1) throw UnsupportedError("collective needs ranks >= 1");
  return net.latency_s + static_cast<double>(ranks - 1) * max_slice_bytes /
                             link_bandwidth(net, link);
}

}  // namespace optishard
