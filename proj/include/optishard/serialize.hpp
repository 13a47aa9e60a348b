// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Structured-text plan files. Every format starts with a versioned header
// line and round-trips exactly.

#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "optishard/common.hpp"
#include "optishard/cost.hpp"
#include "optishard/dp_partition.hpp"
#include "optishard/tp_schedule.hpp"

namespace optishard {

inline constexpr const char* kDpPlanHeader = "optishard-dp-plan v1";
inline constexpr const char* kTpPlanHeader = "optishard-tp-plan v1";

namespace detail {

inline std::string fmt_alpha(double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", a);
  return buf;
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // next non-empty line; throws with the 1-based line number on exhaustion
  std::istringstream expect_line(const std::string& what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty()) return std::istringstream(line);
    }
    throw FormatError("unexpected end of file, expected " + what);
  }

  bool at_end() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty())
        throw FormatError("trailing content at line " +
                          std::to_string(line_no_));
    }
    return true;
  }

  int line_no() const { return line_no_; }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

template <typename T>
inline T expect_token(std::istringstream& in, const std::string& what) {
  T v{};
  if (!(in >> v)) throw FormatError("malformed field, expected " + what);
  return v;
}

inline void expect_literal(std::istringstream& in, const std::string& lit) {
  std::string tok;
  if (!(in >> tok) || tok != lit)
    throw FormatError("expected literal '" + lit + "', got '" + tok + "'");
}

}  // namespace detail

inline std::string serialize_dp_plan(const DpPartitionPlan& plan) {
  std::string out = std::string(kDpPlanHeader) + "\n";
  out += "ranks " + std::to_string(plan.ranks) + "\n";
  out += "method " + std::string(to_string(plan.method)) + "\n";
  out += "cost " + std::string(to_string(plan.cost_kind)) + "\n";
  out += "alpha ";
  out += plan.alpha ? detail::fmt_alpha(*plan.alpha) : std::string("none");
  out += "\n";
  out += "atomic " + std::to_string(plan.atomic ? 1 : 0) + "\n";
  out += "buckets " + std::to_string(plan.cut_vectors.size()) + "\n";
  for (std::size_t i = 0; i < plan.cut_vectors.size(); ++i) {
    out += "bucket " + std::to_string(i) + " cuts";
    for (std::int64_t c : plan.cut_vectors[i]) out += " " + std::to_string(c);
    out += "\n";
  }
  out += "loads";
  for (Cost l : plan.rank_loads) out += " " + std::to_string(l);
  out += "\n";
  return out;
}

inline DpPartitionPlan parse_dp_plan(const std::string& text) {
  detail::LineReader reader(text);
  {
    auto line = reader.expect_line("header");
    std::string a, b;
    line >> a >> b;
    if (a + " " + b != kDpPlanHeader)
      throw FormatError("bad header, expected '" + std::string(kDpPlanHeader) +
                        "'");
  }
  DpPartitionPlan plan;
  {
    auto line = reader.expect_line("ranks");
    detail::expect_literal(line, "ranks");
    plan.ranks = detail::expect_token<int>(line, "rank count");
    if (plan.ranks < 1) throw FormatError("ranks must be >= 1");
  }
  {
    auto line = reader.expect_line("method");
    detail::expect_literal(line, "method");
    plan.method = parse_plan_method(
        detail::expect_token<std::string>(line, "method name"));
  }
  {
    auto line = reader.expect_line("cost");
    detail::expect_literal(line, "cost");
    plan.cost_kind =
        parse_cost_kind(detail::expect_token<std::string>(line, "cost kind"));
  }
  {
    auto line = reader.expect_line("alpha");
    detail::expect_literal(line, "alpha");
    const std::string v = detail::expect_token<std::string>(line, "alpha");
    if (v != "none") plan.alpha = std::stod(v);
  }
  {
    auto line = reader.expect_line("atomic");
    detail::expect_literal(line, "atomic");
    plan.atomic = detail::expect_token<int>(line, "atomic flag") != 0;
  }
  std::size_t buckets = 0;
  {
    auto line = reader.expect_line("buckets");
    detail::expect_literal(line, "buckets");
    buckets = detail::expect_token<std::size_t>(line, "bucket count");
  }
  for (std::size_t i = 0; i < buckets; ++i) {
    auto line = reader.expect_line("bucket cuts");
    detail::expect_literal(line, "bucket");
    const auto idx = detail::expect_token<std::size_t>(line, "bucket index");
    if (idx != i) throw FormatError("bucket indices must be dense");
    detail::expect_literal(line, "cuts");
    std::vector<std::int64_t> cuts;
    std::int64_t c;
    while (line >> c) cuts.push_back(c);
    if (cuts.size() != static_cast<std::size_t>(plan.ranks) + 1)
      throw FormatError("bucket " + std::to_string(i) +
                        ": expected ranks+1 cut offsets");
    plan.cut_vectors.push_back(std::move(cuts));
  }
  {
    auto line = reader.expect_line("loads");
    detail::expect_literal(line, "loads");
    Cost l;
    while (line >> l) plan.rank_loads.push_back(l);
    if (plan.rank_loads.size() != static_cast<std::size_t>(plan.ranks))
      throw FormatError("expected one load per rank");
  }
  reader.at_end();
  detail::fill_rank_sizes(plan);
  return plan;
}

inline std::string serialize_tp_plan(const MicroGroupPlan& plan) {
  std::string out = std::string(kTpPlanHeader) + "\n";
  out += "ranks " + std::to_string(plan.ranks) + "\n";
  out += "cost " + std::string(to_string(plan.cost_kind)) + "\n";
  out += "cmax " + std::to_string(plan.c_max) + "\n";
  out += "groups " + std::to_string(plan.groups.size()) + "\n";
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    out += "group " + std::to_string(g) + " lmax " +
           std::to_string(plan.groups[g].l_max) + "\n";
    for (int r = 0; r < plan.ranks; ++r) {
      out += "rank " + std::to_string(r) + " load " +
             std::to_string(
                 plan.groups[g].rank_loads[static_cast<std::size_t>(r)]) +
             " ids";
      for (int id : plan.groups[g].rank_params[static_cast<std::size_t>(r)])
        out += " " + std::to_string(id);
      out += "\n";
    }
  }
  return out;
}

inline MicroGroupPlan parse_tp_plan(const std::string& text) {
  detail::LineReader reader(text);
  {
    auto line = reader.expect_line("header");
    std::string a, b;
    line >> a >> b;
    if (a + " " + b != kTpPlanHeader)
      throw FormatError("bad header, expected '" + std::string(kTpPlanHeader) +
                        "'");
  }
  MicroGroupPlan plan;
  {
    auto line = reader.expect_line("ranks");
    detail::expect_literal(line, "ranks");
    plan.ranks = detail::expect_token<int>(line, "rank count");
    if (plan.ranks < 1) throw FormatError("ranks must be >= 1");
  }
  {
    auto line = reader.expect_line("cost");
    detail::expect_literal(line, "cost");
    plan.cost_kind =
        parse_cost_kind(detail::expect_token<std::string>(line, "cost kind"));
  }
  {
    auto line = reader.expect_line("cmax");
    detail::expect_literal(line, "cmax");
    plan.c_max = detail::expect_token<Cost>(line, "capacity");
  }
  std::size_t groups = 0;
  {
    auto line = reader.expect_line("groups");
    detail::expect_literal(line, "groups");
    groups = detail::expect_token<std::size_t>(line, "group count");
  }
  for (std::size_t g = 0; g < groups; ++g) {
    MicroGroup group;
    {
      auto line = reader.expect_line("group");
      detail::expect_literal(line, "group");
      const auto idx = detail::expect_token<std::size_t>(line, "group index");
      if (idx != g) throw FormatError("group indices must be dense");
      detail::expect_literal(line, "lmax");
      group.l_max = detail::expect_token<Cost>(line, "l_max");
    }
    for (int r = 0; r < plan.ranks; ++r) {
      auto line = reader.expect_line("rank row");
      detail::expect_literal(line, "rank");
      const int rr = detail::expect_token<int>(line, "rank index");
      if (rr != r) throw FormatError("rank rows must be dense");
      detail::expect_literal(line, "load");
      group.rank_loads.push_back(detail::expect_token<Cost>(line, "load"));
      detail::expect_literal(line, "ids");
      std::vector<int> ids;
      int id;
      while (line >> id) ids.push_back(id);
      for (int i : ids) group.param_ids.push_back(i);
      group.rank_params.push_back(std::move(ids));
    }
    plan.groups.push_back(std::move(group));
  }
  reader.at_end();
  return plan;
}

}  // namespace optishard
