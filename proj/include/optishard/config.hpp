// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Key/value config files with [section] headers. Two sections are
// understood: [model] for the synthetic architecture and packing knobs,
// [net] for the network model. Unknown keys are errors so typos surface.

#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "optishard/collective.hpp"
#include "optishard/common.hpp"
#include "optishard/workload.hpp"

namespace optishard {

struct RunFileConfig {
  ModelConfig model;
  NetModel net;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::int64_t parse_int64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const std::int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v +
                      "'");
  }
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v +
                      "'");
  }
}

}  // namespace detail

// Byte sizes with optional binary (KiB/MiB/GiB) or decimal (KB/MB/GB)
// suffixes; bare numbers are bytes.
inline std::uint64_t parse_size_bytes(const std::string& text) {
  const std::string s = detail::trim(text);
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("bad size '" + text + "'");
  }
  std::string suffix = detail::trim(s.substr(pos));
  double mult = 1.0;
  if (suffix == "" || suffix == "B") mult = 1.0;
  else if (suffix == "KiB") mult = 1024.0;
  else if (suffix == "MiB") mult = 1024.0 * 1024.0;
  else if (suffix == "GiB") mult = 1024.0 * 1024.0 * 1024.0;
  else if (suffix == "KB") mult = 1e3;
  else if (suffix == "MB") mult = 1e6;
  else if (suffix == "GB") mult = 1e9;
  else throw ConfigError("bad size suffix '" + suffix + "' in '" + text + "'");
  if (value < 0.0) throw ConfigError("size must be non-negative: '" + text + "'");
  return static_cast<std::uint64_t>(value * mult + 0.5);
}

inline RunFileConfig parse_config(const std::string& text) {
  RunFileConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) +
                          ": unterminated section header");
      section = t.substr(1, t.size() - 2);
      if (section != "model" && section != "net")
        throw ConfigError("line " + std::to_string(line_no) +
                          ": unknown section '" + section + "'");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (section == "model") {
      ModelConfig& m = cfg.model;
      if (key == "name") m.name = value;
      else if (key == "num_layers")
        m.num_layers = static_cast<int>(detail::parse_int64(value, key));
      else if (key == "hidden_size") m.hidden_size = detail::parse_int64(value, key);
      else if (key == "ffn_size") m.ffn_size = detail::parse_int64(value, key);
      else if (key == "num_heads")
        m.num_heads = static_cast<int>(detail::parse_int64(value, key));
      else if (key == "vocab_size") m.vocab_size = detail::parse_int64(value, key);
      else if (key == "dtype_bytes")
        m.dtype_bytes = static_cast<int>(detail::parse_int64(value, key));
      else if (key == "bucket_capacity")
        m.bucket_capacity = detail::parse_int64(value, key);
      else if (key == "dp")
        m.dp_degree = static_cast<int>(detail::parse_int64(value, key));
      else if (key == "tp")
        m.tp_degree = static_cast<int>(detail::parse_int64(value, key));
      else
        throw ConfigError("line " + std::to_string(line_no) +
                          ": unknown [model] key '" + key + "'");
    } else if (section == "net") {
      NetModel& n = cfg.net;
      if (key == "latency") n.latency_s = detail::parse_double(value, key);
      else if (key == "intra_bw") n.intra_bw_bps = detail::parse_double(value, key);
      else if (key == "inter_bw") n.inter_bw_bps = detail::parse_double(value, key);
      else if (key == "throughput")
        n.compute_throughput = detail::parse_double(value, key);
      else
        throw ConfigError("line " + std::to_string(line_no) +
                          ": unknown [net] key '" + key + "'");
    } else {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": key outside any section");
    }
  }
  if (cfg.net.latency_s < 0 || cfg.net.intra_bw_bps <= 0 ||
      cfg.net.inter_bw_bps <= 0 || cfg.net.compute_throughput <= 0)
    throw ConfigError("net model values must be positive");
  return cfg;
}

inline RunFileConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace optishard
