// Copyright 2026 The vpcorch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "vpcorch/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace vpc {

enum class ConfigErrc {
  Io,
  Parse,
  Invalid,
};

using ConfigError = Error<ConfigErrc>;

struct Topology {
  ClusterSpec cluster;
  std::uint64_t seed{42};
};

struct SpecBundle {
  DeploymentSpec spec;
  std::vector<VpfArtifact> artifacts;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigErrc::Io, path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

inline json parse_json(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // The reported byte is one past the offending character.
    const std::size_t at = e.byte == 0 ? 0 : e.byte - 1;
    throw ConfigError(ConfigErrc::Parse, name + ":" + std::to_string(line_of(text, at)) + ": " + e.what());
  }
}

inline FrameProfile parse_profile(const std::string& s) {
  if (s == "compact") return FrameProfile::Compact;
  if (s == "routed") return FrameProfile::Routed;
  throw ConfigError(ConfigErrc::Invalid, "profile must be compact or routed, got '" + s + "'");
}

inline LinkSpec parse_link(const json& j, LinkSpec base = {}) {
  base.base_latency = j.value("base_latency", base.base_latency);
  base.jitter_max = j.value("jitter_max", base.jitter_max);
  base.drop_probability = j.value("drop_probability", base.drop_probability);
  if (base.base_latency < 0 || base.jitter_max < 0 || base.drop_probability < 0 || base.drop_probability > 1) {
    throw ConfigError(ConfigErrc::Invalid, "link latency must be non-negative and drop within [0, 1]");
  }
  return base;
}

}  // namespace detail

// Topology document:
//   {"seed": 42, "clock_sync_accuracy": 1, "discovery_period": 10000,
//    "link": {"base_latency": 100, "jitter_max": 50, "drop_probability": 0},
//    "irs": [{"id": 10, "cpu": 4000, "mem": 8192}],
//    "link_overrides": [{"from": 10, "to": 1, "base_latency": 200}],
//    "clock_offsets": {"10": -1},
//    "profiles": {"control": "routed", "data": "compact"}}
inline Topology topology_from_json(const json& j, const std::string& name = "topology") {
  Topology t;
  try {
    t.seed = j.value("seed", t.seed);
    auto& c = t.cluster;
    c.clock_sync_accuracy = j.value("clock_sync_accuracy", c.clock_sync_accuracy);
    c.discovery_period = j.value("discovery_period", c.discovery_period);
    c.release_delay = j.value("release_delay", c.release_delay);
    if (j.contains("link")) c.link = detail::parse_link(j["link"]);
    for (const auto& ir : j.at("irs")) {
      IrSpec s;
      s.id = NodeId{ir.at("id").get<std::uint32_t>()};
      s.cpu = ir.value("cpu", s.cpu);
      s.mem = ir.value("mem", s.mem);
      s.late = ir.value("late", false);
      if (s.id == kVpcmoId || s.id == kRegistryId || s.id == kIcpsId || s.id.value == 0) {
        throw ConfigError(ConfigErrc::Invalid, name + ": IR id " + std::to_string(s.id.value) + " is reserved");
      }
      for (const auto& other : c.irs) {
        if (other.id == s.id) throw ConfigError(ConfigErrc::Invalid, name + ": duplicate IR id");
      }
      c.irs.push_back(s);
    }
    if (c.irs.empty()) throw ConfigError(ConfigErrc::Invalid, name + ": at least one IR is required");
    for (const auto& o : j.value("link_overrides", json::array())) {
      const NodeId from{o.at("from").get<std::uint32_t>()};
      const NodeId to{o.at("to").get<std::uint32_t>()};
      c.link_overrides[{from, to}] = detail::parse_link(o, c.link);
    }
    const json offsets = j.value("clock_offsets", json::object());
    for (const auto& [k, v] : offsets.items()) {
      const Micros off = v.get<Micros>();
      if (off < -c.clock_sync_accuracy || off > c.clock_sync_accuracy) {
        throw ConfigError(ConfigErrc::Invalid, name + ": clock offset of node " + k + " exceeds the accuracy");
      }
      c.clock_offsets[NodeId{static_cast<std::uint32_t>(std::stoul(k))}] = off;
    }
    if (j.contains("profiles")) {
      c.profiles.control = detail::parse_profile(j["profiles"].value("control", "routed"));
      c.profiles.data = detail::parse_profile(j["profiles"].value("data", "compact"));
    }
  } catch (const json::exception& e) {
    throw ConfigError(ConfigErrc::Invalid, name + ": " + e.what());
  }
  return t;
}

// Spec document: DeploymentSpec fields verbatim; each VPF may carry the
// artifact it is published with under "artifact".
inline SpecBundle spec_from_json(const json& j, const std::string& name = "spec") {
  SpecBundle b;
  try {
    b.spec = j.get<DeploymentSpec>();
    for (const auto& v : j.value("vpfs", json::array())) {
      if (!v.contains("artifact")) continue;
      b.artifacts.push_back(VpfArtifact{v.get<VpfDescriptor>(), v["artifact"]});
    }
    b.spec.validate();
  } catch (const json::exception& e) {
    throw ConfigError(ConfigErrc::Invalid, name + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(ConfigErrc::Invalid, name + ": " + e.what());
  }
  return b;
}

inline Topology load_topology(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  return topology_from_json(detail::parse_json(text, path.string()), path.string());
}

inline SpecBundle load_spec(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  return spec_from_json(detail::parse_json(text, path.string()), path.string());
}

}  // namespace vpc
