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

#include "vpcorch/domain.hpp"

#include <json.hpp>

#include <charconv>
#include <optional>
#include <string>

namespace vpc {

using json = nlohmann::json;

inline std::optional<SemVer> parse_semver(std::string_view s) {
  SemVer v;
  std::uint32_t* parts[] = {&v.major, &v.minor, &v.patch};
  const char* p = s.data();
  const char* end = s.data() + s.size();
  for (int i = 0; i < 3; ++i) {
    auto [next, ec] = std::from_chars(p, end, *parts[i]);
    if (ec != std::errc{} || next == p) return std::nullopt;
    p = next;
    if (i < 2) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return v;
}

inline void to_json(json& j, const SemVer& v) { j = v.str(); }
inline void from_json(const json& j, SemVer& v) {
  auto parsed = parse_semver(j.get<std::string>());
  if (!parsed) throw json::type_error::create(302, "version must look like 1.2.3", &j);
  v = *parsed;
}

inline void to_json(json& j, const NodeRole& r) {
  j = json{{"kind", to_string(r.kind())}};
  if (auto rank = r.rank()) j["rank"] = *rank;
}

inline void to_json(json& j, const ExecutionMode& m) {
  if (m.is_cyclic()) {
    j = json{{"kind", "cyclic"}, {"period", m.period}};
  } else {
    j = json{{"kind", "acyclic"}};
  }
}
inline void from_json(const json& j, ExecutionMode& m) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "cyclic") {
    m = ExecutionMode::cyclic(j.at("period").get<Micros>());
  } else if (kind == "acyclic") {
    m = ExecutionMode::acyclic();
  } else {
    throw json::type_error::create(302, "mode kind must be cyclic or acyclic", &j);
  }
}

inline void to_json(json& j, const VpfDescriptor& d) {
  j = json{{"vpf_id", d.vpf_id},
           {"version", d.version},
           {"mode", d.mode},
           {"logic_name", d.logic_name},
           {"state_schema_id", d.state_schema_id},
           {"artifact_digest", to_hex(d.artifact_digest)}};
}
inline void from_json(const json& j, VpfDescriptor& d) {
  d.vpf_id = j.at("vpf_id").get<std::string>();
  d.version = j.at("version").get<SemVer>();
  d.mode = j.at("mode").get<ExecutionMode>();
  d.logic_name = j.at("logic_name").get<std::string>();
  d.state_schema_id = j.value("state_schema_id", d.logic_name + ".v1");
  d.artifact_digest = Digest{};
  if (j.contains("artifact_digest")) {
    auto dg = digest_from_hex(j["artifact_digest"].get<std::string>());
    if (!dg) throw json::type_error::create(302, "artifact_digest must be 64 hex digits", &j);
    d.artifact_digest = *dg;
  }
}

inline void to_json(json& j, const DeploymentSpec& s) {
  j = json{{"deployment_id", s.deployment_id},
           {"vpfs", s.vpfs},
           {"redundancy", s.redundancy},
           {"sync_period", s.sync_period},
           {"miss_threshold", s.miss_threshold},
           {"control_period", s.control_period},
           {"snapshot_every", s.snapshot_every}};
}
inline void from_json(const json& j, DeploymentSpec& s) {
  DeploymentSpec d;
  s.deployment_id = j.at("deployment_id").get<std::string>();
  s.vpfs = j.value("vpfs", std::vector<VpfDescriptor>{});
  s.redundancy = j.value("redundancy", d.redundancy);
  s.sync_period = j.value("sync_period", d.sync_period);
  s.miss_threshold = j.value("miss_threshold", d.miss_threshold);
  s.control_period = j.value("control_period", d.control_period);
  s.snapshot_every = j.value("snapshot_every", d.snapshot_every);
}

inline void to_json(json& j, const NodeDescriptor& d) {
  j = json{{"node_id", d.node_id.value},
           {"cpu_capacity", d.cpu_capacity},
           {"mem_capacity", d.mem_capacity},
           {"link_latency_estimate", d.link_latency_estimate},
           {"role", d.role},
           {"last_seen", d.last_seen},
           {"epoch", d.epoch.value}};
}

}  // namespace vpc
