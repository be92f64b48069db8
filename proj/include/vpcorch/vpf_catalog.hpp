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

#include <bit>
#include <map>
#include <string>
#include <utility>

namespace vpc {

enum class VpfErrc {
  UnknownLogic,
  MalformedState,
  MalformedArtifact,
  Fault,
};

using VpfError = Error<VpfErrc>;

// A VPF ready to run: its descriptor plus the parameters carried in the
// artifact blob. The artifact is a small JSON document, e.g.
//   {"input": "level", "output": "valve", "kp": 1.2, "ki": 0.1, "kd": 0.0}
struct VpfProgram {
  VpfDescriptor descriptor;
  std::string input;
  std::string output;
  std::map<std::string, double> params;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

struct VpfStep {
  Bytes state;
  std::map<std::string, double> outputs;
};

inline bool is_known_logic(const std::string& name) {
  return name == "pid" || name == "threshold" || name == "passthrough" || name == "fault_injector";
}

inline VpfProgram load_program(const VpfDescriptor& desc, const Bytes& artifact) {
  if (!is_known_logic(desc.logic_name)) {
    throw VpfError(VpfErrc::UnknownLogic, "unknown VPF logic '" + desc.logic_name + "'");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(artifact.begin(), artifact.end());
  } catch (const nlohmann::json::exception& e) {
    throw VpfError(VpfErrc::MalformedArtifact, desc.vpf_id + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("input") || !doc.contains("output") ||
      !doc["input"].is_string() || !doc["output"].is_string()) {
    throw VpfError(VpfErrc::MalformedArtifact, desc.vpf_id + ": artifact needs input and output");
  }
  VpfProgram p;
  p.descriptor = desc;
  p.input = doc["input"].get<std::string>();
  p.output = doc["output"].get<std::string>();
  for (const auto& [k, v] : doc.items()) {
    if (v.is_number()) p.params[k] = v.get<double>();
  }
  return p;
}

namespace detail {

inline void put_f64(Bytes& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

inline double get_f64(const Bytes& in, std::size_t at) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < 8; ++i) bits = bits << 8 | in[at + i];
  return std::bit_cast<double>(bits);
}

// Sample period in seconds used by the PID difference equation.
inline double pid_dt(const VpfProgram& p) {
  if (auto it = p.params.find("dt"); it != p.params.end()) return it->second;
  if (p.descriptor.mode.is_cyclic()) return static_cast<double>(p.descriptor.mode.period) / 1e6;
  throw VpfError(VpfErrc::MalformedArtifact, p.descriptor.vpf_id + ": acyclic PID needs dt");
}

}  // namespace detail

inline Bytes initial_state(const VpfProgram& p) {
  Bytes s;
  if (p.descriptor.logic_name == "pid") {
    detail::put_f64(s, 0.0);  // running sum of errors
    detail::put_f64(s, 0.0);  // previous error
  }
  return s;
}

// One deterministic step. PID state is (sum of errors, previous error) and
// the output is Kp*e + Ki*sum*dt + Kd*(e - e_prev)/dt with e = setpoint - x.
inline VpfStep execute_vpf(const VpfProgram& p, const Bytes& state, const ProcessData& input) {
  const auto& logic = p.descriptor.logic_name;
  auto in = input.inputs.find(p.input);
  if (in == input.inputs.end()) {
    throw VpfError(VpfErrc::Fault, p.descriptor.vpf_id + ": missing input '" + p.input + "'");
  }
  const double x = in->second;
  VpfStep step;

  if (logic == "pid") {
    if (state.size() != 16) {
      throw VpfError(VpfErrc::MalformedState, p.descriptor.vpf_id + ": PID state must be 16 bytes");
    }
    const double kp = p.param("kp", 0.0);
    const double ki = p.param("ki", 0.0);
    const double kd = p.param("kd", 0.0);
    const double dt = detail::pid_dt(p);
    const double e = p.param("setpoint", 0.0) - x;
    const double sum = detail::get_f64(state, 0) + e;
    const double prev = detail::get_f64(state, 8);
    const double u = kp * e + ki * sum * dt + kd * (e - prev) / dt;
    detail::put_f64(step.state, sum);
    detail::put_f64(step.state, e);
    step.outputs[p.output] = u;
  } else if (logic == "threshold") {
    if (!state.empty()) throw VpfError(VpfErrc::MalformedState, p.descriptor.vpf_id + ": relay is stateless");
    step.outputs[p.output] = x > p.param("limit", 0.0) ? 1.0 : 0.0;
  } else if (logic == "passthrough") {
    if (!state.empty()) {
      throw VpfError(VpfErrc::MalformedState, p.descriptor.vpf_id + ": passthrough is stateless");
    }
    step.outputs[p.output] = x;
  } else if (logic == "fault_injector") {
    if (x > p.param("trip", 0.0)) {
      throw VpfError(VpfErrc::Fault, p.descriptor.vpf_id + ": tripped at input " + std::to_string(x));
    }
    step.outputs[p.output] = x;
  } else {
    throw VpfError(VpfErrc::UnknownLogic, "unknown VPF logic '" + logic + "'");
  }
  return step;
}

}  // namespace vpc
