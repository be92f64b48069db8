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

#include "vpcorch/json_codec.hpp"
#include "vpcorch/port.hpp"

#include <string>
#include <vector>

namespace vpc {

struct ProcessEndpointConfig {
  std::string deployment_id;
  Micros control_period{1'000};
  std::vector<NodeId> targets;  // every compute node; idle ones ignore samples
};

// Deterministic stand-in for the plant's sensors. Values depend only on the
// sample counter, so every replica sees the same inputs.
inline std::map<std::string, double> sensor_sample(std::uint64_t seq) {
  const double level = 50.0 + static_cast<double>((seq * 7919) % 1000) / 100.0 - 5.0;
  const double pressure = 2.0 + static_cast<double>(seq % 64) / 32.0;
  return {{"level", level}, {"pressure", pressure}};
}

// The ICPS: fans a process sample out to all compute nodes each control
// period and applies (epoch, seq) fencing to incoming control data.
class ProcessEndpoint {
 public:
  explicit ProcessEndpoint(ProcessEndpointConfig cfg) : cfg_(std::move(cfg)) {}

  void on_start(Port& port) { port.set_timer(cfg_.control_period, 0); }

  void on_timer(Port& port, std::uint64_t) {
    ++seq_;
    ProcessData pd{cfg_.deployment_id, seq_, sensor_sample(seq_), port.local_clock()};
    port.record("sample", {{"input_seq", static_cast<std::int64_t>(seq_)}, {"ts", pd.timestamp}});
    const ProcessDataMsg msg{pd};
    for (auto t : cfg_.targets) port.send(t, msg);
    port.set_timer(cfg_.control_period, 0);
  }

  void on_message(Port& port, NodeId src, const Message& m) {
    const auto* cd = std::get_if<ControlDataMsg>(&m);
    if (cd == nullptr || cd->data.deployment_id != cfg_.deployment_id) return;
    const auto& d = cd->data;
    const bool ok = fence_.offer(d.epoch, d.seq);
    port.record(ok ? "accept" : "reject", {{"epoch", static_cast<std::int64_t>(d.epoch.value)},
                                           {"seq", static_cast<std::int64_t>(d.seq)},
                                           {"input_seq", static_cast<std::int64_t>(d.input_seq)},
                                           {"from", static_cast<std::int64_t>(src.value)}});
    if (ok) {
      ++accepted_;
      last_outputs_ = d.outputs;
    } else {
      ++rejected_;
    }
  }

  void reset() {
    seq_ = 0;
    fence_ = ActuatorFence{};
    accepted_ = rejected_ = 0;
    last_outputs_.clear();
  }

  std::string state_json() const {
    json j{{"role", "icps"}, {"samples", seq_}, {"accepted", accepted_}, {"rejected", rejected_}};
    if (fence_.last()) {
      j["fence_epoch"] = fence_.last()->first.value;
      j["fence_seq"] = fence_.last()->second;
    }
    return j.dump();
  }

  const ActuatorFence& fence() const { return fence_; }
  std::uint64_t samples() const { return seq_; }

 private:
  ProcessEndpointConfig cfg_;
  std::uint64_t seq_{0};
  ActuatorFence fence_;
  std::uint64_t accepted_{0};
  std::uint64_t rejected_{0};
  std::map<std::string, double> last_outputs_;
};

}  // namespace vpc
