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

#include "vpcorch/digest.hpp"
#include "vpcorch/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace vpc {

enum class DomainErrc {
  IllegalTransition,
  InvalidSpec,
};

using DomainError = Error<DomainErrc>;

enum class RoleKind : std::uint8_t {
  IdleResource = 0,
  InactiveVpc = 1,
  ActiveVpc = 2,
  Disabled = 3,
};

inline const char* to_string(RoleKind k) {
  switch (k) {
    case RoleKind::IdleResource: return "idle";
    case RoleKind::InactiveVpc: return "inactive";
    case RoleKind::ActiveVpc: return "active";
    case RoleKind::Disabled: return "disabled";
  }
  return "?";
}

// Role of a node. The rank exists iff the node is an inactive VPC; rank 0 is
// the predefined successor of the active one.
class NodeRole {
 public:
  constexpr NodeRole() = default;

  static constexpr NodeRole idle() { return NodeRole(RoleKind::IdleResource, 0); }
  static constexpr NodeRole inactive(std::uint32_t rank) {
    return NodeRole(RoleKind::InactiveVpc, rank);
  }
  static constexpr NodeRole active() { return NodeRole(RoleKind::ActiveVpc, 0); }
  static constexpr NodeRole disabled() { return NodeRole(RoleKind::Disabled, 0); }

  constexpr RoleKind kind() const { return kind_; }
  constexpr std::optional<std::uint32_t> rank() const {
    if (kind_ != RoleKind::InactiveVpc) return std::nullopt;
    return rank_;
  }
  constexpr bool is(RoleKind k) const { return kind_ == k; }
  constexpr bool promoted() const {
    return kind_ == RoleKind::InactiveVpc || kind_ == RoleKind::ActiveVpc;
  }

  constexpr bool operator==(const NodeRole&) const = default;

  std::string str() const {
    if (kind_ == RoleKind::InactiveVpc) return "inactive(" + std::to_string(rank_) + ")";
    return to_string(kind_);
  }

 private:
  constexpr NodeRole(RoleKind k, std::uint32_t rank) : kind_(k), rank_(rank) {}

  RoleKind kind_{RoleKind::IdleResource};
  std::uint32_t rank_{0};
};

struct PromoteInactive {
  std::uint32_t rank{0};
};
struct PromoteActive {
  Epoch epoch;
};
struct Demote {};
struct Disable {};
struct Release {};

using RoleEvent = std::variant<PromoteInactive, PromoteActive, Demote, Disable, Release>;

inline std::string describe(const RoleEvent& ev) {
  return std::visit(
      [](const auto& e) -> std::string {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, PromoteInactive>) {
          return "PromoteInactive(" + std::to_string(e.rank) + ")";
        } else if constexpr (std::is_same_v<T, PromoteActive>) {
          return "PromoteActive(" + std::to_string(e.epoch.value) + ")";
        } else if constexpr (std::is_same_v<T, Demote>) {
          return "Demote";
        } else if constexpr (std::is_same_v<T, Disable>) {
          return "Disable";
        } else {
          return "Release";
        }
      },
      ev);
}

// Role state machine. Disabled is terminal: the only way out is a node
// restart, which resets the role to IdleResource outside this table.
inline std::optional<NodeRole> try_transition(const NodeRole& role, const RoleEvent& event) {
  const RoleKind k = role.kind();
  return std::visit(
      [k](const auto& e) -> std::optional<NodeRole> {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, PromoteInactive>) {
          if (k == RoleKind::IdleResource) return NodeRole::inactive(e.rank);
        } else if constexpr (std::is_same_v<T, PromoteActive>) {
          if (k == RoleKind::IdleResource || k == RoleKind::InactiveVpc) return NodeRole::active();
        } else if constexpr (std::is_same_v<T, Demote> || std::is_same_v<T, Release>) {
          if (k == RoleKind::InactiveVpc || k == RoleKind::ActiveVpc) return NodeRole::idle();
        } else if constexpr (std::is_same_v<T, Disable>) {
          if (k == RoleKind::ActiveVpc) return NodeRole::disabled();
        }
        return std::nullopt;
      },
      event);
}

inline NodeRole transition(const NodeRole& role, const RoleEvent& event) {
  if (auto next = try_transition(role, event)) return *next;
  throw DomainError(DomainErrc::IllegalTransition,
                    "illegal transition: " + role.str() + " + " + describe(event));
}

struct NodeDescriptor {
  NodeId node_id;
  std::uint32_t cpu_capacity{0};           // milli-cores
  std::uint32_t mem_capacity{0};           // MiB
  std::uint32_t link_latency_estimate{0};  // us
  NodeRole role;
  Micros last_seen{0};
  Epoch epoch;

  bool operator==(const NodeDescriptor&) const = default;
};

struct ExecutionMode {
  enum class Kind : std::uint8_t { Cyclic = 0, Acyclic = 1 };

  Kind kind{Kind::Cyclic};
  Micros period{0};

  static ExecutionMode cyclic(Micros period) { return {Kind::Cyclic, period}; }
  static ExecutionMode acyclic() { return {Kind::Acyclic, 0}; }
  bool is_cyclic() const { return kind == Kind::Cyclic; }

  bool operator==(const ExecutionMode&) const = default;
};

struct VpfDescriptor {
  std::string vpf_id;
  SemVer version;
  ExecutionMode mode;
  std::string logic_name;
  std::string state_schema_id;
  Digest artifact_digest{};

  bool operator==(const VpfDescriptor&) const = default;
};

struct DeploymentSpec {
  std::string deployment_id;
  std::vector<VpfDescriptor> vpfs;
  std::uint32_t redundancy{1};       // r: number of inactive backups
  Micros sync_period{10'000};        // T
  std::uint32_t miss_threshold{3};   // k
  Micros control_period{1'000};
  std::uint32_t snapshot_every{10};  // N

  bool operator==(const DeploymentSpec&) const = default;

  void validate() const {
    auto fail = [](const std::string& m) { throw DomainError(DomainErrc::InvalidSpec, m); };
    if (deployment_id.empty()) fail("deployment_id must not be empty");
    if (miss_threshold < 1) fail("miss_threshold must be >= 1");
    if (sync_period <= 0) fail("sync_period must be > 0");
    if (control_period <= 0) fail("control_period must be > 0");
    if (snapshot_every < 1) fail("snapshot_every must be >= 1");
    for (const auto& v : vpfs) {
      if (v.mode.is_cyclic() && v.mode.period <= 0) fail("cyclic period of " + v.vpf_id + " must be > 0");
    }
  }
};

struct VpcState {
  std::uint64_t seq{0};
  std::map<std::string, Bytes> vpf_states;

  bool operator==(const VpcState&) const = default;
};

struct ControlData {
  std::string deployment_id;
  Epoch epoch;
  std::uint64_t seq{0};
  std::uint64_t input_seq{0};  // seq_hint of the process sample this answers
  std::map<std::string, double> outputs;

  bool operator==(const ControlData&) const = default;
};

struct ProcessData {
  std::string deployment_id;
  std::uint64_t seq_hint{0};
  std::map<std::string, double> inputs;
  Micros timestamp{0};

  bool operator==(const ProcessData&) const = default;
};

// Covers seq and every (vpf_id, blob) pair in vpf_id order; std::map already
// iterates sorted.
inline Digest state_digest(const VpcState& state) {
  Hasher h;
  h.update_u64(state.seq);
  h.update_u32(static_cast<std::uint32_t>(state.vpf_states.size()));
  for (const auto& [id, blob] : state.vpf_states) {
    h.update_u32(static_cast<std::uint32_t>(id.size()));
    h.update(id);
    h.update_u32(static_cast<std::uint32_t>(blob.size()));
    h.update(blob);
  }
  return h.finish();
}

using FencePoint = std::pair<Epoch, std::uint64_t>;

inline bool fence_accepts(const FencePoint& last_seen, const FencePoint& incoming) {
  return incoming > last_seen;
}

// Actuator-side guard: only strictly increasing (epoch, seq) pass.
class ActuatorFence {
 public:
  bool offer(Epoch epoch, std::uint64_t seq) {
    FencePoint in{epoch, seq};
    if (last_ && !fence_accepts(*last_, in)) return false;
    last_ = in;
    return true;
  }
  const std::optional<FencePoint>& last() const { return last_; }

 private:
  std::optional<FencePoint> last_;
};

}  // namespace vpc
