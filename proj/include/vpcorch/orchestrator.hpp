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

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vpc {

enum class OrchErrc {
  NotIdle,
  NoSuitableIr,
  InsufficientResources,
  StaleEpoch,
  UnknownDeployment,
  DuplicateDeployment,
  HandoverTooSoon,
  RedeployInProgress,
};

inline const char* to_string(OrchErrc e) {
  switch (e) {
    case OrchErrc::NotIdle: return "NotIdle";
    case OrchErrc::NoSuitableIr: return "NoSuitableIr";
    case OrchErrc::InsufficientResources: return "InsufficientResources";
    case OrchErrc::StaleEpoch: return "StaleEpoch";
    case OrchErrc::UnknownDeployment: return "UnknownDeployment";
    case OrchErrc::DuplicateDeployment: return "DuplicateDeployment";
    case OrchErrc::HandoverTooSoon: return "HandoverTooSoon";
    case OrchErrc::RedeployInProgress: return "RedeployInProgress";
  }
  return "?";
}

using OrchError = Error<OrchErrc>;

struct OrchestratorConfig {
  NodeId registry{2};
  Micros discovery_period{10'000};
  std::uint32_t ir_miss_threshold{3};
  Micros max_link_latency{150};  // base + jitter of the slowest link
  Micros release_delay{5'000};   // obsolete VPCs are released this long after handover

  Micros fetch_estimate() const { return 2 * max_link_latency; }
  Micros startup_margin() const { return 2 * (max_link_latency + fetch_estimate()); }
  Micros abort_lead() const { return 3 * max_link_latency; }
  Micros claim_window() const { return 2 * discovery_period; }
};

struct IrEntry {
  NodeDescriptor desc;
  bool failed{false};
};

struct DeploymentPlan {
  std::string deployment_id;
  NodeId active;
  std::vector<PeerEntry> inactive;  // sorted by rank
  Epoch epoch;
  DeploymentSpec spec;

  bool operator==(const DeploymentPlan&) const = default;

  bool has_inactive(NodeId n) const {
    for (const auto& p : inactive)
      if (p.node == n) return true;
    return false;
  }
  std::vector<NodeId> members() const {
    std::vector<NodeId> out{active};
    for (const auto& p : inactive) out.push_back(p.node);
    return out;
  }
};

inline void to_json(json& j, const DeploymentPlan& p) {
  json inactive = json::array();
  for (const auto& e : p.inactive) inactive.push_back({{"node", e.node.value}, {"rank", e.rank}});
  j = json{{"deployment_id", p.deployment_id},
           {"active", p.active.value},
           {"inactive", inactive},
           {"epoch", p.epoch.value},
           {"redundancy", p.spec.redundancy}};
}

// Placement score: free capacity normalized against the best candidate minus
// normalized link latency. Higher is better.
inline double placement_score(const NodeDescriptor& d, double cpu_max, double mem_max, double lat_max) {
  const double cap = std::min(d.cpu_capacity / cpu_max, d.mem_capacity / mem_max);
  const double lat = lat_max > 0 ? d.link_latency_estimate / lat_max : 0.0;
  return cap - lat;
}

// Every placement decision, with the candidate set it was chosen from.
struct PlacementRecord {
  std::vector<NodeDescriptor> candidates;
  std::optional<NodeId> chosen;
};

struct BackupOutcome {
  std::vector<NodeId> promoted;
  bool degraded{false};
};

// The VPCMO. Single-threaded and event driven: one inbound message or timer
// at a time, outputs go through the Port.
class Orchestrator {
 public:
  enum TimerKind : std::uint64_t { kTick = 1, kHandoverDue = 2, kRelease = 3 };

  explicit Orchestrator(OrchestratorConfig cfg = {}) : cfg_(cfg) {}

  void set_placement_observer(std::function<void(const PlacementRecord&)> fn) { observer_ = std::move(fn); }

  void on_start(Port& port) {
    self_ = port.self();
    discovery_tick(port);
  }

  void reset() {
    auto observer = std::move(observer_);
    *this = Orchestrator(cfg_);
    observer_ = std::move(observer);
  }

  void on_timer(Port& port, std::uint64_t tag) {
    const auto kind = static_cast<TimerKind>(tag >> 32);
    const std::uint64_t id = tag & 0xFFFFFFFFull;
    switch (kind) {
      case kTick: discovery_tick(port); break;
      case kHandoverDue: handover_due(port, id); break;
      case kRelease: release_obsolete(port, id); break;
    }
  }

  void on_message(Port& port, NodeId src, const Message& m) {
    if (const auto* reg = std::get_if<Register>(&m)) {
      NodeDescriptor d = reg->descriptor;
      d.node_id = src;
      try {
        register_ir(port, d, port.local_clock());
      } catch (const OrchError& e) {
        port.record("register_rejected", {{"node", static_cast<std::int64_t>(src.value)}});
      }
    } else if (const auto* st = std::get_if<Status>(&m)) {
      on_status(port, src, *st);
    } else if (const auto* br = std::get_if<BackupRequest>(&m)) {
      touch(port, src);
      try {
        handle_backup_request(port, *br);
      } catch (const OrchError& e) {
        port.record(e.code() == OrchErrc::StaleEpoch ? "stale_epoch" : "backup_rejected",
                    {{"node", static_cast<std::int64_t>(br->requester.value)},
                     {"epoch", static_cast<std::int64_t>(br->epoch.value)}});
      }
    }
  }

  // ---- discovery and the IR registry ----

  std::vector<NodeId> discovery_tick(Port& port) {
    ++round_;
    port.broadcast(Discovery{self_, round_});
    port.record("discovery", {{"round", static_cast<std::int64_t>(round_)}});
    const Micros now = port.local_clock();
    const Micros limit = static_cast<Micros>(cfg_.ir_miss_threshold) * cfg_.discovery_period;
    std::vector<NodeId> newly_failed;
    for (auto& [id, e] : irs_) {
      if (!e.failed && now - e.desc.last_seen > limit) {
        e.failed = true;
        newly_failed.push_back(id);
        port.record("ir_failed", {{"node", static_cast<std::int64_t>(id.value)}});
      }
    }
    for (auto it = claims_.begin(); it != claims_.end();) {
      if (now - it->second.seen > cfg_.claim_window()) it = claims_.erase(it);
      else ++it;
    }
    for (auto& [id, plan] : plans_) {
      if (degraded_.count(id)) restore(port, plan);
    }
    port.set_timer(cfg_.discovery_period, static_cast<std::uint64_t>(kTick) << 32);
    return newly_failed;
  }

  void register_ir(Port& port, const NodeDescriptor& desc, Micros now) {
    if (!desc.role.is(RoleKind::IdleResource)) {
      throw OrchError(OrchErrc::NotIdle, "node " + std::to_string(desc.node_id.value) + " is " + desc.role.str());
    }
    auto [it, inserted] = irs_.try_emplace(desc.node_id);
    const bool was_failed = !inserted && it->second.failed;
    it->second.desc = desc;
    it->second.desc.last_seen = std::max(now, inserted ? now : it->second.desc.last_seen);
    it->second.failed = false;
    disabled_.erase(desc.node_id);
    if (!is_plan_member(desc.node_id)) assigned_.erase(desc.node_id);
    if (inserted) port.record("ir_registered", {{"node", static_cast<std::int64_t>(desc.node_id.value)}});
    if (was_failed) port.record("ir_reinstated", {{"node", static_cast<std::int64_t>(desc.node_id.value)}});
  }

  // ---- placement ----

  std::vector<NodeDescriptor> candidates(const std::set<NodeId>& exclude) const {
    std::vector<NodeDescriptor> out;
    for (const auto& [id, e] : irs_) {
      if (e.failed || !e.desc.role.is(RoleKind::IdleResource)) continue;
      if (exclude.count(id) || assigned_.count(id) || disabled_.count(id)) continue;
      if (e.desc.cpu_capacity == 0 || e.desc.mem_capacity == 0) continue;
      out.push_back(e.desc);
    }
    return out;
  }

  NodeId select_ir(const DeploymentSpec&, const std::set<NodeId>& exclude) const {
    PlacementRecord rec;
    rec.candidates = candidates(exclude);
    double cpu_max = 0, mem_max = 0, lat_max = 0;
    for (const auto& d : rec.candidates) {
      cpu_max = std::max<double>(cpu_max, d.cpu_capacity);
      mem_max = std::max<double>(mem_max, d.mem_capacity);
      lat_max = std::max<double>(lat_max, d.link_latency_estimate);
    }
    std::optional<NodeId> best;
    double best_score = 0;
    for (const auto& d : rec.candidates) {  // ascending NodeId, so ties keep the lowest
      const double s = placement_score(d, cpu_max, mem_max, lat_max);
      if (!best || s > best_score) {
        best = d.node_id;
        best_score = s;
      }
    }
    rec.chosen = best;
    if (observer_) observer_(rec);
    if (!best) throw OrchError(OrchErrc::NoSuitableIr, "no live, idle IR available");
    return *best;
  }

  // ---- deployment ----

  DeploymentPlan deploy(Port& port, const DeploymentSpec& spec) {
    spec.validate();
    if (plans_.count(spec.deployment_id)) {
      throw OrchError(OrchErrc::DuplicateDeployment, spec.deployment_id + " already deployed");
    }
    auto chosen = pick(spec, 1 + spec.redundancy);
    if (!chosen) {
      port.record("deploy_failed", {{"needed", static_cast<std::int64_t>(1 + spec.redundancy)}});
      throw OrchError(OrchErrc::InsufficientResources,
                      "deployment needs " + std::to_string(1 + spec.redundancy) + " idle IRs");
    }
    DeploymentPlan plan;
    plan.deployment_id = spec.deployment_id;
    plan.spec = spec;
    plan.epoch = next_epoch(1);
    plan.active = (*chosen)[0];
    for (std::size_t i = 1; i < chosen->size(); ++i) {
      plan.inactive.push_back(PeerEntry{(*chosen)[i], static_cast<std::uint32_t>(i - 1)});
    }
    for (auto n : *chosen) assigned_.insert(n);
    issued_[plan.active] = plan.epoch;
    port.record("deploy", {{"epoch", static_cast<std::int64_t>(plan.epoch.value)},
                           {"active", static_cast<std::int64_t>(plan.active.value)}});
    promote(port, plan, plan.active, NodeRole::active(), 0, NodeId{});
    for (const auto& p : plan.inactive) promote(port, plan, p.node, NodeRole::inactive(p.rank), 0, NodeId{});
    plans_[plan.deployment_id] = plan;
    return plan;
  }

  BackupOutcome handle_backup_request(Port& port, const BackupRequest& req) {
    auto it = plans_.find(req.deployment_id);
    if (it == plans_.end()) throw OrchError(OrchErrc::UnknownDeployment, req.deployment_id);
    DeploymentPlan& plan = it->second;
    if (req.epoch < plan.epoch || (req.epoch == plan.epoch && req.requester != plan.active)) {
      throw OrchError(OrchErrc::StaleEpoch, "backup request from superseded epoch " +
                                                std::to_string(req.epoch.value));
    }
    port.record("backup_handled", {{"node", static_cast<std::int64_t>(req.requester.value)},
                                   {"failed", static_cast<std::int64_t>(req.failed.value)}});
    if (req.epoch > plan.epoch) {
      // A rank-0 inactive promoted itself: it replaces the active and its own
      // inactive slot becomes free.
      std::erase_if(plan.inactive, [&](const PeerEntry& p) { return p.node == req.requester; });
      if (req.failed == plan.active) assigned_.erase(plan.active);
      superseded_.insert(plan.active);
      plan.active = req.requester;
      plan.epoch = req.epoch;
      max_epoch_ = std::max(max_epoch_, req.epoch);
      issued_[plan.active] = req.epoch;
      for (const auto& p : plan.inactive) refresh(port, plan, p.node, NodeRole::inactive(p.rank));
    } else if (req.failed != NodeId{} && plan.has_inactive(req.failed)) {
      std::erase_if(plan.inactive, [&](const PeerEntry& p) { return p.node == req.failed; });
      // Skip one epoch: an evicted rank-0 inactive that is merely cut off may
      // have promoted itself to epoch+1, and must lose against the survivor.
      plan.epoch = next_epoch(2);
      issued_[plan.active] = plan.epoch;
      refresh(port, plan, plan.active, NodeRole::active());
      for (const auto& p : plan.inactive) refresh(port, plan, p.node, NodeRole::inactive(p.rank));
    }
    return restore(port, plan);
  }

  // Victim of a double-active report: lower epoch, then higher NodeId.
  static std::optional<NodeId> resolve_double_active(const Status& a, const Status& b) {
    if (a.deployment_id != b.deployment_id || a.node == b.node) return std::nullopt;
    if (!a.role.is(RoleKind::ActiveVpc) || !b.role.is(RoleKind::ActiveVpc)) return std::nullopt;
    if (a.epoch != b.epoch) return a.epoch < b.epoch ? a.node : b.node;
    return a.node > b.node ? a.node : b.node;
  }

  DeploymentPlan redeploy(Port& port, const std::string& deployment_id, DeploymentSpec new_spec,
                          Micros handover_time) {
    auto it = plans_.find(deployment_id);
    if (it == plans_.end()) throw OrchError(OrchErrc::UnknownDeployment, deployment_id);
    for (const auto& [id, p] : pending_) {
      if (p.next.deployment_id == deployment_id && !p.done) {
        throw OrchError(OrchErrc::RedeployInProgress, deployment_id);
      }
    }
    const Micros now = port.local_clock();
    if (handover_time <= now + cfg_.startup_margin()) {
      port.record("redeploy_failed", {{"reason", static_cast<std::int64_t>(OrchErrc::HandoverTooSoon)}});
      throw OrchError(OrchErrc::HandoverTooSoon,
                      "handover must be later than " + std::to_string(now + cfg_.startup_margin()));
    }
    new_spec.deployment_id = deployment_id;
    new_spec.validate();
    auto chosen = pick(new_spec, 1 + new_spec.redundancy);
    if (!chosen) {
      port.record("redeploy_failed",
                  {{"reason", static_cast<std::int64_t>(OrchErrc::InsufficientResources)}});
      throw OrchError(OrchErrc::InsufficientResources,
                      "redeployment needs " + std::to_string(1 + new_spec.redundancy) + " idle IRs");
    }
    const DeploymentPlan& old = it->second;
    Pending p;
    p.previous = old;
    p.handover_time = handover_time;
    p.next.deployment_id = deployment_id;
    p.next.spec = new_spec;
    p.next.epoch = next_epoch(1);
    p.next.active = (*chosen)[0];
    for (std::size_t i = 1; i < chosen->size(); ++i) {
      p.next.inactive.push_back(PeerEntry{(*chosen)[i], static_cast<std::uint32_t>(i - 1)});
    }
    for (auto n : *chosen) assigned_.insert(n);
    issued_[p.next.active] = p.next.epoch;
    handover_pairs_.insert({old.active, p.next.active});
    port.record("redeploy", {{"epoch", static_cast<std::int64_t>(p.next.epoch.value)},
                             {"active", static_cast<std::int64_t>(p.next.active.value)},
                             {"time", handover_time}});
    promote(port, p.next, p.next.active, NodeRole::active(), PromoteCmd::kAwaitHandover, old.active);
    for (const auto& e : p.next.inactive) {
      promote(port, p.next, e.node, NodeRole::inactive(e.rank), 0, NodeId{});
    }
    const std::uint64_t id = ++pending_seq_;
    pending_[id] = p;
    port.set_timer(handover_time - now, static_cast<std::uint64_t>(kHandoverDue) << 32 | id);
    return p.next;
  }

  // ---- queries ----

  const std::map<std::string, DeploymentPlan>& plans() const { return plans_; }
  const std::map<NodeId, IrEntry>& irs() const { return irs_; }
  bool degraded(const std::string& id) const { return degraded_.count(id) != 0; }
  Epoch max_epoch() const { return max_epoch_; }
  const OrchestratorConfig& config() const { return cfg_; }
  const std::set<NodeId>& disabled() const { return disabled_; }

  std::string state_json() const { return status_json().dump(); }

  json status_json() const {
    json plans = json::array();
    for (const auto& [id, p] : plans_) {
      json j = p;
      j["degraded"] = degraded_.count(id) != 0;
      plans.push_back(j);
    }
    json irs = json::array();
    for (const auto& [id, e] : irs_) {
      irs.push_back({{"node", id.value}, {"role", e.desc.role}, {"failed", e.failed},
                     {"assigned", assigned_.count(id) != 0}, {"disabled", disabled_.count(id) != 0}});
    }
    return json{{"role", "vpcmo"}, {"plans", plans}, {"irs", irs}, {"max_epoch", max_epoch_.value}};
  }

 private:
  struct Claim {
    std::string deployment_id;
    Epoch epoch;
    Micros seen{0};
  };

  struct Pending {
    DeploymentPlan previous;
    DeploymentPlan next;
    Micros handover_time{0};
    bool cmd_sent{false};
    bool done{false};
  };

  Epoch next_epoch(std::uint64_t step) {
    max_epoch_ = Epoch{max_epoch_.value + step};
    return max_epoch_;
  }

  bool is_plan_member(NodeId n) const {
    for (const auto& [id, p] : plans_)
      if (p.active == n || p.has_inactive(n)) return true;
    for (const auto& [id, p] : pending_) {
      if (p.done) continue;
      if (p.next.active == n || p.next.has_inactive(n)) return true;
    }
    return false;
  }

  std::optional<std::vector<NodeId>> pick(const DeploymentSpec& spec, std::size_t n) const {
    std::set<NodeId> exclude;
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < n; ++i) {
      try {
        out.push_back(select_ir(spec, exclude));
      } catch (const OrchError&) {
        return std::nullopt;
      }
      exclude.insert(out.back());
    }
    return out;
  }

  PromoteCmd make_promote(const DeploymentPlan& plan, const NodeRole& target, std::uint8_t flags,
                          NodeId predecessor) const {
    return PromoteCmd{plan.spec, target, plan.epoch, flags, plan.active, predecessor,
                      cfg_.registry, self_, plan.inactive};
  }

  void promote(Port& port, const DeploymentPlan& plan, NodeId node, const NodeRole& target, std::uint8_t flags,
               NodeId predecessor) {
    port.record("select", {{"node", static_cast<std::int64_t>(node.value)}});
    port.send(node, make_promote(plan, target, flags, predecessor));
    port.record("promote_cmd", {{"node", static_cast<std::int64_t>(node.value)},
                                {"role", static_cast<std::int64_t>(target.kind())},
                                {"rank", static_cast<std::int64_t>(target.rank().value_or(0))},
                                {"epoch", static_cast<std::int64_t>(plan.epoch.value)}});
  }

  void refresh(Port& port, const DeploymentPlan& plan, NodeId node, const NodeRole& target) {
    port.send(node, make_promote(plan, target, PromoteCmd::kEpochRefresh, NodeId{}));
    port.record("epoch_refresh_cmd", {{"node", static_cast<std::int64_t>(node.value)},
                                      {"epoch", static_cast<std::int64_t>(plan.epoch.value)}});
  }

  BackupOutcome restore(Port& port, DeploymentPlan& plan) {
    BackupOutcome out;
    while (plan.inactive.size() < plan.spec.redundancy) {
      NodeId node;
      try {
        node = select_ir(plan.spec, {});
      } catch (const OrchError&) {
        const auto missing = plan.spec.redundancy - plan.inactive.size();
        if (degraded_.insert(plan.deployment_id).second) {
          port.record("degraded", {{"missing", static_cast<std::int64_t>(missing)}});
        }
        out.degraded = true;
        return out;
      }
      std::uint32_t rank = 0;
      while (std::any_of(plan.inactive.begin(), plan.inactive.end(),
                         [rank](const PeerEntry& p) { return p.rank == rank; })) {
        ++rank;
      }
      PeerEntry entry{node, rank};
      plan.inactive.insert(std::lower_bound(plan.inactive.begin(), plan.inactive.end(), entry,
                                            [](const PeerEntry& a, const PeerEntry& b) { return a.rank < b.rank; }),
                           entry);
      assigned_.insert(node);
      promote(port, plan, node, NodeRole::inactive(rank), 0, NodeId{});
      port.record("backup_restore", {{"node", static_cast<std::int64_t>(node.value)},
                                     {"rank", static_cast<std::int64_t>(rank)}});
      out.promoted.push_back(node);
    }
    if (degraded_.erase(plan.deployment_id)) port.record("redundancy_restored");
    return out;
  }

  void touch(Port& port, NodeId n) {
    auto it = irs_.find(n);
    if (it == irs_.end()) return;
    it->second.desc.last_seen = std::max(it->second.desc.last_seen, port.local_clock());
    if (it->second.failed) {
      it->second.failed = false;
      port.record("ir_reinstated", {{"node", static_cast<std::int64_t>(n.value)}});
    }
  }

  void on_status(Port& port, NodeId src, const Status& st) {
    touch(port, src);
    if (auto it = irs_.find(src); it != irs_.end()) it->second.desc.role = st.role;
    switch (st.kind) {
      case StatusKind::Ready: on_ready(port, src, st); break;
      case StatusKind::Fault: on_fault(port, src, st); break;
      case StatusKind::HandoverAbort: abort_redeploy(port, st.deployment_id, 1); break;
      default: break;
    }
    track_claim(port, src, st);
  }

  void on_ready(Port& port, NodeId src, const Status& st) {
    port.record("member_ready", {{"node", static_cast<std::int64_t>(src.value)},
                                 {"role", static_cast<std::int64_t>(st.role.kind())}});
    for (auto& [id, p] : pending_) {
      if (p.done || p.cmd_sent || p.next.active != src) continue;
      p.cmd_sent = true;
      HandoverCmd cmd{p.next.deployment_id, p.handover_time, p.previous.active, p.next.active, p.next.epoch,
                      cfg_.abort_lead()};
      port.send(p.previous.active, cmd);
      port.send(p.next.active, cmd);
      port.record("handover_cmd", {{"time", p.handover_time},
                                   {"old", static_cast<std::int64_t>(p.previous.active.value)},
                                   {"new", static_cast<std::int64_t>(p.next.active.value)}});
    }
  }

  void on_fault(Port& port, NodeId src, const Status& st) {
    port.record("member_fault", {{"node", static_cast<std::int64_t>(src.value)}});
    for (auto& [id, p] : pending_) {
      if (!p.done && p.next.deployment_id == st.deployment_id && p.next.active == src) {
        abort_redeploy(port, st.deployment_id, 2);
        return;
      }
    }
    auto it = plans_.find(st.deployment_id);
    if (it == plans_.end() || !it->second.has_inactive(src)) return;
    std::erase_if(it->second.inactive, [&](const PeerEntry& p) { return p.node == src; });
    assigned_.erase(src);
    restore(port, it->second);
  }

  void track_claim(Port& port, NodeId src, const Status& st) {
    if (!st.role.is(RoleKind::ActiveVpc) || st.phase != Phase::Live) {
      claims_.erase(src);
      return;
    }
    if (disabled_.count(src)) {
      disable(port, st.deployment_id, src, NodeId{}, st.epoch);
      return;
    }
    const Micros now = port.local_clock();
    Epoch effective = st.epoch;
    if (auto it = issued_.find(src); it != issued_.end()) effective = std::max(effective, it->second);
    claims_[src] = Claim{st.deployment_id, effective, now};
    for (const auto& [other, c] : claims_) {
      if (other == src || c.deployment_id != st.deployment_id) continue;
      if (now - c.seen > cfg_.claim_window()) continue;
      if (handover_pairs_.count({other, src}) || handover_pairs_.count({src, other})) continue;
      Status a{src, st.deployment_id, NodeRole::active(), effective, 0, StatusKind::Heartbeat, Phase::Live};
      Status b{other, c.deployment_id, NodeRole::active(), c.epoch, 0, StatusKind::Heartbeat, Phase::Live};
      auto victim = resolve_double_active(a, b);
      if (!victim) continue;
      port.record("double_active", {{"a", static_cast<std::int64_t>(src.value)},
                                    {"b", static_cast<std::int64_t>(other.value)}});
      const NodeId winner = *victim == src ? other : src;
      const Epoch victim_epoch = *victim == src ? effective : c.epoch;
      disable(port, st.deployment_id, *victim, winner, victim_epoch);
      return;
    }
  }

  void disable(Port& port, const std::string& dep, NodeId victim, NodeId winner, Epoch epoch) {
    port.send(victim, ReleaseCmd{dep, ReleaseMode::Disable, epoch});
    claims_.erase(victim);
    const bool first = disabled_.insert(victim).second;
    port.record("disable", {{"node", static_cast<std::int64_t>(victim.value)},
                            {"epoch", static_cast<std::int64_t>(epoch.value)},
                            {"winner", static_cast<std::int64_t>(winner.value)},
                            {"repeat", first ? 0 : 1}});
    auto it = plans_.find(dep);
    if (it == plans_.end() || winner == NodeId{}) return;
    if (it->second.active == victim) {
      it->second.active = winner;
      it->second.epoch = std::max(it->second.epoch, issued_[winner]);
    }
  }

  void abort_redeploy(Port& port, const std::string& dep, std::int64_t reason) {
    for (auto& [id, p] : pending_) {
      if (p.done || p.next.deployment_id != dep) continue;
      p.done = true;
      port.record("handover_abort", {{"reason", reason}});
      for (auto n : p.next.members()) {
        port.send(n, ReleaseCmd{dep, ReleaseMode::Release, p.next.epoch});
        assigned_.erase(n);
        port.record("release", {{"node", static_cast<std::int64_t>(n.value)}});
      }
      handover_pairs_.erase({p.previous.active, p.next.active});
    }
  }

  void handover_due(Port& port, std::uint64_t id) {
    auto it = pending_.find(id);
    if (it == pending_.end() || it->second.done) return;
    Pending& p = it->second;
    if (!p.cmd_sent) {
      abort_redeploy(port, p.next.deployment_id, 3);
      return;
    }
    auto plan = plans_.find(p.next.deployment_id);
    if (plan == plans_.end()) return;
    // Members that changed since the redeploy was issued are obsolete too.
    p.previous = plan->second;
    plan->second = p.next;
    p.done = true;
    port.record("plan_swap", {{"active", static_cast<std::int64_t>(p.next.active.value)},
                              {"epoch", static_cast<std::int64_t>(p.next.epoch.value)}});
    port.set_timer(cfg_.release_delay, static_cast<std::uint64_t>(kRelease) << 32 | id);
  }

  void release_obsolete(Port& port, std::uint64_t id) {
    auto it = pending_.find(id);
    if (it == pending_.end()) return;
    const Pending& p = it->second;
    for (auto n : p.previous.members()) {
      port.send(n, ReleaseCmd{p.previous.deployment_id, ReleaseMode::Release, p.previous.epoch});
      assigned_.erase(n);
      port.record("release", {{"node", static_cast<std::int64_t>(n.value)}});
    }
    handover_pairs_.erase({p.previous.active, p.next.active});
    pending_.erase(it);
  }

  OrchestratorConfig cfg_;
  NodeId self_;
  std::uint64_t round_{0};
  std::map<NodeId, IrEntry> irs_;
  std::map<std::string, DeploymentPlan> plans_;
  std::set<std::string> degraded_;
  std::set<NodeId> assigned_;
  std::set<NodeId> disabled_;
  std::set<NodeId> superseded_;
  std::map<NodeId, Epoch> issued_;
  std::map<NodeId, Claim> claims_;
  std::set<std::pair<NodeId, NodeId>> handover_pairs_;
  std::map<std::uint64_t, Pending> pending_;
  std::uint64_t pending_seq_{0};
  Epoch max_epoch_;
  std::function<void(const PlacementRecord&)> observer_;
};

}  // namespace vpc
