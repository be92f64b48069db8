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
#include "vpcorch/vpf_catalog.hpp"

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vpc {

enum class NodeErrc {
  NotPromoted,
  NotRankZero,
  HandoverInPast,
  DigestMismatch,
};

using NodeError = Error<NodeErrc>;

struct NodeRuntimeConfig {
  NodeDescriptor descriptor;      // capacities and latency estimate; role/epoch ignored
  Micros max_link_latency{150};   // base + jitter of the slowest link
  Micros max_jitter{50};
  Micros clock_accuracy{1};
  std::size_t input_ring{256};    // recent samples kept for replay after a snapshot
  std::size_t digest_history{256};
};

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Fetching: return "fetching";
    case Phase::Live: return "live";
    case Phase::AwaitHandover: return "await_handover";
    case Phase::HandedOver: return "handed_over";
  }
  return "?";
}

// Per-node state machine. An idle node registers with the VPCMO; a promoted
// node fetches its VPFs, runs the control loop on every process sample and
// takes part in active/inactive synchronization.
class VpcNode {
 public:
  explicit VpcNode(NodeRuntimeConfig cfg) : cfg_(std::move(cfg)) { reset(); }

  // Timer tag layout: generation (24 bits) | kind (8 bits) | payload (32 bits).
  // Bumping the generation on every demotion orphans all outstanding timers.
  enum TimerKind : std::uint64_t { kSync = 1, kWatchdog = 2, kPeer = 3, kHandover = 4, kAbortCheck = 5 };

  void reset() {
    ++gen_;
    role_ = NodeRole::idle();
    epoch_ = Epoch{};
    clear_deployment();
    vpcmo_ = NodeId{};
    icps_ = NodeId{};
  }

  void on_start(Port& port) { port.record("boot"); }

  void on_message(Port& port, NodeId src, const Message& msg) {
    std::visit([&](const auto& m) { handle(port, src, m); }, msg);
  }

  void on_timer(Port& port, std::uint64_t tag) {
    if ((tag >> 40) != (gen_ & 0xFFFFFF)) return;
    const auto kind = static_cast<TimerKind>((tag >> 32) & 0xFF);
    const NodeId payload{tag & 0xFFFFFFFFull};
    switch (kind) {
      case kSync: sync_tick(port); break;
      case kWatchdog: watchdog_fired(port); break;
      case kPeer: peer_deadline(port, payload); break;
      case kHandover: handover_due(port); break;
      case kAbortCheck: abort_check(port); break;
    }
  }

  // The control cycle is public so it can be driven directly in tests.
  std::optional<ControlData> control_cycle(Port& port, const ProcessData& input) {
    if (!role_.promoted()) throw NodeError(NodeErrc::NotPromoted, "node is not a VPC");
    return run_cycle(port, input);
  }

  std::string state_json() const {
    json j{{"role", role_},
           {"epoch", epoch_.value},
           {"phase", to_string(phase_)},
           {"deployment", spec_ ? spec_->deployment_id : ""},
           {"seq", state_.seq},
           {"in_sync", in_sync_},
           {"digest", to_hex(digest_)}};
    return j.dump();
  }

  const NodeRole& role() const { return role_; }
  Epoch epoch() const { return epoch_; }
  Phase phase() const { return phase_; }
  bool in_sync() const { return in_sync_; }
  const VpcState& state() const { return state_; }
  const Digest& digest() const { return digest_; }
  std::uint64_t last_input_seq() const { return last_input_seq_; }
  std::size_t peer_count() const { return peers_.size(); }
  bool has_peer(NodeId id) const { return peers_.count(id) != 0; }
  NodeId active() const { return active_; }
  const NodeRuntimeConfig& config() const { return cfg_; }

  // Window after the last sync's send stamp in which the active must be heard
  // from again. Shortened by jitter and clock accuracy so that detection plus
  // the takeover output's transit stays inside k*T + jitter + accuracy.
  Micros watchdog_window() const {
    const Micros k_t = static_cast<Micros>(spec_->miss_threshold) * spec_->sync_period;
    const Micros floor = spec_->sync_period + cfg_.max_link_latency + cfg_.clock_accuracy;
    return std::max(k_t - cfg_.max_jitter - cfg_.clock_accuracy, floor);
  }

 private:
  struct Peer {
    std::uint32_t rank{0};
    bool successor{false};  // new active during a handover
    bool need_snapshot{true};
    bool in_sync{false};
    std::uint64_t snapshot_round{0};
    bool armed{false};
    bool timer_pending{false};
    Micros deadline{0};
  };

  struct Handover {
    Micros time{0};
    bool old_side{true};
    bool aborted{false};
    Micros abort_lead{0};
  };

  struct LoadedVpf {
    bool loaded{false};
    VpfProgram program;
  };

  void clear_deployment() {
    spec_.reset();
    phase_ = Phase::Fetching;
    vpfs_.clear();
    state_ = VpcState{};
    digest_ = state_digest(state_);
    last_input_seq_ = 0;
    history_.clear();
    pending_compare_.clear();
    inputs_.clear();
    in_sync_ = false;
    has_state_ = false;
    peers_.clear();
    round_ = 0;
    sync_running_ = false;
    watchdog_pending_ = false;
    watchdog_deadline_ = 0;
    last_sync_flags_ = 0;
    handover_.reset();
    await_handover_ = false;
    active_ = NodeId{};
    predecessor_ = NodeId{};
    registry_ = NodeId{};
    known_inactives_.clear();
    has_output_ = false;
    last_output_.clear();
    last_output_input_seq_ = 0;
  }

  std::uint64_t tag(TimerKind kind, std::uint64_t payload = 0) const {
    return (gen_ & 0xFFFFFF) << 40 | static_cast<std::uint64_t>(kind) << 32 | (payload & 0xFFFFFFFFull);
  }

  Micros k_t() const { return static_cast<Micros>(spec_->miss_threshold) * spec_->sync_period; }

  bool same_deployment(const std::string& id) const { return spec_ && spec_->deployment_id == id; }

  Status make_status(Port& port, StatusKind kind) const {
    return Status{port.self(), spec_ ? spec_->deployment_id : "", role_, epoch_, state_.seq, kind, phase_};
  }

  void go_idle(Port& port, const RoleEvent& ev) {
    if (auto next = try_transition(role_, ev)) role_ = *next;
    else role_ = NodeRole::idle();
    ++gen_;
    epoch_ = Epoch{};
    clear_deployment();
    port.record("idle");
  }

  // ---- discovery and registration ----

  void handle(Port& port, NodeId, const Discovery& m) {
    vpcmo_ = m.vpcmo;
    if (role_.is(RoleKind::Disabled)) return;
    if (role_.is(RoleKind::IdleResource)) {
      NodeDescriptor d = cfg_.descriptor;
      d.role = role_;
      d.epoch = Epoch{};
      d.last_seen = 0;
      port.send(vpcmo_, Register{d});
      return;
    }
    port.send(vpcmo_, make_status(port, StatusKind::Heartbeat));
  }

  void handle(Port&, NodeId, const Register&) {}
  void handle(Port&, NodeId, const DeployCmd&) {}
  void handle(Port&, NodeId, const BackupRequest&) {}
  void handle(Port&, NodeId, const FetchVpf&) {}
  void handle(Port&, NodeId, const ControlDataMsg&) {}

  // ---- promotion ----

  void handle(Port& port, NodeId, const PromoteCmd& cmd) {
    if (role_.is(RoleKind::Disabled)) {
      port.record("promote_ignored", {{"epoch", static_cast<std::int64_t>(cmd.epoch.value)}});
      return;
    }
    if (cmd.flags & PromoteCmd::kEpochRefresh) {
      epoch_refresh(port, cmd);
      return;
    }
    if (same_deployment(cmd.spec.deployment_id) && cmd.epoch == epoch_ && cmd.target == role_) {
      port.record("promote_duplicate", {{"epoch", static_cast<std::int64_t>(cmd.epoch.value)}});
      return;
    }
    std::optional<NodeRole> next;
    if (cmd.target.is(RoleKind::ActiveVpc)) {
      next = try_transition(role_, PromoteActive{cmd.epoch});
    } else if (cmd.target.is(RoleKind::InactiveVpc)) {
      next = try_transition(role_, PromoteInactive{*cmd.target.rank()});
    }
    if (!next) {
      port.record("illegal_transition", {{"role", static_cast<std::int64_t>(role_.kind())},
                                         {"target", static_cast<std::int64_t>(cmd.target.kind())}});
      return;
    }
    ++gen_;
    clear_deployment();
    role_ = *next;
    epoch_ = cmd.epoch;
    spec_ = cmd.spec;
    active_ = cmd.active;
    predecessor_ = cmd.predecessor;
    registry_ = cmd.registry;
    vpcmo_ = cmd.vpcmo;
    known_inactives_ = cmd.inactive_peers;
    await_handover_ = (cmd.flags & PromoteCmd::kAwaitHandover) != 0;
    port.record("promoted", {{"role", static_cast<std::int64_t>(role_.kind())},
                             {"rank", static_cast<std::int64_t>(role_.rank().value_or(0))},
                             {"epoch", static_cast<std::int64_t>(epoch_.value)},
                             {"handover", await_handover_ ? 1 : 0}});
    vpfs_.assign(spec_->vpfs.size(), LoadedVpf{});
    for (const auto& v : spec_->vpfs) port.send(registry_, FetchVpf{v.vpf_id, v.version});
    port.record("fetch", {{"count", static_cast<std::int64_t>(spec_->vpfs.size())}});
    if (spec_->vpfs.empty()) become_ready(port);
  }

  void epoch_refresh(Port& port, const PromoteCmd& cmd) {
    if (!same_deployment(cmd.spec.deployment_id) || cmd.epoch <= epoch_) return;
    epoch_ = cmd.epoch;
    if (role_.is(RoleKind::InactiveVpc) && cmd.target.is(RoleKind::InactiveVpc)) {
      role_ = cmd.target;
      active_ = cmd.active;
      if (phase_ == Phase::Live) port.send(active_, make_status(port, StatusKind::Ready));
    }
    port.record("epoch_refresh", {{"epoch", static_cast<std::int64_t>(epoch_.value)},
                                  {"rank", static_cast<std::int64_t>(role_.rank().value_or(0))}});
  }

  void handle(Port& port, NodeId, const VpfBlob& m) {
    if (!spec_ || phase_ != Phase::Fetching || !role_.promoted()) return;
    std::size_t idx = spec_->vpfs.size();
    for (std::size_t i = 0; i < spec_->vpfs.size(); ++i) {
      const auto& v = spec_->vpfs[i];
      if (v.vpf_id == m.descriptor.vpf_id && v.version == m.descriptor.version && !vpfs_[i].loaded) {
        idx = i;
        break;
      }
    }
    if (idx == spec_->vpfs.size()) return;
    const auto& want = spec_->vpfs[idx];
    if (!m.found) {
      abort_promotion(port, "vpf_missing", idx);
      return;
    }
    if (sha256(m.blob) != want.artifact_digest) {
      abort_promotion(port, "digest_mismatch", idx);
      return;
    }
    try {
      vpfs_[idx].program = load_program(want, m.blob);
    } catch (const VpfError&) {
      abort_promotion(port, "vpf_rejected", idx);
      return;
    }
    vpfs_[idx].loaded = true;
    for (const auto& v : vpfs_)
      if (!v.loaded) return;
    become_ready(port);
  }

  void abort_promotion(Port& port, std::string_view why, std::size_t idx) {
    port.record(why, {{"vpf", static_cast<std::int64_t>(idx)}});
    Status st = make_status(port, StatusKind::Fault);
    go_idle(port, Release{});
    port.send(vpcmo_, st);
  }

  void become_ready(Port& port) {
    state_ = VpcState{};
    for (const auto& v : vpfs_) state_.vpf_states[v.program.descriptor.vpf_id] = initial_state(v.program);
    last_input_seq_ = 0;
    digest_ = state_digest(state_);
    history_.clear();
    history_[0] = digest_;
    if (role_.is(RoleKind::ActiveVpc)) {
      if (await_handover_) {
        phase_ = Phase::AwaitHandover;
        in_sync_ = false;
        has_state_ = false;
      } else {
        phase_ = Phase::Live;
        in_sync_ = true;
        has_state_ = true;
      }
      start_sync(port);
    } else {
      phase_ = Phase::Live;
      in_sync_ = false;
      has_state_ = false;
    }
    port.record("ready", {{"role", static_cast<std::int64_t>(role_.kind())},
                          {"epoch", static_cast<std::int64_t>(epoch_.value)},
                          {"phase", static_cast<std::int64_t>(phase_)}});
    Status st = make_status(port, StatusKind::Ready);
    port.send(vpcmo_, st);
    if (role_.is(RoleKind::InactiveVpc) && active_ != NodeId{}) port.send(active_, st);
  }

  // ---- control loop ----

  void handle(Port& port, NodeId src, const ProcessDataMsg& m) {
    if (!role_.promoted() || !spec_ || phase_ == Phase::Fetching) return;
    if (m.data.deployment_id != spec_->deployment_id) return;
    icps_ = src;
    if (m.data.seq_hint <= last_input_seq_) return;
    remember_input(m.data);
    if (!in_sync_) return;
    run_cycle(port, m.data);
  }

  void remember_input(const ProcessData& pd) {
    if (!inputs_.empty() && inputs_.back().seq_hint >= pd.seq_hint) return;
    inputs_.push_back(pd);
    while (inputs_.size() > cfg_.input_ring) inputs_.pop_front();
  }

  std::optional<ControlData> run_cycle(Port& port, const ProcessData& pd) {
    if (pd.seq_hint <= last_input_seq_) return std::nullopt;
    VpcState next = state_;
    std::map<std::string, double> outputs;
    for (const auto& v : vpfs_) {
      if (!v.program.descriptor.mode.is_cyclic()) continue;
      const auto& id = v.program.descriptor.vpf_id;
      try {
        VpfStep step = execute_vpf(v.program, next.vpf_states[id], pd);
        next.vpf_states[id] = std::move(step.state);
        outputs.insert(step.outputs.begin(), step.outputs.end());
      } catch (const VpfError& e) {
        vpf_fault(port, e.code());
        return std::nullopt;
      }
    }
    next.seq += 1;
    state_ = std::move(next);
    last_input_seq_ = pd.seq_hint;
    digest_ = state_digest(state_);
    history_[state_.seq] = digest_;
    while (history_.size() > cfg_.digest_history) history_.erase(history_.begin());
    port.record("cycle", {{"seq", static_cast<std::int64_t>(state_.seq)},
                          {"input_seq", static_cast<std::int64_t>(pd.seq_hint)},
                          {"digest", digest_prefix(digest_)},
                          {"epoch", static_cast<std::int64_t>(epoch_.value)},
                          {"role", static_cast<std::int64_t>(role_.kind())}});
    settle_pending_compares(port);
    if (!in_sync_) return std::nullopt;

    has_output_ = true;
    last_output_ = outputs;
    last_output_input_seq_ = pd.seq_hint;
    if (!should_emit(pd)) return std::nullopt;
    return emit(port, outputs, pd.seq_hint);
  }

  bool should_emit(const ProcessData& pd) const {
    if (!role_.is(RoleKind::ActiveVpc)) return false;
    switch (phase_) {
      case Phase::Live:
        // Samples stamped before the handover date belong to the predecessor.
        return !(handover_ && !handover_->old_side && !handover_->aborted && pd.timestamp < handover_->time);
      case Phase::AwaitHandover:
        return handover_ && !handover_->aborted && in_sync_ && pd.timestamp >= handover_->time;
      case Phase::HandedOver: return handover_ && pd.timestamp < handover_->time;
      case Phase::Fetching: return false;
    }
    return false;
  }

  ControlData emit(Port& port, const std::map<std::string, double>& outputs, std::uint64_t input_seq) {
    ControlData cd{spec_->deployment_id, epoch_, state_.seq, input_seq, outputs};
    port.record("emit", {{"epoch", static_cast<std::int64_t>(epoch_.value)},
                         {"seq", static_cast<std::int64_t>(state_.seq)},
                         {"input_seq", static_cast<std::int64_t>(input_seq)},
                         {"role", static_cast<std::int64_t>(role_.kind())}});
    if (icps_ != NodeId{}) port.send(icps_, ControlDataMsg{cd});
    return cd;
  }

  void vpf_fault(Port& port, VpfErrc code) {
    port.record("vpf_fault", {{"code", static_cast<std::int64_t>(code)},
                              {"seq", static_cast<std::int64_t>(state_.seq)}});
    Status st = make_status(port, StatusKind::Fault);
    go_idle(port, Demote{});
    port.send(vpcmo_, st);
  }

  // ---- synchronization, active side ----

  void start_sync(Port& port) {
    if (sync_running_) return;
    sync_running_ = true;
    port.set_timer(spec_->sync_period, tag(kSync));
  }

  void add_peer(Port& port, NodeId id, std::uint32_t rank, bool successor) {
    if (id == port.self()) return;
    auto [it, inserted] = peers_.try_emplace(id);
    if (!inserted) {
      it->second.successor = it->second.successor || successor;
      return;
    }
    it->second.rank = rank;
    it->second.successor = successor;
    port.record("peer_added", {{"peer", static_cast<std::int64_t>(id.value)},
                               {"successor", successor ? 1 : 0}});
  }

  void sync_tick(Port& port) {
    if (!role_.is(RoleKind::ActiveVpc) || !spec_) {
      sync_running_ = false;
      return;
    }
    port.set_timer(spec_->sync_period, tag(kSync));
    if (!in_sync_) return;
    ++round_;
    std::uint8_t flags = 0;
    if (phase_ == Phase::AwaitHandover) flags |= Sync::kPreLive;
    if (phase_ == Phase::HandedOver) flags |= Sync::kHandedOver;
    for (auto& [id, peer] : peers_) {
      Sync s{spec_->deployment_id, epoch_, round_, state_.seq, last_input_seq_, digest_, flags,
             port.local_clock(), std::nullopt};
      if (peer.need_snapshot || round_ % spec_->snapshot_every == 0) {
        s.snapshot = state_;
        peer.need_snapshot = false;
        peer.snapshot_round = round_;
      }
      port.send(id, s);
      if (!peer.armed) {
        peer.armed = true;
        peer.deadline = s.send_stamp + k_t();
        arm_peer(port, id, peer);
      }
    }
  }

  void arm_peer(Port& port, NodeId id, Peer& peer) {
    if (peer.timer_pending) return;
    peer.timer_pending = true;
    port.set_timer(peer.deadline - port.local_clock(), tag(kPeer, id.value));
  }

  void handle(Port&, NodeId src, const SyncAck& ack) {
    if (!role_.is(RoleKind::ActiveVpc) || !same_deployment(ack.deployment_id)) return;
    auto it = peers_.find(src);
    if (it == peers_.end()) return;
    Peer& peer = it->second;
    peer.deadline = std::max(peer.deadline, ack.echo_stamp + k_t());
    peer.in_sync = ack.in_sync;
    if (!ack.in_sync && ack.round >= peer.snapshot_round) peer.need_snapshot = true;
  }

  void peer_deadline(Port& port, NodeId id) {
    auto it = peers_.find(id);
    if (it == peers_.end()) return;
    Peer& peer = it->second;
    peer.timer_pending = false;
    if (!role_.is(RoleKind::ActiveVpc)) return;
    if (port.local_clock() < peer.deadline) {
      arm_peer(port, id, peer);
      return;
    }
    const bool successor = peer.successor;
    peers_.erase(it);
    port.record("peer_failed", {{"peer", static_cast<std::int64_t>(id.value)},
                                {"successor", successor ? 1 : 0}});
    if (successor || phase_ != Phase::Live) return;
    port.send(vpcmo_, BackupRequest{spec_->deployment_id, epoch_, port.self(), id});
    port.record("backup_request", {{"failed", static_cast<std::int64_t>(id.value)},
                                   {"epoch", static_cast<std::int64_t>(epoch_.value)}});
  }

  // ---- synchronization, inactive side ----

  void handle(Port& port, NodeId src, const Sync& s) {
    if (!same_deployment(s.deployment_id) || phase_ == Phase::Fetching) return;
    const bool from_predecessor = role_.is(RoleKind::ActiveVpc) && phase_ == Phase::AwaitHandover &&
                                  src == predecessor_;
    if (role_.is(RoleKind::InactiveVpc)) {
      if (s.epoch < epoch_) {
        port.record("stale_sync", {{"from", static_cast<std::int64_t>(src.value)},
                                   {"epoch", static_cast<std::int64_t>(s.epoch.value)}});
        return;
      }
      if (s.epoch > epoch_) {
        epoch_ = s.epoch;
        active_ = src;
        port.record("follow", {{"active", static_cast<std::int64_t>(src.value)},
                               {"epoch", static_cast<std::int64_t>(epoch_.value)}});
      } else if (src != active_) {
        return;
      }
    } else if (!from_predecessor) {
      return;
    }

    apply_sync(port, s);
    port.send(src, SyncAck{s.deployment_id, epoch_, s.round, state_.seq, in_sync_, s.send_stamp});

    if (role_.is(RoleKind::InactiveVpc)) {
      last_sync_flags_ = s.flags;
      watchdog_deadline_ = s.send_stamp + watchdog_window();
      if (!watchdog_pending_) {
        watchdog_pending_ = true;
        port.set_timer(watchdog_deadline_ - port.local_clock(), tag(kWatchdog));
      }
    }
  }

  void apply_sync(Port& port, const Sync& s) {
    if (s.snapshot && (!in_sync_ || !compare(port, s.seq, s.digest))) {
      adopt(port, *s.snapshot, s.input_seq);
      return;
    }
    if (in_sync_) compare(port, s.seq, s.digest);
  }

  // False on a definite mismatch; unknown or future sequence numbers pass.
  bool compare(Port& port, std::uint64_t seq, const Digest& d) {
    if (seq > state_.seq) {
      pending_compare_[seq] = d;
      return true;
    }
    auto it = history_.find(seq);
    if (it == history_.end() || it->second == d) return true;
    desync(port, seq);
    return false;
  }

  void settle_pending_compares(Port& port) {
    while (!pending_compare_.empty() && pending_compare_.begin()->first <= state_.seq) {
      auto [seq, d] = *pending_compare_.begin();
      pending_compare_.erase(pending_compare_.begin());
      if (seq == state_.seq && d != digest_) desync(port, seq);
    }
  }

  void desync(Port& port, std::uint64_t seq) {
    if (!in_sync_) return;
    in_sync_ = false;
    pending_compare_.clear();
    port.record("desync", {{"seq", static_cast<std::int64_t>(seq)}});
  }

  void adopt(Port& port, const VpcState& snap, std::uint64_t input_seq) {
    state_ = snap;
    last_input_seq_ = input_seq;
    digest_ = state_digest(state_);
    history_.clear();
    history_[state_.seq] = digest_;
    pending_compare_.clear();
    in_sync_ = true;
    has_state_ = true;
    port.record("snapshot_adopted", {{"seq", static_cast<std::int64_t>(state_.seq)},
                                     {"input_seq", static_cast<std::int64_t>(input_seq)}});
    std::vector<ProcessData> replay(inputs_.begin(), inputs_.end());
    for (const auto& pd : replay) {
      if (pd.seq_hint <= last_input_seq_) continue;
      run_cycle(port, pd);
      if (!in_sync_ || !role_.promoted()) break;
    }
  }

  void watchdog_fired(Port& port) {
    watchdog_pending_ = false;
    if (!role_.is(RoleKind::InactiveVpc)) return;
    if (port.local_clock() < watchdog_deadline_) {
      watchdog_pending_ = true;
      port.set_timer(watchdog_deadline_ - port.local_clock(), tag(kWatchdog));
      return;
    }
    port.record("active_failed", {{"active", static_cast<std::int64_t>(active_.value)},
                                  {"epoch", static_cast<std::int64_t>(epoch_.value)}});
    if (last_sync_flags_ & (Sync::kPreLive | Sync::kHandedOver)) {
      port.record("promotion_suppressed", {{"flags", last_sync_flags_}});
      return;
    }
    if (role_.rank().value_or(0) != 0) {
      port.record("not_rank_zero", {{"rank", static_cast<std::int64_t>(*role_.rank())}});
      return;
    }
    if (!has_state_) {
      port.record("promotion_suppressed", {{"flags", -1}});
      return;
    }
    self_promote(port);
  }

  void self_promote(Port& port) {
    const NodeId old_active = active_;
    const Epoch next = epoch_.next();
    role_ = transition(role_, PromoteActive{next});
    epoch_ = next;
    active_ = port.self();
    phase_ = Phase::Live;
    in_sync_ = true;
    port.record("self_promote", {{"epoch", static_cast<std::int64_t>(epoch_.value)},
                                 {"seq", static_cast<std::int64_t>(state_.seq)},
                                 {"old_active", static_cast<std::int64_t>(old_active.value)}});
    // Re-issue the newest output under the new epoch so the actuator hears
    // from the successor without waiting for the next sample.
    if (has_output_) emit(port, last_output_, last_output_input_seq_);
    Status st = make_status(port, StatusKind::SelfPromoted);
    port.send(vpcmo_, st);
    for (const auto& p : known_inactives_)
      if (p.node != port.self()) port.send(p.node, st);
    start_sync(port);
    port.send(vpcmo_, BackupRequest{spec_->deployment_id, epoch_, port.self(), old_active});
    port.record("backup_request", {{"failed", static_cast<std::int64_t>(old_active.value)},
                                   {"epoch", static_cast<std::int64_t>(epoch_.value)}});
  }

  // ---- status from peers ----

  void handle(Port& port, NodeId src, const Status& st) {
    if (!role_.promoted() || !same_deployment(st.deployment_id)) return;
    switch (st.kind) {
      case StatusKind::Ready:
        if (role_.is(RoleKind::ActiveVpc) && st.role.is(RoleKind::InactiveVpc)) {
          add_peer(port, src, st.role.rank().value_or(0), false);
        }
        break;
      case StatusKind::SelfPromoted:
        if (role_.is(RoleKind::InactiveVpc) && st.epoch > epoch_) {
          epoch_ = st.epoch;
          active_ = src;
          port.record("follow", {{"active", static_cast<std::int64_t>(src.value)},
                                 {"epoch", static_cast<std::int64_t>(epoch_.value)}});
          port.send(src, make_status(port, StatusKind::Ready));
        }
        break;
      case StatusKind::HandoverAbort:
        if (handover_ && handover_->old_side && !handover_->aborted) {
          handover_->aborted = true;
          drop_successors();
          port.record("handover_cancelled", {{"reason", 1}});
        }
        break;
      default: break;
    }
  }

  void drop_successors() {
    for (auto it = peers_.begin(); it != peers_.end();) {
      if (it->second.successor) it = peers_.erase(it);
      else ++it;
    }
  }

  // ---- release, disable, handover ----

  void handle(Port& port, NodeId, const ReleaseCmd& m) {
    if (!same_deployment(m.deployment_id) || !role_.promoted()) return;
    if (m.mode == ReleaseMode::Disable && role_.is(RoleKind::ActiveVpc)) {
      const Epoch e = epoch_;
      ++gen_;
      clear_deployment();
      role_ = transition(role_, Disable{});
      epoch_ = e;
      port.record("disabled", {{"epoch", static_cast<std::int64_t>(e.value)}});
      return;
    }
    port.record("released", {{"epoch", static_cast<std::int64_t>(epoch_.value)}});
    go_idle(port, Release{});
  }

  void handle(Port& port, NodeId, const HandoverCmd& m) {
    if (!role_.is(RoleKind::ActiveVpc) || !same_deployment(m.deployment_id)) {
      port.record("handover_ignored");
      return;
    }
    const Micros now = port.local_clock();
    if (m.handover_time <= now) {
      port.record("handover_in_past", {{"time", m.handover_time}});
      return;
    }
    if (port.self() == m.old_active && phase_ == Phase::Live) {
      handover_ = Handover{m.handover_time, true, false, m.abort_lead};
      add_peer(port, m.new_active, 0, true);
      port.set_timer(m.handover_time - now, tag(kHandover));
    } else if (port.self() == m.new_active && phase_ == Phase::AwaitHandover) {
      handover_ = Handover{m.handover_time, false, false, m.abort_lead};
      predecessor_ = m.old_active;
      port.set_timer(std::max<Micros>(m.handover_time - m.abort_lead - now, 0), tag(kAbortCheck));
      port.set_timer(m.handover_time - now, tag(kHandover));
    } else {
      port.record("handover_ignored");
      return;
    }
    port.record("handover_armed", {{"time", m.handover_time}, {"side", handover_->old_side ? 0 : 1}});
  }

  void abort_check(Port& port) {
    if (!handover_ || handover_->old_side || handover_->aborted) return;
    if (in_sync_) return;
    handover_->aborted = true;
    port.record("handover_abort", {{"seq", static_cast<std::int64_t>(state_.seq)}});
    Status st = make_status(port, StatusKind::HandoverAbort);
    port.send(vpcmo_, st);
    port.send(predecessor_, st);
  }

  void handover_due(Port& port) {
    if (!handover_ || !role_.is(RoleKind::ActiveVpc)) return;
    if (handover_->old_side) {
      if (handover_->aborted) return;
      bool successor_ready = false;
      for (const auto& [id, p] : peers_)
        if (p.successor && p.in_sync) successor_ready = true;
      drop_successors();
      if (!successor_ready) {
        handover_->aborted = true;
        port.record("handover_cancelled", {{"reason", 2}});
        return;
      }
      phase_ = Phase::HandedOver;
      port.record("handover_done", {{"seq", static_cast<std::int64_t>(state_.seq)}});
    } else {
      if (handover_->aborted || !in_sync_) {
        port.record("handover_failed", {{"seq", static_cast<std::int64_t>(state_.seq)}});
        return;
      }
      phase_ = Phase::Live;
      port.record("handover_take", {{"seq", static_cast<std::int64_t>(state_.seq)},
                                    {"epoch", static_cast<std::int64_t>(epoch_.value)}});
    }
  }

  NodeRuntimeConfig cfg_;
  std::uint64_t gen_{0};
  NodeRole role_;
  Epoch epoch_;
  std::optional<DeploymentSpec> spec_;
  Phase phase_{Phase::Fetching};
  std::vector<LoadedVpf> vpfs_;
  VpcState state_;
  Digest digest_{};
  std::uint64_t last_input_seq_{0};
  std::map<std::uint64_t, Digest> history_;
  std::map<std::uint64_t, Digest> pending_compare_;
  std::deque<ProcessData> inputs_;
  bool in_sync_{false};
  bool has_state_{false};

  std::map<NodeId, Peer> peers_;
  std::uint64_t round_{0};
  bool sync_running_{false};

  bool watchdog_pending_{false};
  Micros watchdog_deadline_{0};
  std::uint8_t last_sync_flags_{0};

  std::optional<Handover> handover_;
  bool await_handover_{false};

  NodeId vpcmo_;
  NodeId icps_;
  NodeId active_;
  NodeId predecessor_;
  NodeId registry_;
  std::vector<PeerEntry> known_inactives_;

  bool has_output_{false};
  std::map<std::string, double> last_output_;
  std::uint64_t last_output_input_seq_{0};
};

}  // namespace vpc
