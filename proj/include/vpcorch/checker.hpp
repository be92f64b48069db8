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

#include "vpcorch/simnet.hpp"
#include "vpcorch/stats.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vpc {

struct CheckParams {
  std::uint32_t miss_threshold{3};
  Micros sync_period{10'000};
  Micros jitter_max{50};
  Micros clock_accuracy{1};
  Micros control_period{1'000};
  Micros discovery_period{10'000};
  Micros max_link_latency{150};
  std::map<LinkKey, LinkSpec> links;  // empty skips the per-link bound check
  bool spare_ir{true};                // a free IR exists to restore redundancy
  std::optional<std::string> expected_hash;
  std::optional<std::string> actual_hash;

  Micros detection_bound() const {
    return static_cast<Micros>(miss_threshold) * sync_period + jitter_max + clock_accuracy;
  }
  Micros backup_bound() const { return static_cast<Micros>(miss_threshold) * sync_period + jitter_max; }
  Micros gap_bound() const { return detection_bound() + control_period; }
  Micros convergence_bound() const {
    return detection_bound() + discovery_period + 6 * max_link_latency;
  }
};

struct Violation {
  std::string invariant;
  std::size_t event_index{0};
  Micros time{0};
  std::string detail;

  bool operator==(const Violation&) const = default;
};

struct Metrics {
  std::uint64_t missed_control_cycles{0};
  Micros failover_detection_us{0};
  Micros double_active_window_us{0};
  Micros redundancy_gap_us{0};
  Micros max_output_gap_us{0};
  Percentiles latency;
  std::uint64_t samples{0};
  std::uint64_t accepted{0};
  std::uint64_t rejected{0};
  std::uint64_t self_promotes{0};
  std::uint64_t disables{0};
  std::uint64_t backup_requests{0};
  std::uint64_t double_status{0};

  bool operator==(const Metrics&) const = default;
};

struct CheckResult {
  std::vector<Violation> violations;
  Metrics metrics;
};

namespace detail {

constexpr std::int64_t kRoleIdle = 0;
constexpr std::int64_t kRoleInactive = 1;
constexpr std::int64_t kRoleActive = 2;
constexpr std::int64_t kRoleDisabled = 3;

struct NodeView {
  std::int64_t role{kRoleIdle};
  bool live{false};          // active that currently owns emission
  bool self_promoted{false};
  bool alive{true};
  std::set<NodeId> peers;
};

struct PendingFailure {
  NodeId node;
  Micros at{0};
  std::size_t index{0};
  bool active{false};
  bool detected{false};
  bool restored{false};
  bool needs_detection{false};
};

}  // namespace detail

// Single pass over the trace. Node roles are rebuilt from the runtime's own
// records, so the checker needs no access to live objects.
inline CheckResult check_trace(const Trace& trace, const CheckParams& p) {
  using namespace detail;
  CheckResult out;
  auto& v = out.violations;
  auto& m = out.metrics;
  auto flag = [&](const char* inv, std::size_t i, Micros t, std::string d) {
    v.push_back(Violation{inv, i, t, std::move(d)});
  };

  std::map<NodeId, NodeView> nodes;
  std::map<LinkKey, Micros> last_sent_on_link;
  // Replicas are compared within one epoch: a stale active that lost the
  // fencing race may keep computing on a diverged state.
  std::map<std::pair<std::int64_t, std::uint64_t>, std::pair<std::int64_t, NodeId>> digest_at_seq;
  std::vector<PendingFailure> failures;
  std::vector<std::int64_t> latencies;
  std::map<std::uint64_t, Micros> sample_time;
  std::set<std::uint64_t> accepted_inputs;
  std::optional<std::pair<std::int64_t, std::int64_t>> fence;
  std::optional<Micros> last_accept;
  std::optional<Micros> split_since;  // start of a double-active window
  Micros prev_time = 0;

  auto live_actives = [&]() {
    int n = 0;
    bool split = false;
    for (const auto& [id, nv] : nodes) {
      if (nv.live) {
        ++n;
        split = split || nv.self_promoted;
      }
    }
    return std::pair{n, split};
  };
  auto update_split = [&](Micros t) {
    auto [n, split] = live_actives();
    const bool now_split = n >= 2 && split;
    if (now_split && !split_since) split_since = t;
    if (!now_split && split_since) {
      m.double_active_window_us += t - *split_since;
      split_since.reset();
    }
  };
  auto leave_role = [&](NodeView& nv, std::int64_t role) {
    nv.role = role;
    nv.live = false;
    nv.self_promoted = false;
    nv.peers.clear();
  };

  const auto& ev = trace.events;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const SimEvent& e = ev[i];
    if (e.time < prev_time) flag("time_order", i, e.time, "event time goes backwards");
    prev_time = e.time;

    switch (e.kind) {
      case SimEventKind::Deliver: {
        const Micros sent = e.at("sent_at");
        const Micros lat = e.time - sent;
        latencies.push_back(lat);
        const LinkKey key{e.src, e.dst};
        if (auto it = p.links.find(key); it != p.links.end()) {
          if (lat < it->second.base_latency || lat > it->second.base_latency + it->second.jitter_max) {
            flag("link_latency", i, e.time, "latency " + std::to_string(lat) + " outside link bounds");
          }
        }
        auto [it, fresh] = last_sent_on_link.try_emplace(key, sent);
        if (!fresh) {
          if (sent < it->second) flag("fifo", i, e.time, "delivery overtook an earlier send");
          it->second = sent;
        }
        continue;
      }
      case SimEventKind::NodeKill: {
        auto& nv = nodes[e.src];
        PendingFailure f{e.src, e.time, i, nv.live, false, false, false};
        if (nv.live) {
          // Someone must take over if a synchronized standby exists.
          f.needs_detection = !nv.peers.empty();
        } else if (nv.role == kRoleInactive) {
          for (const auto& [id, other] : nodes) {
            if (other.live && other.alive && other.peers.count(e.src)) f.needs_detection = true;
          }
        }
        if (f.needs_detection) failures.push_back(f);
        nv.alive = false;
        leave_role(nv, kRoleIdle);
        update_split(e.time);
        continue;
      }
      case SimEventKind::NodeRevive:
        nodes[e.src].alive = true;
        continue;
      case SimEventKind::Emit:
        break;
      default:
        continue;
    }

    const std::string_view label = e.label;
    auto& nv = nodes[e.src];
    if (label == "promoted") {
      nv.role = e.at("role");
      nv.live = false;
      nv.self_promoted = false;
      nv.peers.clear();
    } else if (label == "ready") {
      if (e.at("role") == kRoleActive && e.at("phase") == 1) nv.live = true;
      update_split(e.time);
    } else if (label == "handover_take") {
      nv.role = kRoleActive;
      nv.live = true;
      update_split(e.time);
    } else if (label == "self_promote") {
      ++m.self_promotes;
      nv.role = kRoleActive;
      nv.live = true;
      nv.self_promoted = true;
      const NodeId old{static_cast<std::uint32_t>(e.at("old_active"))};
      for (auto& f : failures) {
        if (f.active && !f.detected && f.node == old) {
          f.detected = true;
          const Micros d = e.time - f.at;
          m.failover_detection_us = std::max(m.failover_detection_us, d);
          if (d > p.detection_bound()) {
            flag("detection_bound", i, e.time, "self-promotion " + std::to_string(d) + " us after kill");
          }
        }
      }
      update_split(e.time);
    } else if (label == "handover_done") {
      nv.live = false;
      update_split(e.time);
    } else if (label == "disabled") {
      ++m.disables;
      leave_role(nv, kRoleDisabled);
      update_split(e.time);
      if (live_actives().first > 1) flag("single_active", i, e.time, "more than one active after disable");
    } else if (label == "released" || label == "idle" || label == "vpf_fault") {
      leave_role(nv, kRoleIdle);
      update_split(e.time);
    } else if (label == "peer_added") {
      const NodeId peer{static_cast<std::uint32_t>(e.at("peer"))};
      nv.peers.insert(peer);
      for (auto& f : failures) {
        if (f.restored || peer == f.node || e.time < f.at) continue;
        f.restored = true;
        const Micros gap = e.time - f.at;
        m.redundancy_gap_us = std::max(m.redundancy_gap_us, gap);
        if (p.spare_ir && gap > p.convergence_bound()) {
          flag("redundancy_convergence", i, e.time, "standby restored " + std::to_string(gap) + " us after loss");
        }
      }
    } else if (label == "peer_failed") {
      nv.peers.erase(NodeId{static_cast<std::uint32_t>(e.at("peer"))});
    } else if (label == "backup_request") {
      ++m.backup_requests;
      const NodeId failed{static_cast<std::uint32_t>(e.at("failed"))};
      for (auto& f : failures) {
        if (f.active || f.detected || f.node != failed) continue;
        f.detected = true;
        const Micros d = e.time - f.at;
        m.failover_detection_us = std::max(m.failover_detection_us, d);
        if (d > p.backup_bound()) {
          flag("detection_bound", i, e.time, "backup request " + std::to_string(d) + " us after kill");
        }
      }
    } else if (label == "emit") {
      if (nv.role != kRoleActive || e.at("role") != kRoleActive) {
        flag("emission_safety", i, e.time, "node " + std::to_string(e.src.value) + " emitted without the active role");
      }
    } else if (label == "cycle") {
      const auto seq = static_cast<std::uint64_t>(e.at("seq"));
      auto [it, fresh] = digest_at_seq.try_emplace({e.at("epoch"), seq}, e.at("digest"), e.src);
      if (!fresh && it->second.first != e.at("digest")) {
        flag("replica_consistency", i, e.time,
             "seq " + std::to_string(seq) + " digest differs between node " + std::to_string(it->second.second.value) +
                 " and node " + std::to_string(e.src.value));
      }
    } else if (label == "sample") {
      ++m.samples;
      sample_time[static_cast<std::uint64_t>(e.at("input_seq"))] = e.time;
    } else if (label == "accept") {
      ++m.accepted;
      const std::pair<std::int64_t, std::int64_t> point{e.at("epoch"), e.at("seq")};
      if (fence && !(point > *fence)) flag("fencing", i, e.time, "accepted output does not advance the fence");
      fence = point;
      accepted_inputs.insert(static_cast<std::uint64_t>(e.at("input_seq")));
      if (last_accept) {
        const Micros gap = e.time - *last_accept;
        m.max_output_gap_us = std::max(m.max_output_gap_us, gap);
        if (gap > p.gap_bound()) flag("actuator_gap", i, e.time, "no accepted output for " + std::to_string(gap) + " us");
      }
      last_accept = e.time;
    } else if (label == "reject") {
      ++m.rejected;
    } else if (label == "double_active") {
      ++m.double_status;
    }
  }

  const Micros end = ev.empty() ? 0 : ev.back().time;
  if (split_since) m.double_active_window_us += end - *split_since;
  if (last_accept) {
    const Micros tail = end - *last_accept;
    m.max_output_gap_us = std::max(m.max_output_gap_us, tail);
    if (tail > p.gap_bound()) flag("actuator_gap", ev.size() - 1, end, "outputs stopped before the end of the run");
  }

  for (const auto& f : failures) {
    if (!f.detected && end - f.at > p.detection_bound()) {
      flag("detection_bound", f.index, f.at, "loss of node " + std::to_string(f.node.value) + " never detected");
    }
    if (p.spare_ir && !f.restored && end - f.at > p.convergence_bound()) {
      flag("redundancy_convergence", f.index, f.at, "standby for node " + std::to_string(f.node.value) + " never restored");
    }
  }

  // Count samples that should have produced an accepted output but did not.
  if (!accepted_inputs.empty()) {
    const std::uint64_t first = *accepted_inputs.begin();
    const Micros cutoff = end - (p.control_period + 2 * p.max_link_latency);
    for (const auto& [seq, t] : sample_time) {
      if (seq < first || t > cutoff) continue;
      if (!accepted_inputs.count(seq)) ++m.missed_control_cycles;
    }
  }

  if (p.expected_hash && p.actual_hash && *p.expected_hash != *p.actual_hash) {
    flag("determinism", 0, 0, "trace hash " + *p.actual_hash + " differs from golden " + *p.expected_hash);
  }

  m.latency = percentiles(std::move(latencies));
  return out;
}

inline std::vector<Violation> check_invariants(const Trace& trace, const CheckParams& p) {
  return check_trace(trace, p).violations;
}

}  // namespace vpc
