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

#include "vpcorch/checker.hpp"
#include "vpcorch/node_runtime.hpp"
#include "vpcorch/orchestrator.hpp"
#include "vpcorch/process_endpoint.hpp"
#include "vpcorch/trace_io.hpp"
#include "vpcorch/vpf_registry.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace vpc {

enum class ScriptErrc {
  UnknownScenario,
  BadInjection,
  BadSelector,
  BadCluster,
};

using ScriptError = Error<ScriptErrc>;

inline constexpr NodeId kVpcmoId{1};
inline constexpr NodeId kRegistryId{2};
inline constexpr NodeId kIcpsId{3};

struct IrSpec {
  NodeId id;
  std::uint32_t cpu{2000};
  std::uint32_t mem{4096};
  bool late{false};  // starts powered off, joins via a Revive injection

  bool operator==(const IrSpec&) const = default;
};

struct ClusterSpec {
  std::vector<IrSpec> irs;
  LinkSpec link;                              // every pair of nodes
  std::map<LinkKey, LinkSpec> link_overrides; // directed
  Micros clock_sync_accuracy{1};
  std::map<NodeId, Micros> clock_offsets;
  ProfilePolicy profiles;
  Micros discovery_period{10'000};
  Micros release_delay{5'000};
};

// A VPF as published to the registry: descriptor plus artifact document.
struct VpfArtifact {
  VpfDescriptor descriptor;
  json artifact;
};

enum class FaultKind { Kill, Revive, Partition, CorruptBlob };

// Node selectors: "active", "inactive:<rank>", "vpcmo", "registry", "icps"
// or a numeric id. They are resolved against the VPCMO's plan when the
// injection fires, not when the script is written.
struct Injection {
  Micros at{0};
  FaultKind kind{FaultKind::Kill};
  std::string target;
  std::vector<std::string> group_a;
  std::vector<std::string> group_b;
  Micros until{kForever};
  int count{1};
};

inline Injection kill_injection(Micros at, std::string target) {
  Injection j;
  j.at = at;
  j.kind = FaultKind::Kill;
  j.target = std::move(target);
  return j;
}

inline Injection partition_injection(Micros at, std::vector<std::string> a, std::vector<std::string> b,
                                     Micros until) {
  Injection j;
  j.at = at;
  j.kind = FaultKind::Partition;
  j.group_a = std::move(a);
  j.group_b = std::move(b);
  j.until = until;
  return j;
}

struct Redeploy {
  Micros at{0};
  Micros handover_time{0};
  DeploymentSpec spec;
};

struct ScenarioScript {
  std::string scenario;
  ClusterSpec cluster;
  DeploymentSpec spec;
  std::vector<VpfArtifact> artifacts;
  Micros deploy_at{15'000};
  std::optional<Redeploy> redeploy;
  std::vector<Injection> injections;
  Micros duration{1'000'000};

  void validate() const {
    if (cluster.irs.empty()) throw ScriptError(ScriptErrc::BadCluster, "cluster has no IRs");
    for (const auto& inj : injections) {
      if (inj.at < 0 || inj.at >= duration) {
        throw ScriptError(ScriptErrc::BadInjection, "injection at " + std::to_string(inj.at) + " outside run");
      }
    }
    if (deploy_at >= duration) throw ScriptError(ScriptErrc::BadInjection, "deploy after end of run");
    spec.validate();
  }
};

struct ScenarioHooks {
  // Called for every placement decision; must be thread-safe under sweeps.
  std::function<void(const PlacementRecord&)> on_placement;
  bool keep_trace{true};
};

struct TraceReport {
  std::string scenario;
  std::uint64_t seed{0};
  Metrics metrics;
  std::vector<Violation> violations;
  std::string trace_hash;
  std::size_t event_count{0};
  json final_status;
  std::shared_ptr<const Trace> trace;
  std::string trace_jsonl;

  bool ok() const { return violations.empty(); }
};

// ---------------------------------------------------------------------------
// Defaults

inline std::vector<IrSpec> default_irs() {
  return {{NodeId{10}, 4000, 8192}, {NodeId{11}, 2000, 4096}, {NodeId{12}, 4000, 8192}, {NodeId{13}, 3000, 6144}};
}

inline VpfDescriptor make_descriptor(std::string id, SemVer v, std::string logic, ExecutionMode mode) {
  VpfDescriptor d;
  d.vpf_id = std::move(id);
  d.version = v;
  d.logic_name = std::move(logic);
  d.state_schema_id = d.logic_name + ".v1";
  d.mode = mode;
  return d;
}

inline std::vector<VpfArtifact> default_artifacts() {
  const auto cyc = ExecutionMode::cyclic(1'000);
  return {
      {make_descriptor("level-pid", {1, 0, 0}, "pid", cyc),
       json{{"input", "level"}, {"output", "valve"}, {"kp", 1.2}, {"ki", 0.5}, {"kd", 0.05}, {"setpoint", 50.0}}},
      {make_descriptor("level-pid", {1, 1, 0}, "pid", cyc),
       json{{"input", "level"}, {"output", "valve"}, {"kp", 1.2}, {"ki", 0.5}, {"kd", 0.05}, {"setpoint", 50.0}}},
      {make_descriptor("pressure-relay", {1, 0, 0}, "threshold", cyc),
       json{{"input", "pressure"}, {"output", "alarm"}, {"limit", 3.5}}},
      {make_descriptor("level-report", {1, 0, 0}, "passthrough", ExecutionMode::acyclic()),
       json{{"input", "level"}, {"output", "level_report"}}},
  };
}

inline DeploymentSpec default_spec() {
  DeploymentSpec s;
  s.deployment_id = "tank-1";
  const auto cyc = ExecutionMode::cyclic(1'000);
  s.vpfs = {make_descriptor("level-pid", {1, 0, 0}, "pid", cyc),
            make_descriptor("pressure-relay", {1, 0, 0}, "threshold", cyc),
            make_descriptor("level-report", {1, 0, 0}, "passthrough", ExecutionMode::acyclic())};
  return s;
}

inline ClusterSpec default_cluster() {
  ClusterSpec c;
  c.irs = default_irs();
  return c;
}

inline const std::vector<std::string>& scenario_ids() {
  static const std::vector<std::string> ids{"1", "2", "3a", "3b", "3c", "3c-isolated", "4"};
  return ids;
}

inline constexpr Micros kFaultAt = 200'000;
inline constexpr Micros kAfterFault = 200'000;

inline ScenarioScript make_script(const std::string& id) {
  ScenarioScript s;
  s.scenario = id;
  s.cluster = default_cluster();
  s.spec = default_spec();
  s.artifacts = default_artifacts();
  if (id == "1") {
    s.duration = 1'000'000;
  } else if (id == "2") {
    // 10^4 control periods after the deployment settles.
    s.duration = s.deploy_at + 10'000 * s.spec.control_period + 50'000;
  } else if (id == "3a") {
    s.injections.push_back(kill_injection(kFaultAt, "inactive:0"));
    s.duration = kFaultAt + kAfterFault;
  } else if (id == "3b") {
    s.injections.push_back(kill_injection(kFaultAt, "active"));
    s.duration = kFaultAt + kAfterFault;
  } else if (id == "3c") {
    s.injections.push_back(partition_injection(kFaultAt, {"active"}, {"inactive:0"}, 2 * kFaultAt));
    s.duration = 3 * kFaultAt;
  } else if (id == "3c-isolated") {
    s.injections.push_back(partition_injection(kFaultAt, {"inactive:0"}, {"others"}, 2 * kFaultAt));
    s.duration = 3 * kFaultAt;
  } else if (id == "4") {
    Redeploy r;
    r.at = 100'000;
    r.handover_time = 300'000;
    r.spec = default_spec();
    r.spec.vpfs[0].version = SemVer{1, 1, 0};
    s.redeploy = r;
    s.duration = 500'000;
  } else {
    throw ScriptError(ScriptErrc::UnknownScenario, "unknown scenario '" + id + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Cluster

inline SimConfig make_sim_config(const ClusterSpec& c, std::uint64_t seed) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.clock_sync_accuracy = c.clock_sync_accuracy;
  cfg.clock_offsets = c.clock_offsets;
  for (const auto& [k, l] : c.link_overrides) cfg.links[k] = l;
  std::vector<NodeId> all{kVpcmoId, kRegistryId, kIcpsId};
  for (const auto& ir : c.irs) all.push_back(ir.id);
  cfg.connect_all(all, c.link);
  return cfg;
}

struct Cluster {
  std::unique_ptr<Simulator> sim;
  std::shared_ptr<VpfRegistry> store;
  Hosted<Orchestrator>* vpcmo{nullptr};
  Hosted<RegistryServer>* registry{nullptr};
  Hosted<ProcessEndpoint>* icps{nullptr};
  std::map<NodeId, Hosted<VpcNode>*> irs;
  ProfilePolicy profiles;

  Orchestrator& orchestrator() { return vpcmo->logic(); }

  NodeId resolve(const std::string& sel, const std::string& deployment) const {
    if (sel == "vpcmo") return kVpcmoId;
    if (sel == "registry") return kRegistryId;
    if (sel == "icps") return kIcpsId;
    const auto& plans = vpcmo->logic().plans();
    auto plan = plans.find(deployment);
    if (sel == "active") {
      if (plan == plans.end()) throw ScriptError(ScriptErrc::BadSelector, "no plan for 'active'");
      return plan->second.active;
    }
    if (sel.rfind("inactive:", 0) == 0) {
      if (plan == plans.end()) throw ScriptError(ScriptErrc::BadSelector, "no plan for '" + sel + "'");
      const auto rank = static_cast<std::uint32_t>(std::stoul(sel.substr(9)));
      for (const auto& e : plan->second.inactive)
        if (e.rank == rank) return e.node;
      throw ScriptError(ScriptErrc::BadSelector, "no inactive with rank " + std::to_string(rank));
    }
    try {
      std::size_t used = 0;
      const auto v = std::stoul(sel, &used);
      if (used == sel.size()) return NodeId{static_cast<std::uint32_t>(v)};
    } catch (const std::exception&) {
    }
    throw ScriptError(ScriptErrc::BadSelector, "bad node selector '" + sel + "'");
  }
};

// Publishes the artifacts and fills in the digests of every VPF in `spec`.
inline void publish_artifacts(VpfRegistry& store, const std::vector<VpfArtifact>& artifacts) {
  for (const auto& a : artifacts) {
    if (store.try_fetch(a.descriptor.vpf_id, a.descriptor.version)) continue;
    const std::string doc = a.artifact.dump();
    store.publish(a.descriptor, Bytes(doc.begin(), doc.end()));
  }
}

inline void resolve_digests(const VpfRegistry& store, DeploymentSpec& spec) {
  for (auto& v : spec.vpfs) {
    if (auto rec = store.try_fetch(v.vpf_id, v.version)) v.artifact_digest = rec->descriptor.artifact_digest;
  }
}

inline Cluster build_cluster(const ClusterSpec& c, const std::string& deployment_id, std::uint64_t seed,
                             std::shared_ptr<VpfRegistry> store,
                             std::function<void(const PlacementRecord&)> on_placement = {}) {
  Cluster cl;
  cl.profiles = c.profiles;
  cl.store = std::move(store);
  const SimConfig cfg = make_sim_config(c, seed);
  const Micros max_lat = cfg.max_latency();
  cl.sim = std::make_unique<Simulator>(cfg);

  OrchestratorConfig oc;
  oc.registry = kRegistryId;
  oc.discovery_period = c.discovery_period;
  oc.max_link_latency = max_lat;
  oc.release_delay = c.release_delay;
  auto vpcmo = std::make_unique<Hosted<Orchestrator>>(c.profiles, oc);
  cl.vpcmo = vpcmo.get();
  if (on_placement) cl.vpcmo->logic().set_placement_observer(std::move(on_placement));
  cl.sim->add_node(kVpcmoId, std::move(vpcmo));

  auto reg = std::make_unique<Hosted<RegistryServer>>(c.profiles, std::shared_ptr<const VpfRegistry>(cl.store));
  cl.registry = reg.get();
  cl.sim->add_node(kRegistryId, std::move(reg));

  ProcessEndpointConfig pc;
  pc.deployment_id = deployment_id;
  for (const auto& ir : c.irs) pc.targets.push_back(ir.id);
  auto icps = std::make_unique<Hosted<ProcessEndpoint>>(c.profiles, pc);
  cl.icps = icps.get();
  cl.sim->add_node(kIcpsId, std::move(icps));

  for (const auto& ir : c.irs) {
    NodeRuntimeConfig nc;
    nc.descriptor.node_id = ir.id;
    nc.descriptor.cpu_capacity = ir.cpu;
    nc.descriptor.mem_capacity = ir.mem;
    const auto& l = cfg.links.at({ir.id, kVpcmoId});
    nc.descriptor.link_latency_estimate = static_cast<std::uint32_t>(l.base_latency + l.jitter_max / 2);
    nc.max_link_latency = max_lat;
    nc.max_jitter = cfg.max_jitter();
    nc.clock_accuracy = c.clock_sync_accuracy;
    auto node = std::make_unique<Hosted<VpcNode>>(c.profiles, nc);
    cl.irs[ir.id] = node.get();
    cl.sim->add_node(ir.id, std::move(node), !ir.late);
  }
  return cl;
}

inline CheckParams check_params_for(const ScenarioScript& s) {
  const SimConfig cfg = make_sim_config(s.cluster, 0);
  CheckParams p;
  p.miss_threshold = s.spec.miss_threshold;
  p.sync_period = s.spec.sync_period;
  p.jitter_max = cfg.max_jitter();
  p.clock_accuracy = s.cluster.clock_sync_accuracy;
  p.control_period = s.spec.control_period;
  p.discovery_period = s.cluster.discovery_period;
  p.max_link_latency = cfg.max_latency();
  p.links = cfg.links;
  p.spare_ir = s.cluster.irs.size() > 1 + s.spec.redundancy;
  return p;
}

// ---------------------------------------------------------------------------
// Scenario-specific checks on top of the generic invariants.

namespace detail {

inline std::optional<std::size_t> first_index(const Trace& t, std::string_view label,
                                              const std::function<bool(const SimEvent&)>& pred = {}) {
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const auto& e = t.events[i];
    if (e.kind == SimEventKind::Emit && e.label == label && (!pred || pred(e))) return i;
  }
  return std::nullopt;
}

inline std::vector<std::size_t> all_indices(const Trace& t, std::string_view label) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const auto& e = t.events[i];
    if (e.kind == SimEventKind::Emit && e.label == label) out.push_back(i);
  }
  return out;
}

inline void check_startup(const Trace& t, const ScenarioScript& s, std::vector<Violation>& v) {
  const char* steps[] = {"discovery", "ir_registered", "select", "promote_cmd(active)", "promote_cmd(inactive)",
                         "fetch", "ready"};
  std::optional<std::size_t> idx[7];
  idx[0] = first_index(t, "discovery");
  idx[1] = first_index(t, "ir_registered");
  idx[2] = first_index(t, "select");
  idx[3] = first_index(t, "promote_cmd", [](const SimEvent& e) { return e.at("role") == 2; });
  idx[4] = first_index(t, "promote_cmd", [](const SimEvent& e) { return e.at("role") == 1 && e.at("rank") == 0; });
  idx[5] = first_index(t, "fetch");
  idx[6] = first_index(t, "ready");
  for (int i = 0; i < 7; ++i) {
    if (!idx[i]) {
      v.push_back({"startup_order", 0, 0, std::string("missing step ") + steps[i]});
      return;
    }
    if (i > 0 && *idx[i] <= *idx[i - 1]) {
      v.push_back({"startup_order", *idx[i], t.events[*idx[i]].time,
                   std::string(steps[i]) + " before " + steps[i - 1]});
    }
  }
  const auto ready = all_indices(t, "ready");
  if (ready.size() < 1 + s.spec.redundancy) {
    v.push_back({"startup_order", 0, 0, "only " + std::to_string(ready.size()) + " members became ready"});
  }
}

inline void check_handover(const Trace& t, const ScenarioScript& s, std::vector<Violation>& v) {
  const Micros h = s.redeploy->handover_time;
  const auto take = first_index(t, "handover_take");
  const auto done = first_index(t, "handover_done");
  if (!take || !done) {
    v.push_back({"handover", 0, 0, "handover did not complete"});
    return;
  }
  const Micros slack = 2 * s.cluster.clock_sync_accuracy;
  for (auto i : {*take, *done}) {
    if (std::abs(t.events[i].time - h) > slack) {
      v.push_back({"handover", i, t.events[i].time, "authority moved away from the scheduled date"});
    }
  }
  const NodeId old_active = t.events[*done].src;
  const NodeId new_active = t.events[*take].src;
  std::optional<std::int64_t> old_last, new_first;
  for (auto i : all_indices(t, "emit")) {
    const auto& e = t.events[i];
    if (e.src == old_active) old_last = e.at("seq");
    if (e.src == new_active && !new_first) new_first = e.at("seq");
  }
  if (!old_last || !new_first || *new_first != *old_last + 1) {
    v.push_back({"handover_seq", *take, t.events[*take].time, "new active does not continue the old sequence"});
  }
  // Every member of the previous plan must end up released.
  const auto redeploy = first_index(t, "redeploy");
  std::set<NodeId> old_members;
  for (auto i : all_indices(t, "promote_cmd")) {
    if (redeploy && i < *redeploy) old_members.insert(NodeId{static_cast<std::uint32_t>(t.events[i].at("node"))});
  }
  for (auto n : old_members) {
    const auto rel = first_index(t, "released", [&](const SimEvent& e) { return e.src == n && e.time >= h; });
    if (!rel) v.push_back({"handover_release", 0, 0, "node " + std::to_string(n.value) + " was not released"});
  }
}

inline void check_emission_stream(const Trace& t, NodeId active, std::vector<Violation>& v) {
  std::optional<std::int64_t> prev;
  for (auto i : all_indices(t, "emit")) {
    const auto& e = t.events[i];
    if (e.src != active) continue;
    const auto in = e.at("input_seq");
    if (prev && in != *prev + 1) {
      v.push_back({"emission_stream", i, e.time, "active skipped input " + std::to_string(*prev + 1)});
    }
    prev = in;
  }
  if (!prev) v.push_back({"emission_stream", 0, 0, "active never emitted"});
}

}  // namespace detail

inline void scenario_checks(const ScenarioScript& s, const Trace& t, const Metrics& m, std::vector<Violation>& v) {
  const std::string& id = s.scenario;
  auto need = [&](bool cond, const char* inv, std::string detail) {
    if (!cond) v.push_back({inv, 0, 0, std::move(detail)});
  };
  if (id == "1") detail::check_startup(t, s, v);
  if (id == "2") {
    need(m.missed_control_cycles == 0, "missed_cycles", std::to_string(m.missed_control_cycles) + " cycles missed");
    need(m.accepted >= 10'000, "cycle_count", "only " + std::to_string(m.accepted) + " outputs accepted");
  }
  if (id == "3a") {
    need(m.backup_requests >= 1, "backup_request", "no backup request issued");
    need(m.missed_control_cycles == 0, "missed_cycles", std::to_string(m.missed_control_cycles) + " cycles missed");
  }
  if (id == "3b") {
    need(m.self_promotes == 1, "single_self_promote", std::to_string(m.self_promotes) + " self-promotions");
  }
  if (id == "3c" || id == "3c-isolated") {
    need(m.double_status >= 1, "double_status", "VPCMO never saw two active claims");
    need(m.disables == 1, "single_disable", std::to_string(m.disables) + " nodes disabled");
    need(m.double_active_window_us <= s.injections.front().until - s.injections.front().at +
                                          2 * s.cluster.discovery_period,
         "double_active_bounded", "double-active window " + std::to_string(m.double_active_window_us) + " us");
  }
  if (id == "3c-isolated") {
    need(m.missed_control_cycles == 0, "missed_cycles", std::to_string(m.missed_control_cycles) + " cycles missed");
    if (auto take = detail::first_index(t, "ready", [](const SimEvent& e) { return e.at("role") == 2; })) {
      detail::check_emission_stream(t, t.events[*take].src, v);
    }
  }
  if (id == "4") {
    need(m.missed_control_cycles == 0, "missed_cycles", std::to_string(m.missed_control_cycles) + " cycles missed");
    detail::check_handover(t, s, v);
  }
}

// ---------------------------------------------------------------------------
// Running

inline Cluster prepare(const ScenarioScript& s, std::uint64_t seed, const ScenarioHooks& hooks,
                       DeploymentSpec& spec, std::optional<Redeploy>& redeploy) {
  s.validate();
  auto store = std::make_shared<VpfRegistry>();
  publish_artifacts(*store, s.artifacts);
  spec = s.spec;
  resolve_digests(*store, spec);
  redeploy = s.redeploy;
  if (redeploy) resolve_digests(*store, redeploy->spec);
  return build_cluster(s.cluster, s.spec.deployment_id, seed, store, hooks.on_placement);
}

inline void schedule_script(Cluster& cl, const ScenarioScript& s, const DeploymentSpec& spec,
                            const std::optional<Redeploy>& redeploy) {
  Simulator& sim = *cl.sim;
  Cluster* c = &cl;
  const std::string dep = spec.deployment_id;
  sim.schedule_call(s.deploy_at, kVpcmoId, [c, spec](Context& ctx) {
    SimPort port(ctx, c->profiles);
    try {
      c->orchestrator().deploy(port, spec);
    } catch (const OrchError&) {
      // already recorded as deploy_failed
    }
  });
  if (redeploy) {
    const Redeploy r = *redeploy;
    sim.schedule_call(r.at, kVpcmoId, [c, r, dep](Context& ctx) {
      SimPort port(ctx, c->profiles);
      try {
        c->orchestrator().redeploy(port, dep, r.spec, r.handover_time);
      } catch (const OrchError&) {
      }
    });
  }
  for (const auto& inj : s.injections) {
    sim.schedule_call(inj.at, kVpcmoId, [c, inj, dep](Context& ctx) {
      Simulator& sim = *c->sim;
      const Micros now = ctx.now();
      switch (inj.kind) {
        case FaultKind::Kill: sim.kill_node(c->resolve(inj.target, dep), now); break;
        case FaultKind::Revive: sim.revive_node(c->resolve(inj.target, dep), now); break;
        case FaultKind::CorruptBlob: c->registry->logic().corrupt_next(inj.count); break;
        case FaultKind::Partition: {
          std::set<NodeId> a, b;
          for (const auto& sel : inj.group_a) a.insert(c->resolve(sel, dep));
          for (const auto& sel : inj.group_b) {
            if (sel == "others") {
              for (auto id : sim.node_ids())
                if (!a.count(id)) b.insert(id);
            } else {
              b.insert(c->resolve(sel, dep));
            }
          }
          sim.partition(a, b, now, inj.until);
          break;
        }
      }
    });
  }
}

inline TraceReport run_scenario(const ScenarioScript& s, std::uint64_t seed, const ScenarioHooks& hooks = {}) {
  DeploymentSpec spec;
  std::optional<Redeploy> redeploy;
  Cluster cl = prepare(s, seed, hooks, spec, redeploy);
  schedule_script(cl, s, spec, redeploy);
  const Trace& trace = cl.sim->run_until(s.duration);

  TraceReport r;
  r.scenario = s.scenario;
  r.seed = seed;
  r.event_count = trace.events.size();
  r.trace_jsonl = trace_to_jsonl(trace);
  r.trace_hash = content_hash(r.trace_jsonl);
  r.final_status = cl.orchestrator().status_json();

  CheckParams p = check_params_for(s);
  CheckResult res = check_trace(trace, p);
  r.metrics = res.metrics;
  r.violations = std::move(res.violations);
  scenario_checks(s, trace, r.metrics, r.violations);
  if (hooks.keep_trace) {
    r.trace = std::make_shared<const Trace>(trace);
  } else {
    r.trace_jsonl.clear();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRun {
  Micros kill_at{0};
  std::uint64_t seed{0};
  Metrics metrics;
  std::vector<Violation> violations;
};

struct SweepReport {
  std::string scenario;
  std::string target;
  std::vector<SweepRun> runs;
  std::size_t failing_runs{0};
  Micros worst_detection_us{0};
  Micros worst_output_gap_us{0};
  Micros worst_redundancy_gap_us{0};
};

// One run per (kill time, seed); runs are independent simulations spread
// over a small thread pool, then folded in grid order.
inline SweepReport sweep_failure_times(const ScenarioScript& base, const std::string& kill_target, Micros t_from,
                                       Micros t_to, Micros step, const std::vector<std::uint64_t>& seeds,
                                       const ScenarioHooks& hooks = {}, unsigned threads = 0) {
  SweepReport rep;
  rep.scenario = base.scenario;
  rep.target = kill_target;
  if (step <= 0 || t_to < t_from || seeds.empty()) return rep;
  std::vector<std::pair<Micros, std::uint64_t>> grid;
  for (Micros t = t_from; t < t_to; t += step)
    for (auto seed : seeds) grid.emplace_back(t, seed);
  rep.runs.resize(grid.size());

  ScenarioHooks run_hooks = hooks;
  run_hooks.keep_trace = false;
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        ScenarioScript s = base;
        std::erase_if(s.injections, [](const Injection& j) { return j.kind == FaultKind::Kill; });
        s.injections.push_back(kill_injection(grid[i].first, kill_target));
        s.duration = std::max(s.duration, grid[i].first + kAfterFault);
        TraceReport r = run_scenario(s, grid[i].second, run_hooks);
        rep.runs[i] = SweepRun{grid[i].first, grid[i].second, r.metrics, std::move(r.violations)};
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(grid.size()));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);

  for (const auto& run : rep.runs) {
    if (!run.violations.empty()) ++rep.failing_runs;
    rep.worst_detection_us = std::max(rep.worst_detection_us, run.metrics.failover_detection_us);
    rep.worst_output_gap_us = std::max(rep.worst_output_gap_us, run.metrics.max_output_gap_us);
    rep.worst_redundancy_gap_us = std::max(rep.worst_redundancy_gap_us, run.metrics.redundancy_gap_us);
  }
  return rep;
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t n) {
  std::vector<std::uint64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = first + i;
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline json to_json_value(const Metrics& m) {
  return json{{"missed_control_cycles", m.missed_control_cycles},
              {"failover_detection_us", m.failover_detection_us},
              {"double_active_window_us", m.double_active_window_us},
              {"redundancy_gap_us", m.redundancy_gap_us},
              {"max_output_gap_us", m.max_output_gap_us},
              {"latency_percentiles",
               {{"p50", m.latency.p50}, {"p90", m.latency.p90}, {"p99", m.latency.p99}, {"max", m.latency.max}}},
              {"samples", m.samples},
              {"accepted", m.accepted},
              {"rejected", m.rejected},
              {"self_promotes", m.self_promotes},
              {"disables", m.disables},
              {"backup_requests", m.backup_requests},
              {"double_status", m.double_status}};
}

inline json to_json_value(const Violation& v) {
  return json{{"invariant", v.invariant}, {"event_index", v.event_index}, {"time", v.time}, {"detail", v.detail}};
}

inline json to_json_value(const TraceReport& r) {
  json vs = json::array();
  for (const auto& v : r.violations) vs.push_back(to_json_value(v));
  return json{{"scenario", r.scenario},       {"seed", r.seed},           {"ok", r.ok()},
              {"trace_hash", r.trace_hash},   {"events", r.event_count},  {"metrics", to_json_value(r.metrics)},
              {"violations", vs},             {"final_status", r.final_status}};
}

inline json to_json_value(const SweepReport& r) {
  json runs = json::array();
  for (const auto& run : r.runs) {
    json vs = json::array();
    for (const auto& v : run.violations) vs.push_back(to_json_value(v));
    runs.push_back({{"kill_at", run.kill_at},
                    {"seed", run.seed},
                    {"detection_us", run.metrics.failover_detection_us},
                    {"max_output_gap_us", run.metrics.max_output_gap_us},
                    {"redundancy_gap_us", run.metrics.redundancy_gap_us},
                    {"self_promotes", run.metrics.self_promotes},
                    {"violations", vs}});
  }
  return json{{"scenario", r.scenario},
              {"target", r.target},
              {"runs", r.runs.size()},
              {"failing_runs", r.failing_runs},
              {"worst_detection_us", r.worst_detection_us},
              {"worst_output_gap_us", r.worst_output_gap_us},
              {"worst_redundancy_gap_us", r.worst_redundancy_gap_us},
              {"grid", runs}};
}

inline std::string metrics_csv(const TraceReport& r) {
  const auto& m = r.metrics;
  std::string out =
      "scenario,seed,missed_control_cycles,failover_detection_us,double_active_window_us,redundancy_gap_us,"
      "max_output_gap_us,latency_p50,latency_p90,latency_p99,latency_max,accepted,rejected,violations\n";
  out += r.scenario + ',' + std::to_string(r.seed) + ',' + std::to_string(m.missed_control_cycles) + ',' +
         std::to_string(m.failover_detection_us) + ',' + std::to_string(m.double_active_window_us) + ',' +
         std::to_string(m.redundancy_gap_us) + ',' + std::to_string(m.max_output_gap_us) + ',' +
         std::to_string(m.latency.p50) + ',' + std::to_string(m.latency.p90) + ',' + std::to_string(m.latency.p99) +
         ',' + std::to_string(m.latency.max) + ',' + std::to_string(m.accepted) + ',' + std::to_string(m.rejected) +
         ',' + std::to_string(r.violations.size()) + '\n';
  return out;
}

}  // namespace vpc
