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

#include "vpcorch/checker.hpp"
#include "vpcorch/scenario.hpp"

#include <gtest/gtest.h>

namespace vpc {
namespace {

// One clean fault-free run shared by every mutation below.
const TraceReport& clean_run() {
  static const TraceReport r = [] {
    ScenarioScript s = make_script("1");
    s.duration = 300'000;
    return run_scenario(s, 42);
  }();
  return r;
}

CheckParams params() { return check_params_for(make_script("1")); }

std::vector<std::string> invariants(const Trace& t, const CheckParams& p = params()) {
  std::vector<std::string> out;
  for (const auto& v : check_invariants(t, p)) out.push_back(v.invariant);
  return out;
}

bool has(const std::vector<std::string>& v, const std::string& s) { return std::find(v.begin(), v.end(), s) != v.end(); }

std::size_t find_event(const Trace& t, std::string_view label, std::size_t nth = 0) {
  for (std::size_t i = 0; i < t.events.size(); ++i)
    if (t.events[i].kind == SimEventKind::Emit && t.events[i].label == label && nth-- == 0) return i;
  ADD_FAILURE() << "no event " << label;
  return 0;
}

NodeId inactive_node(const Trace& t) {
  for (const auto& e : t.events)
    if (e.label == "promoted" && e.at("role") == 1) return e.src;
  return NodeId{};
}

TEST(Checker, CleanRunHasNoViolations) {
  const auto& r = clean_run();
  ASSERT_TRUE(r.trace);
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(invariants(*r.trace).empty());
  EXPECT_GT(r.metrics.accepted, 250u);
  EXPECT_EQ(r.metrics.missed_control_cycles, 0u);
}

TEST(Checker, EmissionFromInactiveIsFlagged) {
  Trace t = *clean_run().trace;
  const std::size_t at = find_event(t, "cycle", 100);
  SimEvent e = t.events[at];
  e.src = e.dst = inactive_node(t);
  e.label = "emit";
  e.attr_count = 0;
  e.add("epoch", 1);
  e.add("seq", 999);
  e.add("input_seq", 999);
  e.add("role", 1);
  t.events.insert(t.events.begin() + static_cast<std::ptrdiff_t>(at) + 1, e);
  EXPECT_TRUE(has(invariants(t), "emission_safety"));
}

TEST(Checker, DivergentReplicaDigestIsFlagged) {
  Trace t = *clean_run().trace;
  const NodeId inactive = inactive_node(t);
  for (auto& e : t.events) {
    if (e.label == "cycle" && e.src == inactive && e.at("seq") == 120) {
      for (std::size_t a = 0; a < e.attr_count; ++a)
        if (e.attrs[a].key == "digest") e.attrs[a].value ^= 1;
    }
  }
  EXPECT_TRUE(has(invariants(t), "replica_consistency"));
}

TEST(Checker, RepeatedAcceptBreaksFencing) {
  Trace t = *clean_run().trace;
  const std::size_t at = find_event(t, "accept", 50);
  t.events.insert(t.events.begin() + static_cast<std::ptrdiff_t>(at) + 1, t.events[at]);
  EXPECT_TRUE(has(invariants(t), "fencing"));
}

TEST(Checker, MissingOutputsGiveGapAndMissedCycles) {
  Trace t = *clean_run().trace;
  const Micros from = 100'000, to = 140'000;
  std::erase_if(t.events, [&](const SimEvent& e) { return e.label == "accept" && e.time >= from && e.time < to; });
  const auto r = check_trace(t, params());
  std::vector<std::string> inv;
  for (const auto& v : r.violations) inv.push_back(v.invariant);
  EXPECT_TRUE(has(inv, "actuator_gap"));
  EXPECT_GE(r.metrics.missed_control_cycles, 39u);
  EXPECT_LE(r.metrics.missed_control_cycles, 41u);
}

TEST(Checker, TimeRegressionAndFifo) {
  Trace t = *clean_run().trace;
  std::swap(t.events[200], t.events[400]);
  EXPECT_TRUE(has(invariants(t), "time_order"));

  Trace f = *clean_run().trace;
  std::vector<std::size_t> deliveries;
  for (std::size_t i = 0; i < f.events.size(); ++i) {
    const auto& e = f.events[i];
    if (e.kind == SimEventKind::Deliver && e.src == kIcpsId) deliveries.push_back(i);
  }
  ASSERT_GT(deliveries.size(), 10u);
  // Make a later delivery on the same link claim an earlier send time.
  const SimEvent& first = f.events[deliveries[2]];
  for (std::size_t j = 3; j < deliveries.size(); ++j) {
    auto& e = f.events[deliveries[j]];
    if (e.dst != first.dst) continue;
    e.attrs[0].value = first.at("sent_at") - 1;
    break;
  }
  EXPECT_TRUE(has(invariants(f), "fifo"));
}

TEST(Checker, LinkLatencyBound) {
  Trace t = *clean_run().trace;
  CheckParams p = params();
  p.links = make_sim_config(make_script("1").cluster, 42).links;
  EXPECT_TRUE(invariants(t, p).empty());
  for (auto& e : t.events) {
    if (e.kind == SimEventKind::Deliver) {
      e.attrs[0].value = e.time - 151;
      break;
    }
  }
  EXPECT_TRUE(has(invariants(t, p), "link_latency"));
}

TEST(Checker, GoldenHashMismatchIsDeterminismViolation) {
  CheckParams p = params();
  p.expected_hash = clean_run().trace_hash;
  p.actual_hash = clean_run().trace_hash;
  EXPECT_TRUE(invariants(*clean_run().trace, p).empty());
  std::string mutated = clean_run().trace_jsonl;
  mutated[mutated.size() / 2] ^= 1;
  p.actual_hash = content_hash(mutated);
  EXPECT_TRUE(has(invariants(*clean_run().trace, p), "determinism"));
}

// Synthetic trace: active killed, no takeover ever happens.
TEST(Checker, UndetectedActiveLoss) {
  Trace t;
  auto emit = [&](Micros at, NodeId n, std::string_view label, std::initializer_list<Attr> attrs) {
    SimEvent e;
    e.time = at;
    e.src = e.dst = n;
    e.label = label;
    for (const auto& a : attrs) e.add(a.key, a.value);
    t.events.push_back(e);
  };
  emit(0, NodeId{10}, "promoted", {{"role", 2}});
  emit(10, NodeId{10}, "ready", {{"role", 2}, {"phase", 1}});
  emit(20, NodeId{10}, "peer_added", {{"peer", 11}});
  SimEvent kill;
  kill.time = 1000;
  kill.kind = SimEventKind::NodeKill;
  kill.src = kill.dst = NodeId{10};
  kill.label = "kill";
  t.events.push_back(kill);
  emit(100'000, NodeId{11}, "idle", {});
  auto inv = invariants(t);
  EXPECT_TRUE(has(inv, "detection_bound"));
  EXPECT_TRUE(has(inv, "redundancy_convergence"));
}

TEST(Checker, BoundsFromDefaults) {
  CheckParams p;
  EXPECT_EQ(p.detection_bound(), 30'051);
  EXPECT_EQ(p.gap_bound(), 31'051);
  EXPECT_EQ(p.backup_bound(), 30'050);
}

}  // namespace
}  // namespace vpc
