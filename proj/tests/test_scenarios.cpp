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

#include "vpcorch/scenario.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace vpc {
namespace {

constexpr std::uint64_t kGoldenSeed = 42;

std::filesystem::path manifest_path() { return std::filesystem::path(VPC_GOLDEN_DIR) / "manifest.json"; }

json load_manifest() {
  std::ifstream in(manifest_path());
  if (!in) return json::object();
  return json::parse(in);
}

class Scenario : public ::testing::TestWithParam<std::string> {};

TEST_P(Scenario, RunsCleanAtGoldenSeed) {
  const TraceReport r = run_scenario(make_script(GetParam()), kGoldenSeed);
  for (const auto& v : r.violations) ADD_FAILURE() << v.invariant << " @" << v.time << ": " << v.detail;
  EXPECT_EQ(r.metrics.rejected, GetParam() == "3c-isolated" ? 1u : 0u);
}

TEST_P(Scenario, SameSeedSameTraceBytes) {
  ScenarioScript s = make_script(GetParam());
  s.duration = std::min<Micros>(s.duration, 600'000);
  const TraceReport a = run_scenario(s, 7);
  const TraceReport b = run_scenario(s, 7);
  EXPECT_EQ(a.trace_jsonl, b.trace_jsonl);
  EXPECT_EQ(a.trace_hash, b.trace_hash);
  const TraceReport c = run_scenario(s, 8);
  EXPECT_NE(a.trace_hash, c.trace_hash);
}

INSTANTIATE_TEST_SUITE_P(All, Scenario, ::testing::Values("1", "2", "3a", "3b", "3c", "3c-isolated", "4"),
                         [](const auto& info) {
                           std::string n = info.param;
                           std::replace(n.begin(), n.end(), '-', '_');
                           return "S" + n;
                         });

// Set VPC_UPDATE_GOLDEN=1 to rewrite the manifest after an intended change.
TEST(Golden, TraceHashesMatchManifest) {
  json manifest = load_manifest();
  const bool update = std::getenv("VPC_UPDATE_GOLDEN") != nullptr;
  json fresh = {{"seed", kGoldenSeed}, {"scenarios", json::object()}};
  for (const std::string id : {"1", "2", "3a", "3b", "3c", "3c-isolated", "4"}) {
    const TraceReport r = run_scenario(make_script(id), kGoldenSeed);
    fresh["scenarios"][id] = {{"trace_sha256", r.trace_hash}, {"events", r.event_count}};
    if (update) continue;
    ASSERT_TRUE(manifest.contains("scenarios") && manifest["scenarios"].contains(id)) << "no golden entry for " << id;
    EXPECT_EQ(manifest["scenarios"][id]["trace_sha256"].get<std::string>(), r.trace_hash) << "scenario " << id;
    EXPECT_EQ(manifest["scenarios"][id]["events"].get<std::size_t>(), r.event_count) << "scenario " << id;
  }
  if (update) std::ofstream(manifest_path()) << fresh.dump(2) << '\n';
}

TEST(ScenarioDetails, StartupOrder) {
  const TraceReport r = run_scenario(make_script("1"), kGoldenSeed);
  const Trace& t = *r.trace;
  auto first = [&](std::string_view label, std::int64_t role = -1) {
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      const auto& e = t.events[i];
      if (e.label == label && (role < 0 || e.at("role") == role)) return i;
    }
    return t.events.size();
  };
  std::size_t reg = t.events.size();
  for (std::size_t i = 0; i < t.events.size(); ++i)
    if (t.events[i].kind == SimEventKind::Deliver && t.events[i].label == std::string_view("Register")) {
      reg = i;
      break;
    }
  const std::vector<std::size_t> order{first("discovery"), reg, first("select"), first("promote_cmd", 2),
                                       first("promote_cmd", 1), first("vpf_served"), first("ready")};
  for (std::size_t i = 1; i < order.size(); ++i) {
    EXPECT_LT(order[i - 1], order[i]) << "step " << i;
  }
  EXPECT_LT(order.back(), t.events.size());
}

TEST(ScenarioDetails, PartitionResolvesToOneActive) {
  const TraceReport r = run_scenario(make_script("3c"), kGoldenSeed);
  EXPECT_GE(r.metrics.double_status, 1u);
  EXPECT_EQ(r.metrics.disables, 1u);
  EXPECT_EQ(r.metrics.self_promotes, 1u);
  int actives = 0;
  for (const auto& fs : r.trace->final_states) {
    const json j = json::parse(fs.state_json);
    if (j.contains("role") && j["role"].is_object() && j["role"].value("kind", "") == "active") ++actives;
  }
  EXPECT_LE(actives, 1);
}

TEST(ScenarioDetails, HandoverContinuesSequence) {
  const TraceReport r = run_scenario(make_script("4"), kGoldenSeed);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.metrics.missed_control_cycles, 0u);
  const Trace& t = *r.trace;
  std::int64_t last_old = -1, first_new = -1, old_epoch = -1;
  for (const auto& e : t.events) {
    if (e.label != "accept") continue;
    if (old_epoch < 0) old_epoch = e.at("epoch");
    if (e.at("epoch") == old_epoch) last_old = e.at("seq");
    else if (first_new < 0) first_new = e.at("seq");
  }
  ASSERT_GT(last_old, 0);
  EXPECT_EQ(first_new, last_old + 1);
}

TEST(ScenarioDetails, ClockOffsetsAcrossHandover) {
  for (Micros icps : {-1, 0, 1}) {
    for (Micros olds : {-1, 1}) {
      for (Micros news : {-1, 1}) {
        ScenarioScript s = make_script("4");
        s.cluster.clock_offsets = {{kIcpsId, icps}, {NodeId{10}, olds}, {NodeId{12}, olds},
                                   {NodeId{11}, news}, {NodeId{13}, news}};
        const TraceReport r = run_scenario(s, 3);
        EXPECT_TRUE(r.ok()) << icps << olds << news;
        EXPECT_EQ(r.metrics.rejected, 0u);
        EXPECT_EQ(r.metrics.missed_control_cycles, 0u);
      }
    }
  }
}

TEST(ScenarioScripts, Validation) {
  EXPECT_THROW(make_script("9"), ScriptError);
  ScenarioScript s = make_script("1");
  s.injections.push_back(kill_injection(s.duration, "active"));
  EXPECT_THROW(s.validate(), ScriptError);
  s = make_script("1");
  s.cluster.irs.clear();
  EXPECT_THROW(s.validate(), ScriptError);
}

TEST(ScenarioScripts, CorruptBlobFallsBackToAnotherIr) {
  ScenarioScript s = make_script("1");
  s.duration = 200'000;
  Injection j;
  j.at = 1000;
  j.kind = FaultKind::CorruptBlob;
  j.count = 1;
  s.injections.push_back(j);
  const TraceReport r = run_scenario(s, kGoldenSeed);
  std::size_t mismatches = 0;
  for (const auto& e : r.trace->events) mismatches += e.label == "digest_mismatch";
  EXPECT_EQ(mismatches, 1u);
  EXPECT_GT(r.metrics.accepted, 100u);
}

}  // namespace
}  // namespace vpc
