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

#include "support/pid_oracle.hpp"
#include "vpcorch/json_codec.hpp"
#include "vpcorch/vpf_catalog.hpp"
#include "vpcorch/vpf_registry.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iomanip>

namespace vpc {
namespace {

Bytes blob_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

VpfDescriptor desc(const std::string& logic, Micros period = 1000, SemVer v = {1, 0, 0}) {
  VpfDescriptor d;
  d.vpf_id = logic + "-vpf";
  d.version = v;
  d.mode = period > 0 ? ExecutionMode::cyclic(period) : ExecutionMode::acyclic();
  d.logic_name = logic;
  return d;
}

ProcessData sample(const std::string& key, double x) {
  ProcessData pd;
  pd.inputs[key] = x;
  return pd;
}

TEST(VpfCatalog, ProportionalOnly) {
  auto p = load_program(desc("pid"), blob_of(R"({"input":"e","output":"u","kp":1})"));
  auto s = execute_vpf(p, initial_state(p), sample("e", -2.5));
  EXPECT_EQ(s.outputs.at("u"), 2.5);
  EXPECT_EQ(s.state.size(), 16u);
}

TEST(VpfCatalog, ThresholdAndPassthrough) {
  auto relay = load_program(desc("threshold"), blob_of(R"({"input":"x","output":"y","limit":5})"));
  EXPECT_EQ(execute_vpf(relay, {}, sample("x", 4)).outputs.at("y"), 0.0);
  EXPECT_EQ(execute_vpf(relay, {}, sample("x", 6)).outputs.at("y"), 1.0);
  EXPECT_EQ(execute_vpf(relay, {}, sample("x", 5)).outputs.at("y"), 0.0);
  auto pass = load_program(desc("passthrough", 0), blob_of(R"({"input":"x","output":"y"})"));
  EXPECT_EQ(execute_vpf(pass, {}, sample("x", 3.25)).outputs.at("y"), 3.25);
}

TEST(VpfCatalog, Errors) {
  auto code = [](auto fn) {
    try {
      fn();
    } catch (const VpfError& e) {
      return static_cast<int>(e.code());
    }
    return -1;
  };
  EXPECT_EQ(code([] { load_program(desc("lua"), blob_of("{}")); }), static_cast<int>(VpfErrc::UnknownLogic));
  EXPECT_EQ(code([] { load_program(desc("pid"), blob_of("{")); }), static_cast<int>(VpfErrc::MalformedArtifact));
  EXPECT_EQ(code([] { load_program(desc("pid"), blob_of(R"({"input":"x"})")); }),
            static_cast<int>(VpfErrc::MalformedArtifact));
  auto pid = load_program(desc("pid"), blob_of(R"({"input":"x","output":"y"})"));
  EXPECT_EQ(code([&] { execute_vpf(pid, Bytes(3), sample("x", 1)); }), static_cast<int>(VpfErrc::MalformedState));
  EXPECT_EQ(code([&] { execute_vpf(pid, initial_state(pid), sample("z", 1)); }), static_cast<int>(VpfErrc::Fault));
  auto acyclic = load_program(desc("pid", 0), blob_of(R"({"input":"x","output":"y"})"));
  EXPECT_EQ(code([&] { execute_vpf(acyclic, initial_state(acyclic), sample("x", 1)); }),
            static_cast<int>(VpfErrc::MalformedArtifact));
  auto trip = load_program(desc("fault_injector"), blob_of(R"({"input":"x","output":"y","trip":2})"));
  EXPECT_EQ(execute_vpf(trip, {}, sample("x", 1)).outputs.at("y"), 1.0);
  EXPECT_EQ(code([&] { execute_vpf(trip, {}, sample("x", 3)); }), static_cast<int>(VpfErrc::Fault));
}

// Closed loop against the tank model for 1000 steps; the state blob is
// threaded through exactly as the runtime does.
TEST(VpfCatalog, PidMatchesReferenceOverThousandSteps) {
  struct Gains {
    double kp, ki, kd, sp;
    Micros period;
  };
  for (const Gains& g : {Gains{1.2, 0.1, 0.05, 5.0, 1000}, Gains{0.7, 2.5, 0.0, 3.0, 10'000},
                         Gains{2.0, 0.0, 0.3, -1.0, 250}}) {
    json art = {{"input", "level"}, {"output", "valve"}, {"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}, {"setpoint", g.sp}};
    auto p = load_program(desc("pid", g.period), blob_of(art.dump()));
    testing::PidOracle oracle(g.kp, g.ki, g.kd, g.sp, static_cast<double>(g.period) / 1e6);
    Bytes state = initial_state(p);
    double level = 0.0;
    for (int i = 0; i < 1000; ++i) {
      auto step = execute_vpf(p, state, sample("level", level));
      const double want = oracle.step(level);
      ASSERT_TRUE(std::isfinite(want));
      ASSERT_TRUE(testing::within_relative(step.outputs.at("valve"), want)) << "step " << i << std::setprecision(20) << " got " << step.outputs.at("valve") << " want " << want;
      state = step.state;
      level = testing::tank_step(level, want);
    }
  }
}

TEST(VpfCatalog, ExplicitDtOverridesPeriod) {
  auto p = load_program(desc("pid", 0), blob_of(R"({"input":"x","output":"y","ki":1,"dt":0.5})"));
  auto s = execute_vpf(p, initial_state(p), sample("x", -2));
  EXPECT_EQ(s.outputs.at("y"), 1.0);
}

class TempDir {
 public:
  TempDir() {
    static int n = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("vpcorch-test-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    std::filesystem::remove_all(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

TEST(Registry, PublishOverwritesDigestAndRejectsDuplicates) {
  VpfRegistry r;
  VpfDescriptor d = desc("pid");
  d.artifact_digest.fill(0xEE);
  const Bytes blob = blob_of(R"({"input":"x","output":"y"})");
  EXPECT_EQ(r.publish(d, blob), sha256(blob));
  EXPECT_EQ(r.fetch(d.vpf_id, d.version).descriptor.artifact_digest, sha256(blob));
  EXPECT_EQ(r.fetch(d.vpf_id, d.version).blob, blob);
  try {
    r.publish(d, blob);
    FAIL();
  } catch (const RegistryError& e) {
    EXPECT_EQ(e.code(), RegistryErrc::DuplicateVersion);
  }
  try {
    r.fetch("nope", SemVer{});
    FAIL();
  } catch (const RegistryError& e) {
    EXPECT_EQ(e.code(), RegistryErrc::NotFound);
  }
  EXPECT_FALSE(r.try_fetch(d.vpf_id, SemVer{9, 9, 9}));
}

TEST(Registry, DirectoryStoreSurvivesRestart) {
  TempDir dir;
  const Bytes a = blob_of(R"({"input":"x","output":"y","kp":1})");
  const Bytes b = blob_of(R"({"input":"x","output":"y","kp":2})");
  {
    VpfRegistry r(dir.path());
    r.publish(desc("pid", 1000, {1, 0, 0}), a);
    r.publish(desc("pid", 1000, {1, 1, 0}), b);
  }
  VpfRegistry again(dir.path());
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again.fetch("pid-vpf", SemVer{1, 0, 0}).blob, a);
  EXPECT_EQ(again.fetch("pid-vpf", SemVer{1, 1, 0}).blob, b);
  auto list = again.list();
  EXPECT_EQ(list[0].version, (SemVer{1, 0, 0}));
  EXPECT_EQ(list[1].digest, sha256(b));
  EXPECT_THROW(again.publish(desc("pid", 1000, {1, 1, 0}), b), RegistryError);
}

TEST(Registry, CorruptBlobOnDiskIsDetected) {
  TempDir dir;
  Digest d;
  {
    VpfRegistry r(dir.path());
    d = r.publish(desc("pid"), blob_of("{}"));
  }
  std::ofstream(dir.path() / "blobs" / to_hex(d), std::ios::trunc) << "tampered";
  try {
    VpfRegistry r(dir.path());
    FAIL();
  } catch (const RegistryError& e) {
    EXPECT_EQ(e.code(), RegistryErrc::CorruptStore);
  }
}

TEST(Registry, BadManifestLineIsReportedWithLineNumber) {
  TempDir dir;
  std::filesystem::create_directories(dir.path() / "blobs");
  std::ofstream(dir.path() / "manifest.jsonl") << "\n{oops\n";
  try {
    VpfRegistry r(dir.path());
    FAIL();
  } catch (const RegistryError& e) {
    EXPECT_NE(std::string(e.what()).find("manifest.jsonl:2"), std::string::npos);
  }
}

}  // namespace
}  // namespace vpc
