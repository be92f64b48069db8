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

#include "vpcorch/simnet.hpp"
#include "vpcorch/stats.hpp"
#include "vpcorch/trace_io.hpp"
#include "vpcorch/wire.hpp"

#include <gtest/gtest.h>

namespace vpc {
namespace {

// Echoes nothing; counts what it sees and can fire timers on request.
class Probe final : public Actor {
 public:
  explicit Probe(std::vector<std::string>* log = nullptr) : log_(log) {}
  void on_start(Context& ctx) override { note(ctx, "start"); }
  void on_frame(Context& ctx, NodeId src, std::span<const std::uint8_t> frame) override {
    note(ctx, "frame " + std::to_string(src.value) + " " + std::to_string(frame.size()));
  }
  void on_timer(Context& ctx, std::uint64_t tag) override { note(ctx, "timer " + std::to_string(tag)); }
  void on_restart() override {
    if (log_) log_->push_back("restart");
  }

 private:
  void note(Context& ctx, const std::string& s) {
    if (log_) log_->push_back(std::to_string(ctx.now()) + " " + std::to_string(ctx.self().value) + " " + s);
  }
  std::vector<std::string>* log_;
};

Bytes frame_of(std::uint64_t round) { return encode(Discovery{NodeId{1}, round}, FrameProfile::Compact, NodeId{1}, NodeId{2}); }

SimConfig pair_config(std::uint64_t seed, LinkSpec link) {
  SimConfig c;
  c.seed = seed;
  c.connect(NodeId{1}, NodeId{2}, link);
  return c;
}

std::vector<const SimEvent*> of_kind(const Trace& t, SimEventKind k) {
  std::vector<const SimEvent*> out;
  for (const auto& e : t.events)
    if (e.kind == k) out.push_back(&e);
  return out;
}

TEST(Simnet, LatencyWithinBoundsAndFifo) {
  const LinkSpec link{100, 50, 0.0};
  Simulator sim(pair_config(3, link));
  sim.add_node(NodeId{1}, std::make_unique<Probe>());
  sim.add_node(NodeId{2}, std::make_unique<Probe>());
  // Dense sends so the FIFO clamp actually matters.
  for (int i = 0; i < 5000; ++i) sim.send(NodeId{1}, NodeId{2}, frame_of(static_cast<std::uint64_t>(i)), i * 7);
  const Trace& t = sim.run_until(kForever);
  auto d = of_kind(t, SimEventKind::Deliver);
  ASSERT_EQ(d.size(), 5000u);
  std::int64_t prev_sent = -1;
  Micros prev_time = 0;
  std::set<Micros> latencies;
  for (const auto* e : d) {
    const Micros lat = e->time - e->at("sent_at");
    EXPECT_GE(lat, link.base_latency);
    EXPECT_LE(lat, link.base_latency + link.jitter_max + 7 * 8);  // clamp can add at most a few send gaps
    EXPECT_GT(e->at("sent_at"), prev_sent);
    EXPECT_GE(e->time, prev_time);
    prev_sent = e->at("sent_at");
    prev_time = e->time;
    latencies.insert(lat);
  }
  EXPECT_GT(latencies.size(), 40u);
}

TEST(Simnet, SparseSendsStayInsideJitterWindow) {
  const LinkSpec link{100, 50, 0.0};
  Simulator sim(pair_config(11, link));
  sim.add_node(NodeId{1}, std::make_unique<Probe>());
  sim.add_node(NodeId{2}, std::make_unique<Probe>());
  for (int i = 0; i < 2000; ++i) sim.send(NodeId{1}, NodeId{2}, frame_of(1), i * 151);
  Micros lo = kForever, hi = 0;
  for (const auto* e : of_kind(sim.run_until(kForever), SimEventKind::Deliver)) {
    lo = std::min(lo, e->time - e->at("sent_at"));
    hi = std::max(hi, e->time - e->at("sent_at"));
  }
  EXPECT_EQ(lo, 100);
  EXPECT_EQ(hi, 150);
}

TEST(Simnet, DropReasons) {
  SimConfig c = pair_config(1, LinkSpec{100, 0, 0.0});
  c.connect(NodeId{1}, NodeId{3}, LinkSpec{100, 0, 1.0});
  Simulator sim(c);
  sim.add_node(NodeId{1}, std::make_unique<Probe>());
  sim.add_node(NodeId{2}, std::make_unique<Probe>());
  sim.add_node(NodeId{3}, std::make_unique<Probe>());
  sim.send(NodeId{1}, NodeId{3}, frame_of(0), 0);  // loss
  sim.partition({NodeId{1}}, {NodeId{2}}, 1000, 2000);
  sim.send(NodeId{1}, NodeId{2}, frame_of(1), 950);  // delivered inside the window
  sim.kill_node(NodeId{2}, 3000);
  sim.send(NodeId{1}, NodeId{2}, frame_of(2), 2950);  // destination dead on arrival
  sim.kill_node(NodeId{1}, 4000);
  sim.send(NodeId{1}, NodeId{2}, frame_of(3), 4500);  // source dead at send time
  const Trace& t = sim.run_until(10'000);
  auto drops = of_kind(t, SimEventKind::Drop);
  ASSERT_EQ(drops.size(), 4u);
  EXPECT_EQ(drops[0]->at("reason"), 0);
  EXPECT_EQ(drops[1]->at("reason"), 1);
  EXPECT_EQ(drops[1]->time, 1050);
  EXPECT_EQ(drops[2]->at("reason"), 2);
  EXPECT_EQ(drops[3]->at("reason"), 3);
  EXPECT_EQ(drops[3]->at("sent_at"), 4500);
  EXPECT_EQ(of_kind(t, SimEventKind::Deliver).size(), 0u);
  EXPECT_EQ(of_kind(t, SimEventKind::PartitionStart).size(), 1u);
  EXPECT_EQ(of_kind(t, SimEventKind::PartitionEnd).size(), 1u);
}

TEST(Simnet, PartitionIsCheckedAtArrival) {
  Simulator sim(pair_config(1, LinkSpec{100, 0, 0.0}));
  sim.add_node(NodeId{1}, std::make_unique<Probe>());
  sim.add_node(NodeId{2}, std::make_unique<Probe>());
  sim.partition({NodeId{1}}, {NodeId{2}}, 1000, 2000);
  sim.send(NodeId{1}, NodeId{2}, frame_of(0), 1950);  // arrives at 2050, after healing
  EXPECT_EQ(of_kind(sim.run_until(5000), SimEventKind::Deliver).size(), 1u);
  EXPECT_TRUE(sim.partitioned(NodeId{2}, NodeId{1}, 1500));
  EXPECT_FALSE(sim.partitioned(NodeId{2}, NodeId{1}, 2000));
}

TEST(Simnet, ArgumentErrors) {
  Simulator sim(pair_config(1, LinkSpec{}));
  sim.add_node(NodeId{1}, std::make_unique<Probe>());
  sim.add_node(NodeId{2}, std::make_unique<Probe>());
  auto code = [](auto fn) {
    try {
      fn();
    } catch (const SimError& e) {
      return static_cast<int>(e.code());
    }
    return -1;
  };
  EXPECT_EQ(code([&] { sim.send(NodeId{2}, NodeId{7}, frame_of(0), 0); }), static_cast<int>(SimErrc::NoSuchLink));
  EXPECT_EQ(code([&] { sim.partition({NodeId{1}}, {NodeId{1}}, 0, 5); }),
            static_cast<int>(SimErrc::OverlappingGroups));
  EXPECT_EQ(code([&] { sim.partition({NodeId{1}}, {NodeId{2}}, 5, 5); }), static_cast<int>(SimErrc::InvalidWindow));
}

TEST(Simnet, KillCancelsTimersAndReviveRestarts) {
  std::vector<std::string> log;
  SimConfig c;
  Simulator sim(c);
  sim.add_node(NodeId{5}, std::make_unique<Probe>(&log));
  sim.schedule_call(0, NodeId{5}, [](Context& ctx) {
    ctx.set_timer(100, 1);
    ctx.set_timer(300, 2);
    auto id = ctx.set_timer(150, 3);
    ctx.cancel_timer(id);
  });
  sim.kill_node(NodeId{5}, 200);
  sim.revive_node(NodeId{5}, 250);
  sim.run_until(1000);
  EXPECT_EQ(log, (std::vector<std::string>{"0 5 start", "100 5 timer 1", "restart", "250 5 start"}));
  EXPECT_TRUE(sim.alive(NodeId{5}));
  ASSERT_EQ(sim.trace().final_states.size(), 1u);
}

TEST(Simnet, RunUntilIsExclusive) {
  std::vector<std::string> log;
  Simulator sim(SimConfig{});
  sim.add_node(NodeId{5}, std::make_unique<Probe>(&log));
  sim.schedule_call(0, NodeId{5}, [](Context& ctx) { ctx.set_timer(100, 9); });
  sim.run_until(100);
  EXPECT_EQ(log.size(), 1u);
  sim.run_until(101);
  EXPECT_EQ(log.back(), "100 5 timer 9");
}

TEST(Simnet, ClockOffsetsWithinAccuracy) {
  SimConfig c;
  c.seed = 77;
  c.clock_sync_accuracy = 3;
  c.clock_offsets[NodeId{9}] = 50;  // clamped
  Simulator sim(c);
  for (std::uint64_t i = 1; i < 60; ++i) sim.add_node(NodeId{i}, std::make_unique<Probe>());
  std::set<Micros> seen;
  for (std::uint64_t i = 1; i < 60; ++i) {
    const Micros off = sim.clock_offset(NodeId{i});
    EXPECT_LE(std::abs(off), 3);
    seen.insert(off);
  }
  EXPECT_EQ(sim.clock_offset(NodeId{9}), 3);
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(sim.local_clock(NodeId{9}, 1000), 1003);
}

std::string run_trace(std::uint64_t seed) {
  SimConfig c = pair_config(seed, LinkSpec{100, 50, 0.2});
  Simulator sim(c);
  sim.add_node(NodeId{1}, std::make_unique<Probe>());
  sim.add_node(NodeId{2}, std::make_unique<Probe>());
  for (int i = 0; i < 500; ++i) {
    sim.send(NodeId{1}, NodeId{2}, frame_of(1), i * 10);
    sim.send(NodeId{2}, NodeId{1}, frame_of(2), i * 10 + 3);
  }
  return trace_to_jsonl(sim.run_until(kForever));
}

TEST(Simnet, SameSeedSameBytes) {
  const std::string a = run_trace(5), b = run_trace(5), c = run_trace(6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(content_hash(a), content_hash(b));
}

TEST(Stats, NearestRankPercentiles) {
  std::vector<std::int64_t> v;
  for (int i = 100; i >= 1; --i) v.push_back(i);
  const Percentiles p = percentiles(v);
  EXPECT_EQ(p.p50, 50);
  EXPECT_EQ(p.p90, 90);
  EXPECT_EQ(p.p99, 99);
  EXPECT_EQ(p.max, 100);
  EXPECT_EQ(percentiles({7}).p50, 7);
}

}  // namespace
}  // namespace vpc
