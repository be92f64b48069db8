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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "support/pid_oracle.hpp"
#include "support/placement_oracle.hpp"
#include "support/random_messages.hpp"
#include "vpcorch/bench.hpp"
#include "vpcorch/scenario.hpp"
#include "vpcorch/vpf_catalog.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace vpc;

std::atomic<std::uint64_t> g_placements{0};
std::atomic<std::uint64_t> g_placement_mismatches{0};

ScenarioHooks oracle_hooks() {
  ScenarioHooks h;
  h.on_placement = [](const PlacementRecord& rec) {
    ++g_placements;
    if (testing::brute_force_choice(rec.candidates) != rec.chosen) ++g_placement_mismatches;
  };
  return h;
}

TraceReport run(const std::string& id, std::uint64_t seed = 42) {
  return run_scenario(make_script(id), seed, oracle_hooks());
}

bool has(const std::vector<Violation>& vs, std::string_view inv) {
  for (const auto& v : vs)
    if (v.invariant == inv) return true;
  return false;
}

std::string first_violation(const std::vector<Violation>& vs) {
  if (vs.empty()) return "";
  return " first=" + vs.front().invariant + "@" + std::to_string(vs.front().time) + " " + vs.front().detail;
}

struct Verdict {
  bool pass{true};
  std::ostringstream note;
  void require(bool cond, const std::string& why) {
    if (!cond) {
      pass = false;
      note << " [" << why << "]";
    }
  }
};

int g_failures = 0;

void report(int n, Verdict& v) {
  std::cout << "criterion " << n << ' ' << (v.pass ? "PASS" : "FAIL") << v.note.str() << std::endl;
  if (!v.pass) ++g_failures;
}

template <class Fn>
void criterion(int n, Fn&& body) {
  Verdict v;
  try {
    body(v);
  } catch (const std::exception& e) {
    v.require(false, std::string("exception: ") + e.what());
  }
  report(n, v);
}

void c1(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const TraceReport r = run("1");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.note << " wall=" << wall << "s events=" << r.event_count;
  v.require(!has(r.violations, "startup_order"), "startup order");
  v.require(r.ok(), "violations" + first_violation(r.violations));
  v.require(wall < 1.0, "slower than 1 s");
}

void c2(Verdict& v) {
  const TraceReport r = run("2");
  v.note << " accepted=" << r.metrics.accepted << " missed=" << r.metrics.missed_control_cycles;
  v.require(r.metrics.accepted >= 10'000, "fewer than 10^4 cycles");
  v.require(r.metrics.missed_control_cycles == 0, "missed cycles");
  v.require(!has(r.violations, "replica_consistency"), "replica digests diverged");
  v.require(r.ok(), "violations" + first_violation(r.violations));
}

SweepReport sweep(const std::string& id, const std::string& target) {
  return sweep_failure_times(make_script(id), target, kFaultAt, kFaultAt + 10'000, 100, seed_range(1, 20),
                             oracle_hooks());
}

void c3(Verdict& v) {
  const SweepReport s = sweep("3a", "inactive:0");
  std::size_t without_backup = 0, with_gaps = 0;
  for (const auto& run : s.runs) {
    if (run.metrics.backup_requests < 1) ++without_backup;
    if (run.metrics.missed_control_cycles != 0) ++with_gaps;
  }
  v.note << " runs=" << s.runs.size() << " failing=" << s.failing_runs << " worst_detection=" << s.worst_detection_us
         << "us worst_redundancy_gap=" << s.worst_redundancy_gap_us << "us";
  v.require(s.runs.size() == 2000, "grid size");
  v.require(s.failing_runs == 0, "runs with violations");
  v.require(without_backup == 0, "runs without a backup request");
  v.require(with_gaps == 0, "runs with actuator gaps");
}

void c4(Verdict& v) {
  const SweepReport s = sweep("3b", "active");
  const Micros bound = check_params_for(make_script("3b")).gap_bound();
  std::size_t bad_promotes = 0, fencing = 0;
  for (const auto& run : s.runs) {
    if (run.metrics.self_promotes != 1) ++bad_promotes;
    if (has(run.violations, "fencing")) ++fencing;
  }
  v.note << " runs=" << s.runs.size() << " failing=" << s.failing_runs << " worst_gap=" << s.worst_output_gap_us
         << "us bound=" << bound << "us";
  v.require(s.runs.size() == 2000, "grid size");
  v.require(bad_promotes == 0, "runs without exactly one self-promotion");
  v.require(s.worst_output_gap_us <= bound, "output gap above bound");
  v.require(fencing == 0, "fencing violations");
  v.require(s.failing_runs == 0, "runs with violations");
}

void c5(Verdict& v) {
  const TraceReport r = run("3c");
  v.note << " double_status=" << r.metrics.double_status << " disables=" << r.metrics.disables
         << " window=" << r.metrics.double_active_window_us << "us";
  v.require(r.metrics.double_status >= 1, "no double status");
  v.require(r.metrics.disables == 1, "not exactly one disable");
  v.require(!has(r.violations, "single_active"), "two live actives after resolution");
  v.require(r.ok(), "3c violations" + first_violation(r.violations));
  const TraceReport iso = run("3c-isolated");
  v.require(!has(iso.violations, "emission_stream"), "isolated variant stream has gaps");
  v.require(iso.ok(), "3c-isolated violations" + first_violation(iso.violations));
}

void c6(Verdict& v) {
  const TraceReport r = run("4");
  v.note << " missed=" << r.metrics.missed_control_cycles;
  v.require(r.ok(), "violations" + first_violation(r.violations));
  v.require(r.metrics.missed_control_cycles == 0, "missed cycles");
  std::size_t runs = 0, bad = 0, fencing = 0;
  for (Micros icps : {-1, 0, 1})
    for (Micros olds : {-1, 0, 1})
      for (Micros news : {-1, 0, 1})
        for (std::uint64_t seed : seed_range(1, 5)) {
          ScenarioScript s = make_script("4");
          s.cluster.clock_offsets = {{kIcpsId, icps}, {NodeId{10}, olds}, {NodeId{12}, olds},
                                     {NodeId{11}, news}, {NodeId{13}, news}};
          const TraceReport o = run_scenario(s, seed, oracle_hooks());
          ++runs;
          if (!o.ok() || o.metrics.rejected != 0 || o.metrics.missed_control_cycles != 0) ++bad;
          if (has(o.violations, "fencing")) ++fencing;
        }
  v.note << " offset_runs=" << runs << " bad=" << bad;
  v.require(bad == 0, "offset runs with violations or rejections");
  v.require(fencing == 0, "fencing violations under offsets");
}

void c7(Verdict& v) {
  std::size_t round_trips = 0, fuzzed = 0, bad = 0, reframed = 0;
  for (std::size_t k = 0; k < kMessageVariants; ++k) {
    testing::MessageGen gen(77 + k);
    for (int i = 0; i < 10'000; ++i) {
      const Message m = gen.of_variant(k);
      const NodeId src = gen.node(), dst = gen.node();
      const Bytes c = encode(m, FrameProfile::Compact, src, dst);
      const Bytes r = encode(m, FrameProfile::Routed, src, dst);
      if (r.size() - c.size() != 20) ++bad;
      for (const Bytes* f : {&c, &r}) {
        const DecodedFrame d = decode(*f);
        if (!(d.message == m) || d.src != src || d.dst != dst) ++bad;
        ++round_trips;
      }
    }
    for (int i = 0; i < 10; ++i) {
      const Message m = gen.of_variant(k);
      for (FrameProfile p : {FrameProfile::Compact, FrameProfile::Routed}) {
        const Bytes frame = encode(m, p, gen.node(), gen.node());
        for (std::size_t n = 0; n < frame.size(); ++n) {
          ++fuzzed;
          try {
            decode(std::span(frame.data(), n));
            ++bad;
          } catch (const WireError& e) {
            if (e.code() != WireErrc::TruncatedFrame) ++bad;
          }
        }
        for (std::size_t bit = 0; bit < frame.size() * 8; ++bit) {
          Bytes f = frame;
          f[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
          ++fuzzed;
          try {
            const DecodedFrame d = decode(f);
            const Bytes consumed(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(d.frame_len));
            if (encode(d.message, d.profile, d.src, d.dst) != consumed) ++bad;
            // A flipped profile flag can leave a shorter valid frame; the rest reads as trailing bytes.
            if (d.frame_len != f.size()) ++reframed;
          } catch (const WireError&) {
          }
        }
      }
    }
  }
  v.note << " round_trips=" << round_trips << " fuzz_cases=" << fuzzed << " reframed=" << reframed << " bad=" << bad;
  v.require(bad == 0, "codec mismatches");
}

void c8(Verdict& v) {
  const BenchOptions opt;
  const BenchComparison j = compare_profiles(LinkSpec{100, 50, 0.0}, 10'000, 42, opt);
  const BenchComparison z = compare_profiles(LinkSpec{100, 0, 0.0}, 10'000, 42, opt);
  const std::int64_t want = 20 * opt.cost_ns_per_byte;
  v.note << " compact_p50=" << j.compact.ns.p50 << "ns routed_p50=" << j.routed.ns.p50 << "ns delta_p50/p90/p99/max="
         << j.delta_ns.p50 << '/' << j.delta_ns.p90 << '/' << j.delta_ns.p99 << '/' << j.delta_ns.max << "ns";
  v.require(j.compact.ns.p50 <= j.routed.ns.p50, "compact p50 above routed p50");
  for (auto d : {z.delta_ns.p50, z.delta_ns.p90, z.delta_ns.p99, z.delta_ns.max})
    v.require(d == want, "zero-jitter delta is not 20 x cost");
  for (auto d : {j.delta_ns.p50, j.delta_ns.p90, j.delta_ns.p99, j.delta_ns.max})
    v.require(d == want, "paired delta differs under jitter");
  bool paired = j.compact.samples_ns.size() == j.routed.samples_ns.size();
  for (std::size_t i = 0; paired && i < j.compact.samples_ns.size(); ++i)
    paired = j.routed.samples_ns[i] - j.compact.samples_ns[i] == want;
  v.require(paired, "per-sample pairing broken");
}

void c9(Verdict& v) {
  std::ifstream in(std::filesystem::path(VPC_GOLDEN_DIR) / "manifest.json");
  v.require(static_cast<bool>(in), "golden manifest missing");
  if (!in) return;
  const json manifest = json::parse(in);
  const std::uint64_t seed = manifest.at("seed").get<std::uint64_t>();
  for (const auto& id : scenario_ids()) {
    const TraceReport a = run(id, seed);
    const TraceReport b = run(id, seed);
    v.require(a.trace_jsonl == b.trace_jsonl, "scenario " + id + " not byte-identical");
    const auto& g = manifest.at("scenarios").at(id);
    v.require(g.at("trace_sha256").get<std::string>() == a.trace_hash, "scenario " + id + " hash differs from golden");
  }
  v.note << " scenarios=" << scenario_ids().size() << " seed=" << seed;
}

void c10(Verdict& v) {
  std::size_t steps = 0, bad = 0;
  struct Gains {
    double kp, ki, kd, sp;
    Micros period;
  };
  for (const Gains& g : {Gains{1.2, 0.1, 0.05, 5.0, 1000}, Gains{0.7, 2.5, 0.0, 3.0, 10'000},
                         Gains{2.0, 0.0, 0.3, -1.0, 250}}) {
    VpfDescriptor d;
    d.vpf_id = "pid-vpf";
    d.version = SemVer{1, 0, 0};
    d.mode = ExecutionMode::cyclic(g.period);
    d.logic_name = "pid";
    const std::string art =
        json{{"input", "level"}, {"output", "valve"}, {"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}, {"setpoint", g.sp}}
            .dump();
    const auto p = load_program(d, Bytes(art.begin(), art.end()));
    testing::PidOracle oracle(g.kp, g.ki, g.kd, g.sp, static_cast<double>(g.period) / 1e6);
    Bytes state = initial_state(p);
    double level = 0.0;
    for (int i = 0; i < 1000; ++i) {
      ProcessData pd;
      pd.inputs["level"] = level;
      const auto out = execute_vpf(p, state, pd);
      const double want = oracle.step(level);
      if (!std::isfinite(want) || !testing::within_relative(out.outputs.at("valve"), want)) ++bad;
      state = out.state;
      level = testing::tank_step(level, want);
      ++steps;
    }
  }
  v.note << " placements=" << g_placements.load() << " placement_mismatches=" << g_placement_mismatches.load()
         << " pid_steps=" << steps << " pid_mismatches=" << bad;
  v.require(g_placements.load() > 0, "no placements observed");
  v.require(g_placement_mismatches.load() == 0, "placement differs from brute force");
  v.require(bad == 0, "PID differs from oracle");
}

}  // namespace

int main() {
  criterion(1, c1);
  criterion(2, c2);
  criterion(3, c3);
  criterion(4, c4);
  criterion(5, c5);
  criterion(6, c6);
  criterion(7, c7);
  criterion(8, c8);
  criterion(9, c9);
  // Runs last so the placement tally covers every scenario and sweep above.
  criterion(10, c10);
  return g_failures == 0 ? 0 : 1;
}
