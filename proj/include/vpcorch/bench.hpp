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
#include "vpcorch/wire.hpp"

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace vpc {

enum class BenchErrc {
  CountTooSmall,
  BadLink,
};

using BenchError = Error<BenchErrc>;

struct BenchOptions {
  std::int64_t cost_ns_per_byte{10};  // serialization plus parsing, per frame byte
  std::optional<Message> payload;     // defaults to a typical control-data frame
};

struct BenchResult {
  FrameProfile profile{FrameProfile::Compact};
  std::size_t frame_len{0};
  std::int64_t cost_ns_per_byte{0};
  std::vector<std::int64_t> samples_ns;  // in send order
  Percentiles ns;
};

struct BenchComparison {
  BenchResult compact;
  BenchResult routed;
  Percentiles delta_ns;  // routed minus compact
};

namespace detail {

class NullActor final : public Actor {
 public:
  void on_start(Context&) override {}
  void on_frame(Context&, NodeId, std::span<const std::uint8_t>) override {}
  void on_timer(Context&, std::uint64_t) override {}
  void on_restart() override {}
};

inline Message bench_payload() {
  ControlData cd;
  cd.deployment_id = "tank-1";
  cd.epoch = Epoch{1};
  cd.seq = 1;
  cd.input_seq = 1;
  cd.outputs = {{"alarm", 0.0}, {"valve", 0.42}};
  return ControlDataMsg{cd};
}

}  // namespace detail

// E2E latency per message: simulated link latency plus a size-proportional
// encode/decode proxy. Sends are spaced wider than the worst link latency so
// the FIFO clamp never couples neighbouring samples; that keeps two runs with
// the same seed paired draw for draw across profiles.
inline BenchResult latency_bench(FrameProfile profile, const LinkSpec& link, std::size_t count, std::uint64_t seed,
                                 const BenchOptions& opt = {}) {
  if (count < 1000) throw BenchError(BenchErrc::CountTooSmall, "message count must be at least 1000");
  if (link.base_latency < 0 || link.jitter_max < 0 || link.drop_probability != 0.0) {
    throw BenchError(BenchErrc::BadLink, "bench links need non-negative latency and no loss");
  }
  const NodeId a{1}, b{2};
  SimConfig cfg;
  cfg.seed = seed;
  cfg.connect_directed(a, b, link);
  Simulator sim(cfg);
  sim.add_node(a, std::make_unique<detail::NullActor>());
  sim.add_node(b, std::make_unique<detail::NullActor>());

  const Message msg = opt.payload.value_or(detail::bench_payload());
  const Bytes frame = encode(msg, profile, a, b);
  const Micros spacing = link.base_latency + link.jitter_max + 1;
  for (std::size_t i = 0; i < count; ++i) sim.send(a, b, frame, 1 + static_cast<Micros>(i) * spacing);
  const Trace& t = sim.run_until(static_cast<Micros>(count + 2) * spacing);

  BenchResult r;
  r.profile = profile;
  r.frame_len = frame.size();
  r.cost_ns_per_byte = opt.cost_ns_per_byte;
  r.samples_ns.reserve(count);
  for (const auto& e : t.events) {
    if (e.kind != SimEventKind::Deliver) continue;
    const std::int64_t link_ns = (e.time - e.at("sent_at")) * 1000;
    r.samples_ns.push_back(link_ns + e.at("len") * opt.cost_ns_per_byte);
  }
  r.ns = percentiles(r.samples_ns);
  return r;
}

inline BenchComparison compare_profiles(const LinkSpec& link, std::size_t count, std::uint64_t seed,
                                        const BenchOptions& opt = {}) {
  BenchComparison c;
  c.compact = latency_bench(FrameProfile::Compact, link, count, seed, opt);
  c.routed = latency_bench(FrameProfile::Routed, link, count, seed, opt);
  c.delta_ns = Percentiles{c.routed.ns.p50 - c.compact.ns.p50, c.routed.ns.p90 - c.compact.ns.p90,
                           c.routed.ns.p99 - c.compact.ns.p99, c.routed.ns.max - c.compact.ns.max};
  return c;
}

inline std::string format_us(std::int64_t ns) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2) << static_cast<double>(ns) / 1000.0;
  return o.str();
}

inline std::string percentile_table(const BenchResult& r) {
  std::ostringstream o;
  o << "profile " << to_string(r.profile) << "  frame " << r.frame_len << " B  n=" << r.samples_ns.size() << '\n';
  o << "  p50 " << std::setw(10) << format_us(r.ns.p50) << " us\n";
  o << "  p90 " << std::setw(10) << format_us(r.ns.p90) << " us\n";
  o << "  p99 " << std::setw(10) << format_us(r.ns.p99) << " us\n";
  o << "  max " << std::setw(10) << format_us(r.ns.max) << " us\n";
  return o.str();
}

inline std::string comparison_table(const BenchComparison& c) {
  std::ostringstream o;
  o << "            compact      routed       delta\n";
  auto row = [&](const char* name, std::int64_t a, std::int64_t b, std::int64_t d) {
    o << "  " << name << ' ' << std::setw(10) << format_us(a) << "  " << std::setw(10) << format_us(b) << "  "
      << std::setw(10) << format_us(d) << " us\n";
  };
  row("p50", c.compact.ns.p50, c.routed.ns.p50, c.delta_ns.p50);
  row("p90", c.compact.ns.p90, c.routed.ns.p90, c.delta_ns.p90);
  row("p99", c.compact.ns.p99, c.routed.ns.p99, c.delta_ns.p99);
  row("max", c.compact.ns.max, c.routed.ns.max, c.delta_ns.max);
  o << "  frames   " << c.compact.frame_len << " B vs " << c.routed.frame_len << " B\n";
  return o.str();
}

// Fixed-width text histogram with `buckets` equal bins between min and max.
inline std::string histogram(const std::vector<std::int64_t>& samples, int buckets = 10, int width = 50) {
  if (samples.empty()) return "(no samples)\n";
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const std::int64_t lo = *lo_it;
  const std::int64_t span = std::max<std::int64_t>(1, *hi_it - lo + 1);
  std::vector<std::size_t> counts(static_cast<std::size_t>(buckets), 0);
  for (auto s : samples) ++counts[static_cast<std::size_t>((s - lo) * buckets / span)];
  const std::size_t peak = *std::max_element(counts.begin(), counts.end());
  std::ostringstream o;
  for (int i = 0; i < buckets; ++i) {
    const std::int64_t from = lo + span * i / buckets;
    const auto n = counts[static_cast<std::size_t>(i)];
    const int bar = peak == 0 ? 0 : static_cast<int>(n * static_cast<std::size_t>(width) / peak);
    o << std::setw(10) << format_us(from) << " us |" << std::string(static_cast<std::size_t>(bar), '#')
      << std::string(static_cast<std::size_t>(width - bar), ' ') << "| " << n << '\n';
  }
  return o.str();
}

inline std::string bench_csv(const std::vector<const BenchResult*>& results) {
  std::string out = "profile,index,e2e_ns,frame_len\n";
  for (const auto* r : results) {
    for (std::size_t i = 0; i < r->samples_ns.size(); ++i) {
      out += std::string(to_string(r->profile)) + ',' + std::to_string(i) + ',' + std::to_string(r->samples_ns[i]) +
             ',' + std::to_string(r->frame_len) + '\n';
    }
  }
  return out;
}

}  // namespace vpc
