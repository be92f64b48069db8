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

#include "vpcorch/types.hpp"
#include "vpcorch/wire.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace vpc {

enum class SimErrc {
  NoSuchLink,
  DeadSource,
  OverlappingGroups,
  InvalidWindow,
  UnknownNode,
  DeadNode,
};

using SimError = Error<SimErrc>;

struct LinkSpec {
  Micros base_latency{100};
  Micros jitter_max{50};
  double drop_probability{0.0};

  bool operator==(const LinkSpec&) const = default;
};

using LinkKey = std::pair<NodeId, NodeId>;

struct SimConfig {
  std::uint64_t seed{0};
  std::map<LinkKey, LinkSpec> links;  // directed
  Micros clock_sync_accuracy{1};
  std::map<NodeId, Micros> clock_offsets;  // explicit overrides, |offset| <= accuracy

  void connect(NodeId a, NodeId b, const LinkSpec& spec) {
    links[{a, b}] = spec;
    links[{b, a}] = spec;
  }
  void connect_directed(NodeId from, NodeId to, const LinkSpec& spec) { links[{from, to}] = spec; }

  // Star topology through one switch: every pair of nodes gets a link.
  void connect_all(const std::vector<NodeId>& nodes, const LinkSpec& spec) {
    for (auto a : nodes)
      for (auto b : nodes)
        if (a != b && !links.count({a, b})) links[{a, b}] = spec;
  }

  Micros max_latency() const {
    Micros m = 0;
    for (const auto& [k, l] : links) m = std::max(m, l.base_latency + l.jitter_max);
    return m;
  }
  Micros max_jitter() const {
    Micros m = 0;
    for (const auto& [k, l] : links) m = std::max(m, l.jitter_max);
    return m;
  }
};

enum class SimEventKind : std::uint8_t {
  Deliver,
  Drop,
  NodeKill,
  NodeRevive,
  PartitionStart,
  PartitionEnd,
  TimerFire,
  Emit,
};

inline const char* to_string(SimEventKind k) {
  switch (k) {
    case SimEventKind::Deliver: return "deliver";
    case SimEventKind::Drop: return "drop";
    case SimEventKind::NodeKill: return "node_kill";
    case SimEventKind::NodeRevive: return "node_revive";
    case SimEventKind::PartitionStart: return "partition_start";
    case SimEventKind::PartitionEnd: return "partition_end";
    case SimEventKind::TimerFire: return "timer_fire";
    case SimEventKind::Emit: return "emit";
  }
  return "?";
}

// Keys and labels must outlive the trace; in practice they are literals.
struct Attr {
  std::string_view key;
  std::int64_t value{0};
};

struct SimEvent {
  static constexpr std::size_t kMaxAttrs = 10;

  Micros time{0};
  SimEventKind kind{SimEventKind::Emit};
  NodeId src;
  NodeId dst;
  std::uint8_t type_tag{0};
  std::string_view label;
  std::array<Attr, kMaxAttrs> attrs{};
  std::uint8_t attr_count{0};

  std::span<const Attr> attributes() const { return {attrs.data(), attr_count}; }

  std::optional<std::int64_t> get(std::string_view key) const {
    for (const auto& a : attributes())
      if (a.key == key) return a.value;
    return std::nullopt;
  }
  std::int64_t at(std::string_view key, std::int64_t fallback = 0) const {
    return get(key).value_or(fallback);
  }
  void add(std::string_view key, std::int64_t value) {
    if (attr_count < kMaxAttrs) attrs[attr_count++] = Attr{key, value};
  }
};

struct NodeFinalState {
  NodeId node;
  bool alive{true};
  std::string state_json;
};

struct Trace {
  std::vector<SimEvent> events;
  std::vector<NodeFinalState> final_states;
};

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class Simulator;
class Context;

using TimerId = std::uint64_t;

class Actor {
 public:
  virtual ~Actor() = default;
  virtual void on_start(Context& ctx) = 0;
  virtual void on_frame(Context& ctx, NodeId src, std::span<const std::uint8_t> frame) = 0;
  virtual void on_timer(Context& ctx, std::uint64_t tag) = 0;
  // Restart after a revive: the actor returns to its initial state.
  virtual void on_restart() = 0;
  virtual std::string state_json() const { return "{}"; }
};

// Handle a node uses during one callback.
class Context {
 public:
  Context(Simulator& sim, NodeId self) : sim_(sim), self_(self) {}

  NodeId self() const { return self_; }
  Micros now() const;
  Micros local_clock() const;
  void send(NodeId dst, Bytes frame);
  void broadcast(const Bytes& frame);
  TimerId set_timer(Micros delay, std::uint64_t tag);
  void cancel_timer(TimerId id);
  void record(std::string_view label, std::initializer_list<Attr> attrs = {});
  Simulator& sim() { return sim_; }

 private:
  Simulator& sim_;
  NodeId self_;
};

struct SendResult {
  bool scheduled{false};  // false: lost at send time
  Micros time{0};         // delivery time, or the send time of a loss
};

// Single-threaded discrete-event loop. All node state machines run inside it;
// events at equal times are ordered by insertion sequence.
class Simulator {
 public:
  explicit Simulator(SimConfig config) : config_(std::move(config)) {
    for (const auto& [key, spec] : config_.links) {
      LinkState st;
      st.spec = spec;
      st.rng.seed(mix64(config_.seed ^ mix64(key.first.value * 0x100000001B3ull + key.second.value)));
      links_.emplace(key, std::move(st));
    }
  }

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const SimConfig& config() const { return config_; }
  Micros now() const { return now_; }

  void add_node(NodeId id, std::unique_ptr<Actor> actor, bool alive = true) {
    NodeSlot slot;
    slot.actor = std::move(actor);
    slot.alive = alive;
    slot.clock_offset = draw_offset(id);
    nodes_[id] = std::move(slot);
    if (alive) {
      Queued q = make(now_, QKind::Start);
      q.dst = id;
      push(std::move(q));
    }
  }

  bool has_node(NodeId id) const { return nodes_.count(id) != 0; }
  bool alive(NodeId id) const {
    auto it = nodes_.find(id);
    return it != nodes_.end() && it->second.alive;
  }
  std::vector<NodeId> node_ids() const {
    std::vector<NodeId> ids;
    for (const auto& [id, s] : nodes_) ids.push_back(id);
    return ids;
  }
  Actor& actor(NodeId id) { return *slot(id).actor; }
  const Actor& actor(NodeId id) const { return *const_cast<Simulator*>(this)->slot(id).actor; }

  Micros clock_offset(NodeId id) const { return const_cast<Simulator*>(this)->slot(id).clock_offset; }

  Micros local_clock(NodeId id, Micros true_time) const {
    const auto& s = const_cast<Simulator*>(this)->slot(id);
    if (!s.alive) throw SimError(SimErrc::DeadNode, "node " + std::to_string(id.value) + " is dead");
    return true_time + s.clock_offset;
  }

  SendResult send(NodeId src, NodeId dst, Bytes frame, Micros at) {
    if (at < now_) throw std::invalid_argument("send in the past");
    auto it = links_.find({src, dst});
    if (it == links_.end()) {
      throw SimError(SimErrc::NoSuchLink,
                     "no link " + std::to_string(src.value) + "->" + std::to_string(dst.value));
    }
    if (at > now_) {
      Queued q = make(at, QKind::SendAt);
      q.src = src;
      q.dst = dst;
      q.frame = std::move(frame);
      push(std::move(q));
      return SendResult{true, at};
    }
    return send_now(it->second, src, dst, std::move(frame));
  }

  void partition(std::set<NodeId> group_a, std::set<NodeId> group_b, Micros from, Micros to) {
    if (from >= to) throw SimError(SimErrc::InvalidWindow, "partition window is empty");
    for (auto n : group_a)
      if (group_b.count(n)) throw SimError(SimErrc::OverlappingGroups, "partition groups overlap");
    partitions_.push_back(Partition{std::move(group_a), std::move(group_b), from, to});
    Queued s = make(from, QKind::PartStart);
    s.aux = partitions_.size() - 1;
    push(std::move(s));
    if (to != kForever) {
      Queued e = make(to, QKind::PartEnd);
      e.aux = partitions_.size() - 1;
      push(std::move(e));
    }
  }

  void kill_node(NodeId node, Micros at) {
    slot(node);
    Queued q = make(std::max(at, now_), QKind::Kill);
    q.dst = node;
    push(std::move(q));
  }

  void revive_node(NodeId node, Micros at) {
    slot(node);
    Queued q = make(std::max(at, now_), QKind::Revive);
    q.dst = node;
    push(std::move(q));
  }

  // Scripted injection: runs fn in the context of node at the given time.
  void schedule_call(Micros at, NodeId node, std::function<void(Context&)> fn) {
    Queued q = make(std::max(at, now_), QKind::Call);
    q.dst = node;
    q.call = std::move(fn);
    push(std::move(q));
  }

  const Trace& run_until(Micros t) {
    while (!queue_.empty() && queue_.front().time < t) {
      std::pop_heap(queue_.begin(), queue_.end(), Later{});
      Queued ev = std::move(queue_.back());
      queue_.pop_back();
      now_ = ev.time;
      dispatch(ev);
    }
    if (t != kForever) now_ = std::max(now_, t);
    refresh_final_states();
    return trace_;
  }

  const Trace& trace() const { return trace_; }

  bool partitioned(NodeId a, NodeId b, Micros t) const {
    for (const auto& p : partitions_) {
      if (t < p.from || t >= p.to) continue;
      if ((p.a.count(a) && p.b.count(b)) || (p.a.count(b) && p.b.count(a))) return true;
    }
    return false;
  }

  void record(SimEvent ev) {
    ev.time = now_;
    trace_.events.push_back(ev);
  }

 private:
  friend class Context;

  enum class QKind : std::uint8_t { Start, SendAt, Deliver, Drop, Timer, Kill, Revive, PartStart, PartEnd, Call };

  struct Queued {
    Micros time{0};
    std::uint64_t seq{0};
    QKind kind{QKind::Start};
    NodeId src;
    NodeId dst;
    std::uint64_t aux{0};          // timer id / partition index / sent_at
    std::uint64_t tag{0};          // timer tag / drop reason
    std::uint64_t incarnation{0};
    Bytes frame;
    std::function<void(Context&)> call;
  };

  struct Later {
    bool operator()(const Queued& a, const Queued& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  struct NodeSlot {
    std::unique_ptr<Actor> actor;
    bool alive{true};
    std::uint64_t incarnation{0};
    Micros clock_offset{0};
  };

  struct LinkState {
    LinkSpec spec;
    std::mt19937_64 rng;
    Micros last_delivery{std::numeric_limits<Micros>::min()};
  };

  struct Partition {
    std::set<NodeId> a;
    std::set<NodeId> b;
    Micros from{0};
    Micros to{0};
  };

  enum DropReason : std::uint64_t { kLoss = 0, kPartition = 1, kDeadDestination = 2, kDeadSource = 3 };

  Queued make(Micros at, QKind kind) {
    Queued q;
    q.time = at;
    q.seq = next_seq_++;
    q.kind = kind;
    return q;
  }

  void push(Queued q) {
    queue_.push_back(std::move(q));
    std::push_heap(queue_.begin(), queue_.end(), Later{});
  }

  NodeSlot& slot(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw SimError(SimErrc::UnknownNode, "unknown node " + std::to_string(id.value));
    return it->second;
  }

  Micros draw_offset(NodeId id) const {
    if (auto it = config_.clock_offsets.find(id); it != config_.clock_offsets.end()) {
      return std::clamp(it->second, -config_.clock_sync_accuracy, config_.clock_sync_accuracy);
    }
    const Micros acc = config_.clock_sync_accuracy;
    if (acc <= 0) return 0;
    auto span = static_cast<std::uint64_t>(2 * acc + 1);
    return static_cast<Micros>(mix64(config_.seed ^ mix64(id.value ^ 0xC10C0FF5E7ull)) % span) - acc;
  }

  SendResult send_now(LinkState& link, NodeId src, NodeId dst, Bytes frame) {
    if (!slot(src).alive) {
      throw SimError(SimErrc::DeadSource, "node " + std::to_string(src.value) + " is dead");
    }
    // Two draws per send regardless of configuration keep each link's stream
    // aligned across parameter changes.
    const std::uint64_t loss_draw = link.rng();
    const std::uint64_t jitter_draw = link.rng();
    const double u = static_cast<double>(loss_draw >> 11) * 0x1.0p-53;
    const std::uint8_t tag = peek_type_tag(frame);

    if (u < link.spec.drop_probability) {
      Queued q = make(now_, QKind::Drop);
      q.src = src;
      q.dst = dst;
      q.aux = static_cast<std::uint64_t>(now_);
      q.tag = kLoss;
      q.frame = Bytes{tag};
      push(std::move(q));
      return SendResult{false, now_};
    }
    const Micros jitter =
        link.spec.jitter_max > 0
            ? static_cast<Micros>(jitter_draw % static_cast<std::uint64_t>(link.spec.jitter_max + 1))
            : 0;
    Micros deliver_at = now_ + link.spec.base_latency + jitter;
    deliver_at = std::max(deliver_at, link.last_delivery);
    link.last_delivery = deliver_at;

    Queued q = make(deliver_at, QKind::Deliver);
    q.src = src;
    q.dst = dst;
    q.aux = static_cast<std::uint64_t>(now_);
    q.frame = std::move(frame);
    push(std::move(q));
    return SendResult{true, deliver_at};
  }

  void record_drop(const Queued& ev, std::uint64_t reason, std::uint8_t tag) {
    SimEvent e;
    e.kind = SimEventKind::Drop;
    e.src = ev.src;
    e.dst = ev.dst;
    e.type_tag = tag;
    e.label = message_name(tag);
    e.add("sent_at", static_cast<std::int64_t>(ev.aux));
    e.add("reason", static_cast<std::int64_t>(reason));
    record(e);
  }

  void dispatch(Queued& ev) {
    switch (ev.kind) {
      case QKind::Start: {
        auto& s = slot(ev.dst);
        if (!s.alive) return;
        Context ctx(*this, ev.dst);
        s.actor->on_start(ctx);
        return;
      }
      case QKind::SendAt: {
        auto it = links_.find({ev.src, ev.dst});
        ev.aux = static_cast<std::uint64_t>(now_);
        if (!slot(ev.src).alive) {
          record_drop(ev, kDeadSource, peek_type_tag(ev.frame));
          return;
        }
        send_now(it->second, ev.src, ev.dst, std::move(ev.frame));
        return;
      }
      case QKind::Drop:
        record_drop(ev, ev.tag, ev.frame.empty() ? 0 : ev.frame[0]);
        return;
      case QKind::Deliver: {
        const std::uint8_t tag = peek_type_tag(ev.frame);
        auto& s = slot(ev.dst);
        if (partitioned(ev.src, ev.dst, ev.time)) {
          record_drop(ev, kPartition, tag);
          return;
        }
        if (!s.alive) {
          record_drop(ev, kDeadDestination, tag);
          return;
        }
        SimEvent e;
        e.kind = SimEventKind::Deliver;
        e.src = ev.src;
        e.dst = ev.dst;
        e.type_tag = tag;
        e.label = message_name(tag);
        e.add("sent_at", static_cast<std::int64_t>(ev.aux));
        e.add("len", static_cast<std::int64_t>(ev.frame.size()));
        record(e);
        Context ctx(*this, ev.dst);
        s.actor->on_frame(ctx, ev.src, ev.frame);
        return;
      }
      case QKind::Timer: {
        pending_timers_.erase(ev.aux);
        if (canceled_.erase(ev.aux)) return;
        auto& s = slot(ev.dst);
        if (!s.alive || s.incarnation != ev.incarnation) return;
        SimEvent e;
        e.kind = SimEventKind::TimerFire;
        e.src = ev.dst;
        e.dst = ev.dst;
        e.label = "timer";
        e.add("tag", static_cast<std::int64_t>(ev.tag));
        record(e);
        Context ctx(*this, ev.dst);
        s.actor->on_timer(ctx, ev.tag);
        return;
      }
      case QKind::Kill: {
        auto& s = slot(ev.dst);
        if (!s.alive) return;
        s.alive = false;
        ++s.incarnation;
        SimEvent e;
        e.kind = SimEventKind::NodeKill;
        e.src = ev.dst;
        e.dst = ev.dst;
        e.label = "kill";
        record(e);
        return;
      }
      case QKind::Revive: {
        auto& s = slot(ev.dst);
        if (s.alive) return;
        s.alive = true;
        ++s.incarnation;
        s.actor->on_restart();
        SimEvent e;
        e.kind = SimEventKind::NodeRevive;
        e.src = ev.dst;
        e.dst = ev.dst;
        e.label = "revive";
        record(e);
        Context ctx(*this, ev.dst);
        s.actor->on_start(ctx);
        return;
      }
      case QKind::PartStart:
      case QKind::PartEnd: {
        SimEvent e;
        e.kind = ev.kind == QKind::PartStart ? SimEventKind::PartitionStart : SimEventKind::PartitionEnd;
        e.label = "partition";
        e.add("index", static_cast<std::int64_t>(ev.aux));
        record(e);
        return;
      }
      case QKind::Call: {
        Context ctx(*this, ev.dst);
        ev.call(ctx);
        return;
      }
    }
  }

  void refresh_final_states() {
    trace_.final_states.clear();
    for (const auto& [id, s] : nodes_) {
      trace_.final_states.push_back(NodeFinalState{id, s.alive, s.actor->state_json()});
    }
  }

  SimConfig config_;
  std::map<NodeId, NodeSlot> nodes_;
  std::map<LinkKey, LinkState> links_;
  std::vector<Partition> partitions_;
  std::vector<Queued> queue_;
  std::unordered_set<TimerId> pending_timers_;
  std::unordered_set<TimerId> canceled_;
  std::uint64_t next_seq_{0};
  TimerId next_timer_{0};
  Micros now_{0};
  Trace trace_;
};

inline Micros Context::now() const { return sim_.now(); }

inline Micros Context::local_clock() const { return sim_.local_clock(self_, sim_.now()); }

inline void Context::send(NodeId dst, Bytes frame) { sim_.send(self_, dst, std::move(frame), sim_.now()); }

inline void Context::broadcast(const Bytes& frame) {
  for (const auto& [id, s] : sim_.nodes_) {
    if (id == self_) continue;
    sim_.send(self_, id, frame, sim_.now());
  }
}

inline TimerId Context::set_timer(Micros delay, std::uint64_t tag) {
  auto& s = sim_.slot(self_);
  Simulator::Queued q = sim_.make(sim_.now() + std::max<Micros>(delay, 0), Simulator::QKind::Timer);
  q.dst = self_;
  q.aux = ++sim_.next_timer_;
  q.tag = tag;
  q.incarnation = s.incarnation;
  const TimerId id = q.aux;
  sim_.pending_timers_.insert(id);
  sim_.push(std::move(q));
  return id;
}

inline void Context::cancel_timer(TimerId id) {
  if (sim_.pending_timers_.count(id)) sim_.canceled_.insert(id);
}

inline void Context::record(std::string_view label, std::initializer_list<Attr> attrs) {
  SimEvent e;
  e.kind = SimEventKind::Emit;
  e.src = self_;
  e.dst = self_;
  e.label = label;
  for (const auto& a : attrs) e.add(a.key, a.value);
  sim_.record(e);
}

}  // namespace vpc
