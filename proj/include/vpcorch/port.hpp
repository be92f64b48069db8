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
#include "vpcorch/wire.hpp"

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace vpc {

// Which framing each message travels in. Cyclic data-plane traffic uses the
// compact profile; the management plane is routed.
struct ProfilePolicy {
  FrameProfile control{FrameProfile::Routed};
  FrameProfile data{FrameProfile::Compact};

  static bool is_data_plane(const Message& m) {
    return std::holds_alternative<Sync>(m) || std::holds_alternative<SyncAck>(m) ||
           std::holds_alternative<ProcessDataMsg>(m) || std::holds_alternative<ControlDataMsg>(m);
  }
  FrameProfile pick(const Message& m) const { return is_data_plane(m) ? data : control; }

  static ProfilePolicy uniform(FrameProfile p) { return ProfilePolicy{p, p}; }
};

// Everything a node's logic may do to the outside world. The simulator
// provides one implementation; unit tests provide recording fakes.
class Port {
 public:
  virtual ~Port() = default;
  virtual NodeId self() const = 0;
  virtual Micros local_clock() const = 0;
  virtual void send(NodeId dst, const Message& m) = 0;
  virtual void broadcast(const Message& m) = 0;
  virtual TimerId set_timer(Micros delay, std::uint64_t tag) = 0;
  virtual void cancel_timer(TimerId id) = 0;
  virtual void record(std::string_view label, std::initializer_list<Attr> attrs = {}) = 0;
};

class SimPort final : public Port {
 public:
  SimPort(Context& ctx, const ProfilePolicy& policy) : ctx_(ctx), policy_(policy) {}

  NodeId self() const override { return ctx_.self(); }
  Micros local_clock() const override { return ctx_.local_clock(); }
  void send(NodeId dst, const Message& m) override {
    ctx_.send(dst, encode(m, policy_.pick(m), ctx_.self(), dst));
  }
  void broadcast(const Message& m) override {
    ctx_.broadcast(encode(m, policy_.pick(m), ctx_.self(), kBroadcast));
  }
  TimerId set_timer(Micros delay, std::uint64_t tag) override { return ctx_.set_timer(delay, tag); }
  void cancel_timer(TimerId id) override { ctx_.cancel_timer(id); }
  void record(std::string_view label, std::initializer_list<Attr> attrs) override {
    ctx_.record(label, attrs);
  }

  Context& context() { return ctx_; }

 private:
  Context& ctx_;
  const ProfilePolicy& policy_;
};

// Bridges message-level logic onto a byte-level simulator actor. Logic must
// provide on_start, on_message, on_timer, reset and state_json.
template <class Logic>
class Hosted final : public Actor {
 public:
  template <class... Args>
  explicit Hosted(ProfilePolicy policy, Args&&... args)
      : policy_(policy), logic_(std::forward<Args>(args)...) {}

  void on_start(Context& ctx) override {
    SimPort port(ctx, policy_);
    logic_.on_start(port);
  }

  void on_frame(Context& ctx, NodeId src, std::span<const std::uint8_t> frame) override {
    SimPort port(ctx, policy_);
    DecodedFrame decoded;
    try {
      decoded = decode(frame);
    } catch (const WireError& e) {
      port.record("decode_error", {{"code", static_cast<std::int64_t>(e.code())}});
      return;
    }
    if (decoded.dst != ctx.self() && decoded.dst != kBroadcast) return;
    logic_.on_message(port, src, decoded.message);
  }

  void on_timer(Context& ctx, std::uint64_t tag) override {
    SimPort port(ctx, policy_);
    logic_.on_timer(port, tag);
  }

  void on_restart() override { logic_.reset(); }
  std::string state_json() const override { return logic_.state_json(); }

  Logic& logic() { return logic_; }
  const Logic& logic() const { return logic_; }
  const ProfilePolicy& policy() const { return policy_; }

 private:
  ProfilePolicy policy_;
  Logic logic_;
};

}  // namespace vpc
