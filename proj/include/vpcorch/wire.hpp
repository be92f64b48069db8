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

#include "vpcorch/domain.hpp"

#include <bit>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace vpc {

enum class WireErrc {
  BodyTooLarge,
  TruncatedFrame,
  BadChecksum,
  UnknownTypeTag,
  MalformedBody,
};

inline const char* to_string(WireErrc e) {
  switch (e) {
    case WireErrc::BodyTooLarge: return "BodyTooLarge";
    case WireErrc::TruncatedFrame: return "TruncatedFrame";
    case WireErrc::BadChecksum: return "BadChecksum";
    case WireErrc::UnknownTypeTag: return "UnknownTypeTag";
    case WireErrc::MalformedBody: return "MalformedBody";
  }
  return "?";
}

using WireError = Error<WireErrc>;

enum class FrameProfile : std::uint8_t {
  Compact = 0,  // MAC-style framing
  Routed = 1,   // compact header plus a 20-byte routing extension
};

inline const char* to_string(FrameProfile p) {
  return p == FrameProfile::Compact ? "compact" : "routed";
}

inline constexpr std::size_t kCompactHeaderLen = 16;
inline constexpr std::size_t kRoutingExtLen = 20;
inline constexpr std::size_t kRoutedHeaderLen = kCompactHeaderLen + kRoutingExtLen;
inline constexpr std::size_t kMaxBodyLen = 65535;
inline constexpr std::uint8_t kRoutingVersion = 1;
inline constexpr std::uint8_t kDefaultTtl = 64;

constexpr std::size_t frame_overhead(FrameProfile p) {
  return p == FrameProfile::Compact ? kCompactHeaderLen : kRoutedHeaderLen;
}

// Lifecycle phase of a promoted VPC, reported in status messages.
enum class Phase : std::uint8_t {
  Fetching = 0,
  Live = 1,
  AwaitHandover = 2,
  HandedOver = 3,
};

enum class StatusKind : std::uint8_t {
  Heartbeat = 0,
  Ready = 1,
  Fault = 2,
  SelfPromoted = 3,
  HandoverAbort = 4,
};

enum class ReleaseMode : std::uint8_t {
  Release = 0,
  Disable = 1,
};

struct Discovery {
  NodeId vpcmo;
  std::uint64_t round{0};
  bool operator==(const Discovery&) const = default;
};

struct Register {
  NodeDescriptor descriptor;
  bool operator==(const Register&) const = default;
};

struct DeployCmd {
  DeploymentSpec spec;
  bool operator==(const DeployCmd&) const = default;
};

struct PeerEntry {
  NodeId node;
  std::uint32_t rank{0};
  bool operator==(const PeerEntry&) const = default;
};

struct PromoteCmd {
  static constexpr std::uint8_t kAwaitHandover = 0x01;
  static constexpr std::uint8_t kEpochRefresh = 0x02;

  DeploymentSpec spec;
  NodeRole target;
  Epoch epoch;
  std::uint8_t flags{0};
  NodeId active;       // the active VPC the target follows (or itself)
  NodeId predecessor;  // old active during a scheduled handover
  NodeId registry;
  NodeId vpcmo;
  std::vector<PeerEntry> inactive_peers;

  bool operator==(const PromoteCmd&) const = default;
};

struct Sync {
  static constexpr std::uint8_t kPreLive = 0x01;
  static constexpr std::uint8_t kHandedOver = 0x02;

  std::string deployment_id;
  Epoch epoch;
  std::uint64_t round{0};
  std::uint64_t seq{0};
  std::uint64_t input_seq{0};
  Digest digest{};
  std::uint8_t flags{0};
  Micros send_stamp{0};  // sender's local clock
  std::optional<VpcState> snapshot;

  bool operator==(const Sync&) const = default;
};

struct SyncAck {
  std::string deployment_id;
  Epoch epoch;
  std::uint64_t round{0};
  std::uint64_t seq{0};
  bool in_sync{false};
  Micros echo_stamp{0};
  bool operator==(const SyncAck&) const = default;
};

struct Status {
  NodeId node;
  std::string deployment_id;
  NodeRole role;
  Epoch epoch;
  std::uint64_t seq{0};
  StatusKind kind{StatusKind::Heartbeat};
  Phase phase{Phase::Fetching};
  bool operator==(const Status&) const = default;
};

struct ProcessDataMsg {
  ProcessData data;
  bool operator==(const ProcessDataMsg&) const = default;
};

struct ControlDataMsg {
  ControlData data;
  bool operator==(const ControlDataMsg&) const = default;
};

struct BackupRequest {
  std::string deployment_id;
  Epoch epoch;
  NodeId requester;
  NodeId failed;  // 0 when no specific member failed
  bool operator==(const BackupRequest&) const = default;
};

struct HandoverCmd {
  std::string deployment_id;
  Micros handover_time{0};
  NodeId old_active;
  NodeId new_active;
  Epoch new_epoch;
  Micros abort_lead{0};  // new active verifies state this long before the date
  bool operator==(const HandoverCmd&) const = default;
};

struct ReleaseCmd {
  std::string deployment_id;
  ReleaseMode mode{ReleaseMode::Release};
  Epoch epoch;
  bool operator==(const ReleaseCmd&) const = default;
};

struct FetchVpf {
  std::string vpf_id;
  SemVer version;
  bool operator==(const FetchVpf&) const = default;
};

struct VpfBlob {
  VpfDescriptor descriptor;
  bool found{false};
  Bytes blob;
  bool operator==(const VpfBlob&) const = default;
};

// Alternative index + 1 is the wire type tag.
using Message = std::variant<Discovery, Register, DeployCmd, PromoteCmd, Sync, SyncAck, Status,
                             ProcessDataMsg, ControlDataMsg, BackupRequest, HandoverCmd,
                             ReleaseCmd, FetchVpf, VpfBlob>;

inline constexpr std::size_t kMessageVariants = std::variant_size_v<Message>;

inline std::uint8_t type_tag(const Message& m) { return static_cast<std::uint8_t>(m.index() + 1); }

inline const char* message_name(std::uint8_t tag) {
  static constexpr const char* kNames[] = {
      "?",          "Discovery",     "Register",       "DeployCmd",  "PromoteCmd",
      "Sync",       "SyncAck",       "Status",         "ProcessData", "ControlData",
      "BackupRequest", "HandoverCmd", "ReleaseCmd",   "FetchVpf",   "VpfBlob"};
  return tag < std::size(kNames) ? kNames[tag] : "?";
}

namespace detail {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 7; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void boolean(bool v) { u8(v ? 1 : 0); }
  void str(const std::string& s) {
    if (s.size() > 0xFFFF) throw WireError(WireErrc::BodyTooLarge, "string field too long");
    u16(static_cast<std::uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void bytes(const Bytes& b) {
    if (b.size() > kMaxBodyLen) throw WireError(WireErrc::BodyTooLarge, "blob field too long");
    u32(static_cast<std::uint32_t>(b.size()));
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void digest(const Digest& d) { out_.insert(out_.end(), d.begin(), d.end()); }
  template <class Seq>
  void count(const Seq& s) {
    if (s.size() > 0xFFFF) throw WireError(WireErrc::BodyTooLarge, "too many elements");
    u16(static_cast<std::uint16_t>(s.size()));
  }

  Bytes& buffer() { return out_; }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    auto s = take(2);
    return static_cast<std::uint16_t>(s[0] << 8 | s[1]);
  }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (auto b : s) v = v << 8 | b;
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (auto b : s) v = v << 8 | b;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool boolean() {
    auto v = u8();
    if (v > 1) malformed("bool out of range");
    return v == 1;
  }
  std::string str() {
    auto n = u16();
    auto s = take(n);
    return std::string(s.begin(), s.end());
  }
  Bytes bytes() {
    auto n = u32();
    auto s = take(n);
    return Bytes(s.begin(), s.end());
  }
  Digest digest() {
    auto s = take(32);
    Digest d{};
    std::copy(s.begin(), s.end(), d.begin());
    return d;
  }
  std::uint16_t count() { return u16(); }

  bool at_end() const { return pos_ == in_.size(); }

  [[noreturn]] static void malformed(const std::string& what) {
    throw WireError(WireErrc::MalformedBody, "malformed body: " + what);
  }

 private:
  std::span<const std::uint8_t> take(std::size_t n) {
    if (in_.size() - pos_ < n) malformed("field runs past body end");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_{0};
};

inline void put(Writer& w, const NodeRole& r) {
  w.u8(static_cast<std::uint8_t>(r.kind()));
  w.u32(r.rank().value_or(0));
}
inline NodeRole get_role(Reader& r) {
  auto kind = r.u8();
  auto rank = r.u32();
  switch (static_cast<RoleKind>(kind)) {
    case RoleKind::IdleResource:
      if (rank != 0) Reader::malformed("rank on idle role");
      return NodeRole::idle();
    case RoleKind::InactiveVpc: return NodeRole::inactive(rank);
    case RoleKind::ActiveVpc:
      if (rank != 0) Reader::malformed("rank on active role");
      return NodeRole::active();
    case RoleKind::Disabled:
      if (rank != 0) Reader::malformed("rank on disabled role");
      return NodeRole::disabled();
  }
  Reader::malformed("unknown role kind");
}

template <class E>
E get_enum(Reader& r, std::uint8_t max) {
  auto v = r.u8();
  if (v > max) Reader::malformed("enum out of range");
  return static_cast<E>(v);
}

inline void put(Writer& w, const SemVer& v) {
  w.u32(v.major);
  w.u32(v.minor);
  w.u32(v.patch);
}
inline SemVer get_semver(Reader& r) {
  SemVer v;
  v.major = r.u32();
  v.minor = r.u32();
  v.patch = r.u32();
  return v;
}

inline void put(Writer& w, const NodeDescriptor& d) {
  w.u64(d.node_id.value);
  w.u32(d.cpu_capacity);
  w.u32(d.mem_capacity);
  w.u32(d.link_latency_estimate);
  put(w, d.role);
  w.i64(d.last_seen);
  w.u64(d.epoch.value);
}
inline NodeDescriptor get_descriptor(Reader& r) {
  NodeDescriptor d;
  d.node_id = NodeId{r.u64()};
  d.cpu_capacity = r.u32();
  d.mem_capacity = r.u32();
  d.link_latency_estimate = r.u32();
  d.role = get_role(r);
  d.last_seen = r.i64();
  d.epoch = Epoch{r.u64()};
  return d;
}

inline void put(Writer& w, const VpfDescriptor& d) {
  w.str(d.vpf_id);
  put(w, d.version);
  w.u8(static_cast<std::uint8_t>(d.mode.kind));
  w.i64(d.mode.period);
  w.str(d.logic_name);
  w.str(d.state_schema_id);
  w.digest(d.artifact_digest);
}
inline VpfDescriptor get_vpf(Reader& r) {
  VpfDescriptor d;
  d.vpf_id = r.str();
  d.version = get_semver(r);
  d.mode.kind = get_enum<ExecutionMode::Kind>(r, 1);
  d.mode.period = r.i64();
  d.logic_name = r.str();
  d.state_schema_id = r.str();
  d.artifact_digest = r.digest();
  return d;
}

inline void put(Writer& w, const DeploymentSpec& s) {
  w.str(s.deployment_id);
  w.count(s.vpfs);
  for (const auto& v : s.vpfs) put(w, v);
  w.u32(s.redundancy);
  w.i64(s.sync_period);
  w.u32(s.miss_threshold);
  w.i64(s.control_period);
  w.u32(s.snapshot_every);
}
inline DeploymentSpec get_spec(Reader& r) {
  DeploymentSpec s;
  s.deployment_id = r.str();
  auto n = r.count();
  s.vpfs.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) s.vpfs.push_back(get_vpf(r));
  s.redundancy = r.u32();
  s.sync_period = r.i64();
  s.miss_threshold = r.u32();
  s.control_period = r.i64();
  s.snapshot_every = r.u32();
  return s;
}

inline void put(Writer& w, const VpcState& s) {
  w.u64(s.seq);
  w.count(s.vpf_states);
  for (const auto& [id, blob] : s.vpf_states) {
    w.str(id);
    w.bytes(blob);
  }
}
inline VpcState get_state(Reader& r) {
  VpcState s;
  s.seq = r.u64();
  auto n = r.count();
  std::string prev;
  for (std::uint16_t i = 0; i < n; ++i) {
    auto id = r.str();
    if (i > 0 && id <= prev) Reader::malformed("state map not strictly sorted");
    prev = id;
    s.vpf_states.emplace(id, r.bytes());
  }
  return s;
}

inline void put(Writer& w, const std::map<std::string, double>& m) {
  w.count(m);
  for (const auto& [k, v] : m) {
    w.str(k);
    w.f64(v);
  }
}
inline std::map<std::string, double> get_values(Reader& r) {
  std::map<std::string, double> m;
  auto n = r.count();
  std::string prev;
  for (std::uint16_t i = 0; i < n; ++i) {
    auto k = r.str();
    if (i > 0 && k <= prev) Reader::malformed("value map not strictly sorted");
    prev = k;
    m.emplace(k, r.f64());
  }
  return m;
}

inline void encode_body(Writer& w, const Discovery& m) {
  w.u64(m.vpcmo.value);
  w.u64(m.round);
}
inline void encode_body(Writer& w, const Register& m) { put(w, m.descriptor); }
inline void encode_body(Writer& w, const DeployCmd& m) { put(w, m.spec); }
inline void encode_body(Writer& w, const PromoteCmd& m) {
  put(w, m.spec);
  put(w, m.target);
  w.u64(m.epoch.value);
  w.u8(m.flags);
  w.u64(m.active.value);
  w.u64(m.predecessor.value);
  w.u64(m.registry.value);
  w.u64(m.vpcmo.value);
  w.count(m.inactive_peers);
  for (const auto& p : m.inactive_peers) {
    w.u64(p.node.value);
    w.u32(p.rank);
  }
}
inline void encode_body(Writer& w, const Sync& m) {
  w.str(m.deployment_id);
  w.u64(m.epoch.value);
  w.u64(m.round);
  w.u64(m.seq);
  w.u64(m.input_seq);
  w.digest(m.digest);
  w.u8(m.flags);
  w.i64(m.send_stamp);
  w.boolean(m.snapshot.has_value());
  if (m.snapshot) put(w, *m.snapshot);
}
inline void encode_body(Writer& w, const SyncAck& m) {
  w.str(m.deployment_id);
  w.u64(m.epoch.value);
  w.u64(m.round);
  w.u64(m.seq);
  w.boolean(m.in_sync);
  w.i64(m.echo_stamp);
}
inline void encode_body(Writer& w, const Status& m) {
  w.u64(m.node.value);
  w.str(m.deployment_id);
  put(w, m.role);
  w.u64(m.epoch.value);
  w.u64(m.seq);
  w.u8(static_cast<std::uint8_t>(m.kind));
  w.u8(static_cast<std::uint8_t>(m.phase));
}
inline void encode_body(Writer& w, const ProcessDataMsg& m) {
  w.str(m.data.deployment_id);
  w.u64(m.data.seq_hint);
  w.i64(m.data.timestamp);
  put(w, m.data.inputs);
}
inline void encode_body(Writer& w, const ControlDataMsg& m) {
  w.str(m.data.deployment_id);
  w.u64(m.data.epoch.value);
  w.u64(m.data.seq);
  w.u64(m.data.input_seq);
  put(w, m.data.outputs);
}
inline void encode_body(Writer& w, const BackupRequest& m) {
  w.str(m.deployment_id);
  w.u64(m.epoch.value);
  w.u64(m.requester.value);
  w.u64(m.failed.value);
}
inline void encode_body(Writer& w, const HandoverCmd& m) {
  w.str(m.deployment_id);
  w.i64(m.handover_time);
  w.u64(m.old_active.value);
  w.u64(m.new_active.value);
  w.u64(m.new_epoch.value);
  w.i64(m.abort_lead);
}
inline void encode_body(Writer& w, const ReleaseCmd& m) {
  w.str(m.deployment_id);
  w.u8(static_cast<std::uint8_t>(m.mode));
  w.u64(m.epoch.value);
}
inline void encode_body(Writer& w, const FetchVpf& m) {
  w.str(m.vpf_id);
  put(w, m.version);
}
inline void encode_body(Writer& w, const VpfBlob& m) {
  put(w, m.descriptor);
  w.boolean(m.found);
  w.bytes(m.blob);
}

inline Message decode_body(std::uint8_t tag, Reader& r) {
  switch (tag) {
    case 1: {
      Discovery m;
      m.vpcmo = NodeId{r.u64()};
      m.round = r.u64();
      return m;
    }
    case 2: return Register{get_descriptor(r)};
    case 3: return DeployCmd{get_spec(r)};
    case 4: {
      PromoteCmd m;
      m.spec = get_spec(r);
      m.target = get_role(r);
      m.epoch = Epoch{r.u64()};
      m.flags = r.u8();
      m.active = NodeId{r.u64()};
      m.predecessor = NodeId{r.u64()};
      m.registry = NodeId{r.u64()};
      m.vpcmo = NodeId{r.u64()};
      auto n = r.count();
      for (std::uint16_t i = 0; i < n; ++i) {
        PeerEntry p;
        p.node = NodeId{r.u64()};
        p.rank = r.u32();
        m.inactive_peers.push_back(p);
      }
      return m;
    }
    case 5: {
      Sync m;
      m.deployment_id = r.str();
      m.epoch = Epoch{r.u64()};
      m.round = r.u64();
      m.seq = r.u64();
      m.input_seq = r.u64();
      m.digest = r.digest();
      m.flags = r.u8();
      m.send_stamp = r.i64();
      if (r.boolean()) m.snapshot = get_state(r);
      return m;
    }
    case 6: {
      SyncAck m;
      m.deployment_id = r.str();
      m.epoch = Epoch{r.u64()};
      m.round = r.u64();
      m.seq = r.u64();
      m.in_sync = r.boolean();
      m.echo_stamp = r.i64();
      return m;
    }
    case 7: {
      Status m;
      m.node = NodeId{r.u64()};
      m.deployment_id = r.str();
      m.role = get_role(r);
      m.epoch = Epoch{r.u64()};
      m.seq = r.u64();
      m.kind = get_enum<StatusKind>(r, 4);
      m.phase = get_enum<Phase>(r, 3);
      return m;
    }
    case 8: {
      ProcessDataMsg m;
      m.data.deployment_id = r.str();
      m.data.seq_hint = r.u64();
      m.data.timestamp = r.i64();
      m.data.inputs = get_values(r);
      return m;
    }
    case 9: {
      ControlDataMsg m;
      m.data.deployment_id = r.str();
      m.data.epoch = Epoch{r.u64()};
      m.data.seq = r.u64();
      m.data.input_seq = r.u64();
      m.data.outputs = get_values(r);
      return m;
    }
    case 10: {
      BackupRequest m;
      m.deployment_id = r.str();
      m.epoch = Epoch{r.u64()};
      m.requester = NodeId{r.u64()};
      m.failed = NodeId{r.u64()};
      return m;
    }
    case 11: {
      HandoverCmd m;
      m.deployment_id = r.str();
      m.handover_time = r.i64();
      m.old_active = NodeId{r.u64()};
      m.new_active = NodeId{r.u64()};
      m.new_epoch = Epoch{r.u64()};
      m.abort_lead = r.i64();
      return m;
    }
    case 12: {
      ReleaseCmd m;
      m.deployment_id = r.str();
      m.mode = get_enum<ReleaseMode>(r, 1);
      m.epoch = Epoch{r.u64()};
      return m;
    }
    case 13: {
      FetchVpf m;
      m.vpf_id = r.str();
      m.version = get_semver(r);
      return m;
    }
    case 14: {
      VpfBlob m;
      m.descriptor = get_vpf(r);
      m.found = r.boolean();
      m.blob = r.bytes();
      return m;
    }
    default:
      throw WireError(WireErrc::UnknownTypeTag, "unknown type tag " + std::to_string(tag));
  }
}

inline void put_addr(Bytes& out, std::size_t at, std::uint64_t v, int len) {
  for (int i = 0; i < len; ++i) out[at + i] = static_cast<std::uint8_t>(v >> (8 * (len - 1 - i)));
}

inline std::uint64_t get_addr(std::span<const std::uint8_t> in, std::size_t at, int len) {
  std::uint64_t v = 0;
  for (int i = 0; i < len; ++i) v = v << 8 | in[at + i];
  return v;
}

}  // namespace detail

// 16-bit ones'-complement checksum over the routing extension with the
// checksum field taken as zero.
inline std::uint16_t routing_checksum(std::span<const std::uint8_t> ext) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i + 1 < ext.size(); i += 2) {
    std::uint16_t word = static_cast<std::uint16_t>(ext[i] << 8 | ext[i + 1]);
    if (i == 2) word = 0;
    sum += word;
  }
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum & 0xFFFF);
}

inline Bytes encode(const Message& msg, FrameProfile profile, NodeId src, NodeId dst) {
  detail::Writer body;
  std::visit([&body](const auto& m) { detail::encode_body(body, m); }, msg);
  const Bytes& b = body.buffer();
  if (b.size() > kMaxBodyLen) {
    throw WireError(WireErrc::BodyTooLarge, "body of " + std::to_string(b.size()) + " bytes");
  }

  const std::size_t header = frame_overhead(profile);
  Bytes out(header + b.size());
  detail::put_addr(out, 0, dst.value & 0xFFFFFFFFFFFFull, 6);
  detail::put_addr(out, 6, src.value & 0xFFFFFFFFFFFFull, 6);
  out[12] = type_tag(msg);
  out[13] = profile == FrameProfile::Routed ? 0x01 : 0x00;
  detail::put_addr(out, 14, b.size(), 2);

  if (profile == FrameProfile::Routed) {
    const std::size_t ext = kCompactHeaderLen;
    out[ext + 0] = kRoutingVersion;
    out[ext + 1] = kDefaultTtl;
    detail::put_addr(out, ext + 4, src.value & 0xFFFFFFFFull, 4);
    detail::put_addr(out, ext + 8, dst.value & 0xFFFFFFFFull, 4);
    detail::put_addr(out, ext + 12, type_tag(msg), 4);  // flow label
    auto sum = routing_checksum(std::span<const std::uint8_t>(out).subspan(ext, kRoutingExtLen));
    detail::put_addr(out, ext + 2, sum, 2);
  }
  std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(header));
  return out;
}

struct DecodedFrame {
  Message message;
  FrameProfile profile{FrameProfile::Compact};
  NodeId src;
  NodeId dst;
  std::size_t frame_len{0};  // header + body; bytes past this are ignored

  bool operator==(const DecodedFrame&) const = default;
};

inline DecodedFrame decode(std::span<const std::uint8_t> in) {
  if (in.size() < kCompactHeaderLen) {
    throw WireError(WireErrc::TruncatedFrame, "frame shorter than compact header");
  }
  const bool routed = (in[13] & 0x01) != 0;
  if ((in[13] & 0xFE) != 0) detail::Reader::malformed("reserved flag bits set");
  const FrameProfile profile = routed ? FrameProfile::Routed : FrameProfile::Compact;
  const std::size_t header = frame_overhead(profile);
  if (in.size() < header) {
    throw WireError(WireErrc::TruncatedFrame, "frame shorter than routed header");
  }

  DecodedFrame out;
  out.profile = profile;
  out.dst = NodeId{detail::get_addr(in, 0, 6)};
  out.src = NodeId{detail::get_addr(in, 6, 6)};
  const std::uint8_t tag = in[12];
  const std::size_t body_len = detail::get_addr(in, 14, 2);

  if (routed) {
    auto ext = in.subspan(kCompactHeaderLen, kRoutingExtLen);
    auto stored = static_cast<std::uint16_t>(detail::get_addr(ext, 2, 2));
    if (routing_checksum(ext) != stored) {
      throw WireError(WireErrc::BadChecksum, "routing header checksum mismatch");
    }
    if (ext[0] != kRoutingVersion) detail::Reader::malformed("routing version");
    if (detail::get_addr(ext, 4, 4) != (out.src.value & 0xFFFFFFFFull) ||
        detail::get_addr(ext, 8, 4) != (out.dst.value & 0xFFFFFFFFull)) {
      detail::Reader::malformed("route address does not match link address");
    }
    if (detail::get_addr(ext, 12, 4) != tag || detail::get_addr(ext, 16, 4) != 0) {
      detail::Reader::malformed("flow label or reserved field");
    }
  }
  if (tag == 0 || tag > kMessageVariants) {
    throw WireError(WireErrc::UnknownTypeTag, "unknown type tag " + std::to_string(tag));
  }
  if (in.size() - header < body_len) {
    throw WireError(WireErrc::TruncatedFrame, "body shorter than declared length");
  }

  detail::Reader r(in.subspan(header, body_len));
  out.message = detail::decode_body(tag, r);
  if (!r.at_end()) detail::Reader::malformed("trailing bytes inside body");
  out.frame_len = header + body_len;
  return out;
}

// Type tag of an encoded frame without decoding the body.
inline std::uint8_t peek_type_tag(std::span<const std::uint8_t> frame) {
  return frame.size() > 12 ? frame[12] : 0;
}

}  // namespace vpc
