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

#include "vpcorch/digest.hpp"
#include "vpcorch/simnet.hpp"

#include <string>

namespace vpc {

namespace detail {

inline void append_escaped(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
}

}  // namespace detail

// One record per line: time, kind, src, dst, type_tag, detail. Final node
// states follow the events. Field order is fixed so the bytes are stable.
inline std::string event_to_json(const SimEvent& e) {
  std::string out;
  out.reserve(128);
  out += "{\"time\":";
  out += std::to_string(e.time);
  out += ",\"kind\":\"";
  out += to_string(e.kind);
  out += "\",\"src\":";
  out += std::to_string(e.src.value);
  out += ",\"dst\":";
  out += std::to_string(e.dst.value);
  out += ",\"type_tag\":";
  out += std::to_string(e.type_tag);
  out += ",\"detail\":{\"label\":\"";
  detail::append_escaped(out, e.label);
  out += '"';
  for (const auto& a : e.attributes()) {
    out += ",\"";
    detail::append_escaped(out, a.key);
    out += "\":";
    out += std::to_string(a.value);
  }
  out += "}}";
  return out;
}

inline std::string trace_to_jsonl(const Trace& t) {
  std::string out;
  out.reserve(t.events.size() * 110);
  for (const auto& e : t.events) {
    out += event_to_json(e);
    out += '\n';
  }
  for (const auto& f : t.final_states) {
    out += "{\"final\":{\"node\":";
    out += std::to_string(f.node.value);
    out += ",\"alive\":";
    out += f.alive ? "true" : "false";
    out += ",\"state\":";
    out += f.state_json;
    out += "}}\n";
  }
  return out;
}

inline std::string trace_to_csv(const Trace& t) {
  std::string out = "time,kind,src,dst,type_tag,label,attrs\n";
  for (const auto& e : t.events) {
    out += std::to_string(e.time) + ',' + to_string(e.kind) + ',' + std::to_string(e.src.value) + ',' +
           std::to_string(e.dst.value) + ',' + std::to_string(e.type_tag) + ',';
    out += e.label;
    out += ',';
    bool first = true;
    for (const auto& a : e.attributes()) {
      if (!first) out += ';';
      first = false;
      out += a.key;
      out += '=';
      out += std::to_string(a.value);
    }
    out += '\n';
  }
  return out;
}

inline std::string content_hash(std::string_view bytes) { return to_hex(sha256(bytes)); }

}  // namespace vpc
