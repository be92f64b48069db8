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

#include "vpcorch/port.hpp"

#include <map>
#include <string>
#include <vector>

namespace vpc::testing {

// Port that just writes everything down. Time is whatever the test says.
class FakePort final : public Port {
 public:
  struct Sent {
    NodeId dst;
    Message msg;
  };
  struct Timer {
    TimerId id;
    Micros due;
    std::uint64_t tag;
  };
  struct Record {
    std::string label;
    std::map<std::string, std::int64_t> attrs;
  };

  explicit FakePort(NodeId self) : self_(self) {}

  NodeId self() const override { return self_; }
  Micros local_clock() const override { return now; }
  void send(NodeId dst, const Message& m) override { sent.push_back({dst, m}); }
  void broadcast(const Message& m) override { sent.push_back({kBroadcast, m}); }
  TimerId set_timer(Micros delay, std::uint64_t tag) override {
    timers.push_back({++next_timer_, now + delay, tag});
    return next_timer_;
  }
  void cancel_timer(TimerId id) override { std::erase_if(timers, [&](const Timer& t) { return t.id == id; }); }
  void record(std::string_view label, std::initializer_list<Attr> attrs) override {
    Record r{std::string(label), {}};
    for (const auto& a : attrs) r.attrs[std::string(a.key)] = a.value;
    records.push_back(std::move(r));
  }

  template <class T>
  std::vector<std::pair<NodeId, T>> sent_of() const {
    std::vector<std::pair<NodeId, T>> out;
    for (const auto& s : sent)
      if (const T* m = std::get_if<T>(&s.msg)) out.push_back({s.dst, *m});
    return out;
  }

  const Record* last(std::string_view label) const {
    for (auto it = records.rbegin(); it != records.rend(); ++it)
      if (it->label == label) return &*it;
    return nullptr;
  }
  std::size_t count(std::string_view label) const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.label == label;
    return n;
  }

  // Removes and returns the earliest pending timer due at or before `until`.
  std::optional<Timer> pop_due(Micros until) {
    auto best = timers.end();
    for (auto it = timers.begin(); it != timers.end(); ++it)
      if (it->due <= until && (best == timers.end() || it->due < best->due)) best = it;
    if (best == timers.end()) return std::nullopt;
    Timer t = *best;
    timers.erase(best);
    return t;
  }

  void clear() {
    sent.clear();
    records.clear();
  }

  Micros now{0};
  std::vector<Sent> sent;
  std::vector<Timer> timers;
  std::vector<Record> records;

 private:
  NodeId self_;
  TimerId next_timer_{0};
};

}  // namespace vpc::testing
