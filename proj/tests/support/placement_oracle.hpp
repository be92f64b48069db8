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

#include "vpcorch/orchestrator.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace vpc::testing {

// Exhaustive argmax: score every candidate from scratch, then sort by
// (score desc, id asc) and take the head.
inline std::optional<NodeId> brute_force_choice(const std::vector<NodeDescriptor>& candidates) {
  if (candidates.empty()) return std::nullopt;
  double cpu_max = 0, mem_max = 0, lat_max = 0;
  for (const auto& c : candidates) {
    cpu_max = std::max(cpu_max, static_cast<double>(c.cpu_capacity));
    mem_max = std::max(mem_max, static_cast<double>(c.mem_capacity));
    lat_max = std::max(lat_max, static_cast<double>(c.link_latency_estimate));
  }
  std::vector<std::pair<double, std::uint64_t>> scored;
  for (const auto& c : candidates) {
    const double cap = std::min(c.cpu_capacity / cpu_max, c.mem_capacity / mem_max);
    const double lat = lat_max == 0 ? 0.0 : c.link_latency_estimate / lat_max;
    scored.push_back({cap - lat, c.node_id.value});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  return NodeId{scored.front().second};
}

}  // namespace vpc::testing
