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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace vpc {

struct Percentiles {
  std::int64_t p50{0};
  std::int64_t p90{0};
  std::int64_t p99{0};
  std::int64_t max{0};

  bool operator==(const Percentiles&) const = default;
};

// Nearest-rank: the smallest sample with at least q of the data at or below it.
inline std::int64_t nearest_rank(const std::vector<std::int64_t>& sorted, double q) {
  if (sorted.empty()) return 0;
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

inline Percentiles percentiles(std::vector<std::int64_t> samples) {
  std::sort(samples.begin(), samples.end());
  Percentiles p;
  p.p50 = nearest_rank(samples, 0.50);
  p.p90 = nearest_rank(samples, 0.90);
  p.p99 = nearest_rank(samples, 0.99);
  p.max = samples.empty() ? 0 : samples.back();
  return p;
}

}  // namespace vpc
