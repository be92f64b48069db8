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

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vpc {

// Logical time in integer microseconds. No floating point ever enters the
// event queue.
using Micros = std::int64_t;
inline constexpr Micros kForever = std::numeric_limits<Micros>::max();

using Bytes = std::vector<std::uint8_t>;

struct NodeId {
  std::uint64_t value{0};

  constexpr auto operator<=>(const NodeId&) const = default;
};

// Broadcast address in the 6-byte link address space.
inline constexpr NodeId kBroadcast{0xFFFFFFFFFFFFull};

struct Epoch {
  std::uint64_t value{0};

  constexpr auto operator<=>(const Epoch&) const = default;
  constexpr Epoch next() const { return Epoch{value + 1}; }
};

struct SemVer {
  std::uint32_t major{0};
  std::uint32_t minor{0};
  std::uint32_t patch{0};

  constexpr auto operator<=>(const SemVer&) const = default;

  std::string str() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." +
           std::to_string(patch);
  }
};

// Errors carry a module-specific code so callers can branch on it without
// string matching.
template <class Code>
class Error : public std::runtime_error {
 public:
  Error(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

}  // namespace vpc

template <>
struct std::hash<vpc::NodeId> {
  std::size_t operator()(const vpc::NodeId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
