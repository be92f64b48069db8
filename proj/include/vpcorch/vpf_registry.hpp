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

#include "vpcorch/json_codec.hpp"
#include "vpcorch/port.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace vpc {

enum class RegistryErrc {
  DuplicateVersion,
  NotFound,
  CorruptStore,
};

using RegistryError = Error<RegistryErrc>;

struct ArtifactRecord {
  VpfDescriptor descriptor;  // artifact_digest always equals sha256(blob)
  Bytes blob;
};

struct CatalogEntry {
  std::string vpf_id;
  SemVer version;
  Digest digest{};

  bool operator==(const CatalogEntry&) const = default;
};

// Content-addressed VPF store. With a directory it persists as
//   <dir>/manifest.jsonl   one descriptor per line, append-only
//   <dir>/blobs/<hex>      one file per digest
// Without one it lives in memory. Reads take a shared lock, publishes an
// exclusive one.
class VpfRegistry {
 public:
  VpfRegistry() = default;

  explicit VpfRegistry(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(*dir_ / "blobs");
    load();
  }

  Digest publish(VpfDescriptor desc, const Bytes& blob) {
    std::unique_lock lock(mu_);
    Key key{desc.vpf_id, desc.version};
    if (records_.count(key)) {
      throw RegistryError(RegistryErrc::DuplicateVersion,
                          desc.vpf_id + "@" + desc.version.str() + " already published");
    }
    desc.artifact_digest = sha256(blob);
    if (dir_) persist(desc, blob);
    records_.emplace(key, ArtifactRecord{desc, blob});
    return desc.artifact_digest;
  }

  ArtifactRecord fetch(const std::string& vpf_id, const SemVer& version) const {
    std::shared_lock lock(mu_);
    auto it = records_.find(Key{vpf_id, version});
    if (it == records_.end()) {
      throw RegistryError(RegistryErrc::NotFound, vpf_id + "@" + version.str() + " not found");
    }
    return it->second;
  }

  std::optional<ArtifactRecord> try_fetch(const std::string& vpf_id, const SemVer& version) const {
    std::shared_lock lock(mu_);
    auto it = records_.find(Key{vpf_id, version});
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<CatalogEntry> list() const {
    std::shared_lock lock(mu_);
    std::vector<CatalogEntry> out;
    out.reserve(records_.size());
    for (const auto& [key, rec] : records_) {
      out.push_back(CatalogEntry{key.first, key.second, rec.descriptor.artifact_digest});
    }
    return out;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return records_.size();
  }

 private:
  using Key = std::pair<std::string, SemVer>;

  std::filesystem::path blob_path(const Digest& d) const { return *dir_ / "blobs" / to_hex(d); }

  void persist(const VpfDescriptor& desc, const Bytes& blob) {
    {
      std::ofstream out(blob_path(desc.artifact_digest), std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
      if (!out) throw RegistryError(RegistryErrc::CorruptStore, "cannot write blob");
    }
    std::ofstream manifest(*dir_ / "manifest.jsonl", std::ios::app);
    manifest << json(desc).dump() << '\n';
    if (!manifest) throw RegistryError(RegistryErrc::CorruptStore, "cannot append manifest");
  }

  void load() {
    std::ifstream manifest(*dir_ / "manifest.jsonl");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(manifest, line)) {
      ++lineno;
      if (line.empty()) continue;
      VpfDescriptor desc;
      try {
        desc = json::parse(line).get<VpfDescriptor>();
      } catch (const json::exception& e) {
        throw RegistryError(RegistryErrc::CorruptStore,
                            "manifest.jsonl:" + std::to_string(lineno) + ": " + e.what());
      }
      std::ifstream in(blob_path(desc.artifact_digest), std::ios::binary);
      if (!in) throw RegistryError(RegistryErrc::CorruptStore, "missing blob for " + desc.vpf_id);
      Bytes blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (sha256(blob) != desc.artifact_digest) {
        throw RegistryError(RegistryErrc::CorruptStore, "blob digest mismatch for " + desc.vpf_id);
      }
      records_.emplace(Key{desc.vpf_id, desc.version}, ArtifactRecord{desc, std::move(blob)});
    }
  }

  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex mu_;
  std::map<Key, ArtifactRecord> records_;
};

// Registry node in the simulated network: answers FetchVpf with VpfBlob.
class RegistryServer {
 public:
  explicit RegistryServer(std::shared_ptr<const VpfRegistry> store) : store_(std::move(store)) {}

  void on_start(Port&) {}

  void on_message(Port& port, NodeId src, const Message& m) {
    const auto* fetch = std::get_if<FetchVpf>(&m);
    if (fetch == nullptr) return;
    VpfBlob reply;
    if (auto rec = store_->try_fetch(fetch->vpf_id, fetch->version)) {
      reply.found = true;
      reply.descriptor = rec->descriptor;
      reply.blob = rec->blob;
      if (corrupt_next_ > 0 && !reply.blob.empty()) {
        --corrupt_next_;
        reply.blob[0] ^= 0x01;
      }
    } else {
      reply.descriptor.vpf_id = fetch->vpf_id;
      reply.descriptor.version = fetch->version;
    }
    ++served_;
    port.record("vpf_served", {{"node", static_cast<std::int64_t>(src.value)},
                               {"found", reply.found ? 1 : 0}});
    port.send(src, reply);
  }

  void on_timer(Port&, std::uint64_t) {}
  void reset() {}
  std::string state_json() const {
    return json{{"role", "registry"}, {"served", served_}}.dump();
  }

  // Fault hook: flip one byte in each of the next n served blobs.
  void corrupt_next(int n) { corrupt_next_ = n; }

 private:
  std::shared_ptr<const VpfRegistry> store_;
  int corrupt_next_{0};
  std::uint64_t served_{0};
};

}  // namespace vpc
