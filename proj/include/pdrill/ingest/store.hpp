// Copyright 2026 The pdrill Authors.
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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdrill/core/errors.hpp"
#include "pdrill/partition/partition.hpp"
#include "pdrill/store/format.hpp"
#include "pdrill/store/shard.hpp"

namespace pdrill {

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

struct TableEntry {
  std::string name;
  std::uint64_t rows = 0;
  PartitionSpec partition;
  std::size_t shard_rows = 0;
  std::uint64_t shard_seed = 0;
  std::vector<std::string> shard_files;  // relative to the store directory
};

/// Store directory index. No timestamps or host data, so re-importing the
/// same input writes the same bytes.
struct Manifest {
  std::vector<TableEntry> tables;  // sorted by name

  const TableEntry* find(const std::string& name) const {
    for (const auto& t : tables) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  void upsert(TableEntry e) {
    std::erase_if(tables, [&](const TableEntry& t) { return t.name == e.name; });
    tables.push_back(std::move(e));
    std::sort(tables.begin(), tables.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  }

  std::string to_json() const {
    nlohmann::json j;
    j["version"] = kManifestVersion;
    j["tables"] = nlohmann::json::array();
    for (const auto& t : tables) {
      j["tables"].push_back({{"name", t.name},
                             {"rows", t.rows},
                             {"partition", {{"fields", t.partition.fields}, {"max_chunk_rows", t.partition.max_chunk_rows}}},
                             {"shard_rows", t.shard_rows},
                             {"shard_seed", t.shard_seed},
                             {"shards", t.shard_files}});
    }
    return j.dump(2) + "\n";
  }

  static Manifest from_json(const std::string& text) {
    Manifest m;
    try {
      const auto j = nlohmann::json::parse(text);
      if (j.at("version").get<int>() != kManifestVersion) {
        throw Error(ErrorCode::kBadVersion, "unsupported manifest version " + j.at("version").dump());
      }
      for (const auto& t : j.at("tables")) {
        TableEntry e;
        e.name = t.at("name").get<std::string>();
        e.rows = t.at("rows").get<std::uint64_t>();
        e.partition.fields = t.at("partition").at("fields").get<std::vector<std::string>>();
        e.partition.max_chunk_rows = t.at("partition").at("max_chunk_rows").get<std::size_t>();
        e.shard_rows = t.at("shard_rows").get<std::size_t>();
        e.shard_seed = t.at("shard_seed").get<std::uint64_t>();
        e.shard_files = t.at("shards").get<std::vector<std::string>>();
        m.upsert(std::move(e));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorrupt, std::string("bad manifest: ") + e.what());
    }
    return m;
  }

  static Manifest read(const std::filesystem::path& dir) {
    const Bytes b = read_file_bytes(dir / kManifestName);
    return from_json(std::string(b.begin(), b.end()));
  }

  /// Writes through a temporary file and a rename.
  void write(const std::filesystem::path& dir) const {
    const auto tmp = dir / (std::string(kManifestName) + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
      out << to_json();
      if (!out) throw Error(ErrorCode::kIo, "write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, dir / kManifestName);
  }
};

struct StoreTable {
  TableEntry entry;
  Schema schema;
  std::vector<std::shared_ptr<const Shard>> shards;

  std::vector<const Shard*> shard_ptrs() const {
    std::vector<const Shard*> out;
    for (const auto& s : shards) out.push_back(s.get());
    return out;
  }
};

/// Every table of a store directory, loaded and verified. Shard ids are
/// renumbered store-wide on load so cache keys never collide across tables.
class Store {
 public:
  static Store open(const std::filesystem::path& dir) {
    Store st;
    st.dir_ = dir;
    st.manifest_ = Manifest::read(dir);
    std::uint32_t next_id = 0;
    for (const auto& e : st.manifest_.tables) {
      StoreTable t;
      t.entry = e;
      std::uint64_t rows = 0;
      for (const auto& file : e.shard_files) {
        Shard s = read_shard_file(dir / file);
        if (s.schema.table_name != e.name) {
          throw Error(ErrorCode::kCorrupt, "shard '" + file + "' belongs to table '" + s.schema.table_name + "'");
        }
        if (t.shards.empty()) {
          t.schema = s.schema;
        } else if (!(s.schema == t.schema)) {
          throw Error(ErrorCode::kCorrupt, "shard '" + file + "' has a different schema");
        }
        rows += s.row_count();
        s.shard_id = next_id++;
        t.shards.push_back(std::make_shared<const Shard>(std::move(s)));
      }
      if (t.shards.empty()) throw Error(ErrorCode::kCorrupt, "table '" + e.name + "' has no shards");
      if (rows != e.rows) throw Error(ErrorCode::kCorrupt, "table '" + e.name + "' row count differs from manifest");
      st.tables_.emplace(e.name, std::move(t));
    }
    return st;
  }

  const std::filesystem::path& dir() const { return dir_; }
  const Manifest& manifest() const { return manifest_; }

  std::vector<std::string> table_names() const {
    std::vector<std::string> out;
    for (const auto& [name, t] : tables_) out.push_back(name);
    return out;
  }

  const StoreTable* find(const std::string& name) const {
    auto it = tables_.find(name);
    return it == tables_.end() ? nullptr : &it->second;
  }

  const StoreTable& table(const std::string& name) const {
    if (const auto* t = find(name)) return *t;
    throw Error(ErrorCode::kInvalidArgument, "unknown table '" + name + "'");
  }

 private:
  std::filesystem::path dir_;
  Manifest manifest_;
  std::map<std::string, StoreTable> tables_;
};

}  // namespace pdrill
