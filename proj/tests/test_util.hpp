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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "pdrill/core/schema.hpp"
#include "pdrill/store/column.hpp"

namespace pdrill::testing {

/// The six-row desk table used throughout the tests.
inline Table desk_d1() {
  Table t;
  t.schema.table_name = "data";
  t.schema.fields = {{"country", ValueKind::kStr, false}, {"latency", ValueKind::kI64, false}};
  const char* countries[] = {"de", "de", "fr", "fr", "us", "us"};
  const std::int64_t latency[] = {10, 20, 15, 25, 30, 30};
  t.columns.resize(2);
  for (int i = 0; i < 6; ++i) {
    t.columns[0].push_back(Value::str(countries[i]));
    t.columns[1].push_back(Value::i64(latency[i]));
  }
  return t;
}

inline std::vector<ChunkRange> single_chunk(std::size_t n) {
  if (n == 0) return {};
  return {ChunkRange{0, n}};
}

inline std::vector<ChunkRange> even_chunks(std::size_t n, std::size_t size) {
  std::vector<ChunkRange> out;
  for (std::size_t b = 0; b < n; b += size) out.push_back({b, std::min(n, b + size)});
  return out;
}

inline std::string random_string(std::mt19937_64& rng, std::size_t max_len, int alphabet = 256) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> ch(0, alphabet - 1);
  std::string s(len(rng), '\0');
  for (auto& c : s) c = static_cast<char>(alphabet == 256 ? ch(rng) : 'a' + ch(rng));
  return s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pdrill_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name, std::ios::binary) << text;
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace pdrill::testing
