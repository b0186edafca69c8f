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
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pdrill/core/hash.hpp"
#include "pdrill/core/schema.hpp"

namespace pdrill::synth {

/// Names shaped like warehouse table paths: a few thousand distinct
/// directory prefixes, each with a run of dated tables under it. Sorted
/// neighbours share most of their bytes. `day_of` receives each name's day
/// offset from 2011-01-01.
inline std::vector<std::string> prefix_heavy_names(std::size_t count, std::uint64_t seed = 7,
                                                   std::vector<std::uint32_t>* day_of = nullptr) {
  static const char* kTeams[] = {"ads", "search", "geo", "mail", "video", "maps", "news", "shopping",
                                 "play", "books", "photos", "drive", "voice", "cloud", "fi", "travel"};
  static const char* kKinds[] = {"clicks", "impressions", "queries", "sessions", "errors", "latency",
                                 "requests", "spam", "billing", "quota"};
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  out.reserve(count);
  std::size_t dir = 0;
  while (out.size() < count) {
    const std::string team = kTeams[dir % std::size(kTeams)];
    const std::string kind = kKinds[(dir / std::size(kTeams)) % std::size(kKinds)];
    const std::string prefix = "/cns/" + team + "-d/home/" + team + "-logs/" + kind + "/v" +
                               std::to_string(dir / (std::size(kTeams) * std::size(kKinds)) + 1) + "/" + kind +
                               "_daily_";
    const std::size_t days = 20 + rng() % 60;
    for (std::size_t d = 0; d < days && out.size() < count; ++d) {
      const int y = 2011 + static_cast<int>(d / 360);
      const int m = 1 + static_cast<int>(d / 30 % 12);
      const int day = 1 + static_cast<int>(d % 30);
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d%02d%02d", y, m, day);
      out.push_back(prefix + buf);
      if (day_of) day_of->push_back(static_cast<std::uint32_t>(d / 30 % 12 * 31 + d % 30));
    }
    ++dir;
  }
  return out;
}

inline const std::vector<std::string>& country_codes() {
  static const std::vector<std::string> kCodes = {"us", "de", "fr", "jp", "gb", "in", "br", "ca", "it",
                                                  "es", "mx", "kr", "ru", "nl", "au", "se", "ch", "pl",
                                                  "tr", "be", "ar", "at", "dk", "no", "fi"};
  return kCodes;
}

struct LogConfig {
  std::size_t rows = 1000000;
  std::size_t countries = 25;
  std::size_t table_names = 120000;
  std::uint64_t seed = 42;
  std::int64_t start_seconds = 1293840000;  // 2011-01-01
  std::size_t days = 90;
};

/// Query-log-like rows: country (Zipf over `countries` codes), table_name
/// (Zipf over a prefix-heavy pool, offset per country), timestamp (a few
/// days after the table's date, wrapped into `days`) and latency (a
/// per-table base plus exponential noise).
inline Table generate_logs(const LogConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  const auto& codes = country_codes();
  const std::size_t nc = std::min(cfg.countries, codes.size());
  std::vector<std::uint32_t> name_day;
  const std::vector<std::string> names = prefix_heavy_names(cfg.table_names, cfg.seed ^ 0x5bd1e995u, &name_day);

  std::vector<double> cw(nc);
  for (std::size_t i = 0; i < nc; ++i) cw[i] = 1.0 / std::pow(double(i + 1), 1.1);
  std::discrete_distribution<std::size_t> country_dist(cw.begin(), cw.end());
  std::vector<double> nw(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) nw[i] = 1.0 / std::pow(double(i + 1), 0.8);
  std::discrete_distribution<std::size_t> name_dist(nw.begin(), nw.end());
  std::uniform_int_distribution<std::int64_t> second(0, 86399);
  std::exponential_distribution<double> lag(1.0 / 2.0);
  std::exponential_distribution<double> noise(1.0 / 6.0);
  std::vector<std::size_t> shuffle(names.size());
  for (std::size_t i = 0; i < shuffle.size(); ++i) shuffle[i] = i;
  std::shuffle(shuffle.begin(), shuffle.end(), rng);

  Table t;
  t.schema.table_name = "data";
  t.schema.fields = {{"timestamp", ValueKind::kTimestamp, false},
                     {"table_name", ValueKind::kStr, false},
                     {"latency", ValueKind::kI64, false},
                     {"country", ValueKind::kStr, false}};
  t.columns.resize(4);
  for (auto& c : t.columns) c.reserve(cfg.rows);
  for (std::size_t r = 0; r < cfg.rows; ++r) {
    const std::size_t c = country_dist(rng);
    const std::size_t n = shuffle[(name_dist(rng) + c * (names.size() / nc)) % names.size()];
    const std::int64_t base = std::int64_t(hash64(names[n]) % 400) + 5;
    const std::int64_t day = std::int64_t(name_day[n] + std::uint32_t(lag(rng))) % std::int64_t(std::max<std::size_t>(cfg.days, 1));
    t.columns[0].push_back(Value::timestamp(cfg.start_seconds + day * 86400 + second(rng)));
    t.columns[1].push_back(Value::str(names[n]));
    t.columns[2].push_back(Value::i64(base + std::int64_t(noise(rng))));
    t.columns[3].push_back(Value::str(codes[c]));
  }
  return t;
}

}  // namespace pdrill::synth
