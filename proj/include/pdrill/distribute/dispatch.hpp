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
#include <cstddef>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pdrill/core/errors.hpp"
#include "pdrill/distribute/tree.hpp"
#include "pdrill/store/shard.hpp"

namespace pdrill {

/// Simulated behaviour of one worker. Response time of a sub-query is
/// (latency_ms + Exp(jitter_ms)) * slow_factor on a virtual clock.
struct WorkerSpec {
  double latency_ms = 5.0;
  double jitter_ms = 2.0;  // mean of the exponential part; 0 disables it
  double slow_factor = 1.0;
  double fail_probability = 0.0;
  bool failed = false;  // never answers
};

struct ClusterConfig {
  std::size_t workers = 4;
  std::vector<WorkerSpec> specs;  // per worker; missing entries use defaults
  std::uint64_t seed = 1;
  double timeout_ms = 60000.0;
  std::size_t levels = 2;
  std::size_t fan_in = kDefaultFanIn;
  QueryOptions query;

  WorkerSpec spec(std::size_t w) const { return w < specs.size() ? specs[w] : WorkerSpec{}; }
};

/// primary = s mod W, replica = (s + 1) mod W.
struct ShardAssignment {
  std::vector<const Shard*> shards;
  std::vector<std::pair<std::size_t, std::size_t>> placement;

  static ShardAssignment make(std::vector<const Shard*> shards, std::size_t workers) {
    if (workers < 2) throw Error(ErrorCode::kInvalidArgument, "primary/replica placement needs at least 2 workers");
    ShardAssignment a;
    a.shards = std::move(shards);
    for (std::size_t s = 0; s < a.shards.size(); ++s) a.placement.push_back({s % workers, (s + 1) % workers});
    return a;
  }
};

struct ShardDispatch {
  std::uint32_t shard = 0;
  std::size_t primary = 0;
  std::size_t replica = 0;
  std::optional<double> primary_ms;  // unset: no response
  std::optional<double> replica_ms;
  std::size_t served_by = 0;
  bool replica_served = false;
  double answered_ms = 0.0;
};

struct DispatchStats {
  std::vector<ShardDispatch> shards;
  std::size_t replica_wins = 0;
  std::size_t failed_responses = 0;
  std::size_t late_responses = 0;  // arrived after the sub-query was answered
  std::vector<std::size_t> nodes_per_level;  // leaves first, root last
  double elapsed_ms = 0.0;
  QueryStats query;  // accounting of the winning responses
};

struct DistributedResult {
  ResultSet result;
  DispatchStats stats;
};

/// First-wins collection of sub-query answers keyed by shard-id; repeated
/// or late answers for the same shard are dropped.
class AnswerBoard {
 public:
  bool accept(std::uint32_t shard, std::string payload) { return answers_.try_emplace(shard, std::move(payload)).second; }
  bool answered(std::uint32_t shard) const { return answers_.count(shard) != 0; }
  const std::map<std::uint32_t, std::string>& answers() const { return answers_; }

 private:
  std::map<std::uint32_t, std::string> answers_;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Virtual response time of `worker` for `shard`, or nothing when the
/// attempt fails. Depends only on (seed, shard, worker).
inline std::optional<double> sample_response(const ClusterConfig& c, std::uint32_t shard, std::size_t worker) {
  const WorkerSpec w = c.spec(worker);
  if (w.failed) return std::nullopt;
  std::mt19937_64 rng(mix64(c.seed ^ mix64((std::uint64_t{shard} << 32) ^ worker)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < w.fail_probability) return std::nullopt;
  double t = w.latency_ms;
  if (w.jitter_ms > 0) t += std::exponential_distribution<double>(1.0 / w.jitter_ms)(rng);
  return t * w.slow_factor;
}

/// Consecutive groups whose count gives a tree of the requested depth; the
/// fan-in bound adds levels when needed.
inline std::vector<std::vector<std::size_t>> tree_groups(std::size_t n, std::size_t levels_left, std::size_t fan_in) {
  std::size_t per = fan_in;
  if (levels_left >= 1) {
    per = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(levels_left)) - 1e-9));
    per = std::clamp<std::size_t>(per, 2, fan_in);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += per) {
    std::vector<std::size_t> g;
    for (std::size_t j = i; j < std::min(n, i + per); ++j) g.push_back(j);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace detail

/// Sends each shard's leaf query to its primary and replica, takes the
/// first answer per shard, and merges the answers up the aggregation tree.
/// Both copies always run to completion; their answers must agree.
inline DistributedResult dispatch(const AggregationPlan& plan, const ShardAssignment& assignment,
                                  const ClusterConfig& config) {
  DistributedResult out;
  DispatchStats& st = out.stats;
  const std::size_t n = assignment.shards.size();
  if (assignment.placement.size() != n) throw Error(ErrorCode::kInvalidArgument, "assignment does not place every shard");

  struct Attempt {
    std::optional<double> ms;
    std::string payload;
    QueryStats stats;
  };
  std::vector<Attempt> attempts(2 * n);
  std::vector<std::future<void>> tasks;
  for (std::size_t s = 0; s < n; ++s) {
    const Shard& shard = *assignment.shards[s];
    const std::size_t workers[2] = {assignment.placement[s].first, assignment.placement[s].second};
    if (workers[0] == workers[1]) throw Error(ErrorCode::kInvalidArgument, "primary and replica must differ");
    for (int role = 0; role < 2; ++role) {
      Attempt& a = attempts[2 * s + role];
      a.ms = detail::sample_response(config, shard.shard_id, workers[role]);
      if (!a.ms) continue;
      tasks.push_back(std::async(std::launch::async, [&plan, &shard, &config, &a] {
        a.payload = partial_to_json(shard.shard_id, run_leaf(plan, shard, config.query, &a.stats));
      }));
    }
  }
  for (auto& t : tasks) t.get();

  AnswerBoard board;
  std::vector<QueryStats> winner_stats(n);
  for (std::size_t s = 0; s < n; ++s) {
    const Shard& shard = *assignment.shards[s];
    const Attempt& p = attempts[2 * s];
    const Attempt& r = attempts[2 * s + 1];
    ShardDispatch d;
    d.shard = shard.shard_id;
    d.primary = assignment.placement[s].first;
    d.replica = assignment.placement[s].second;
    d.primary_ms = p.ms;
    d.replica_ms = r.ms;
    st.failed_responses += (p.ms ? 0 : 1) + (r.ms ? 0 : 1);
    if (!p.ms && !r.ms) {
      throw Error(ErrorCode::kDistributed, "shard " + std::to_string(shard.shard_id) + ": primary (worker " +
                                               std::to_string(d.primary) + ") and replica (worker " +
                                               std::to_string(d.replica) + ") both failed");
    }
    if (p.ms && r.ms && p.payload != r.payload) {
      throw Error(ErrorCode::kInternal, "shard " + std::to_string(shard.shard_id) + ": primary and replica disagree");
    }
    // Deliver in arrival order; ties go to the primary.
    const bool replica_first = !p.ms || (r.ms && *r.ms < *p.ms);
    const Attempt& first = replica_first ? r : p;
    const Attempt& second = replica_first ? p : r;
    board.accept(shard.shard_id, first.payload);
    if (second.ms && !board.accept(shard.shard_id, second.payload)) ++st.late_responses;
    d.replica_served = replica_first;
    d.served_by = replica_first ? d.replica : d.primary;
    d.answered_ms = *first.ms;
    if (d.answered_ms > config.timeout_ms) {
      throw Error(ErrorCode::kTimeout, "shard " + std::to_string(shard.shard_id) + " answered after " +
                                           std::to_string(d.answered_ms) + " ms (timeout " +
                                           std::to_string(config.timeout_ms) + " ms)");
    }
    st.replica_wins += replica_first ? 1 : 0;
    st.elapsed_ms = std::max(st.elapsed_ms, d.answered_ms);
    winner_stats[s] = first.stats;
    st.shards.push_back(d);
  }
  for (const auto& s : winner_stats) st.query.add(s);

  // Walk up the tree; every hop travels as JSON.
  std::vector<std::string> level;
  for (std::size_t s = 0; s < n; ++s) level.push_back(board.answers().at(assignment.shards[s]->shard_id));
  st.nodes_per_level.push_back(level.size());
  std::size_t levels_left = plan.levels - 1;
  while (levels_left > 1 || level.size() > plan.fan_in) {
    std::vector<std::string> next;
    for (const auto& group : detail::tree_groups(level.size(), levels_left, plan.fan_in)) {
      std::vector<PartialTable> children;
      for (auto i : group) children.push_back(partial_from_json(level[i]));
      next.push_back(partial_to_json(static_cast<std::uint32_t>(next.size()), merge_partial_tables(plan, children)));
    }
    level = std::move(next);
    st.nodes_per_level.push_back(level.size());
    if (levels_left > 1) --levels_left;
  }
  std::vector<PartialTable> children;
  for (const auto& payload : level) children.push_back(partial_from_json(payload));
  out.result = finalize_tree(plan, merge_partial_tables(plan, children));
  st.nodes_per_level.push_back(1);
  st.query.groups = out.result.rows.size();
  return out;
}

/// Rewrites `sql` for a tree and dispatches it over `shards` placed on
/// config.workers workers.
inline DistributedResult run_distributed(const std::vector<const Shard*>& shards, const std::string& sql,
                                         const ClusterConfig& config) {
  if (shards.empty()) throw Error(ErrorCode::kInvalidArgument, "no shards to query");
  const AggregationPlan plan = rewrite_for_tree(sql, shards[0]->schema, config.levels, config.fan_in);
  return dispatch(plan, ShardAssignment::make(shards, config.workers), config);
}

}  // namespace pdrill
