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

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <thread>
#include <utility>

#include "httplib.h"
#include "json.hpp"
#include "pdrill/core/errors.hpp"
#include "pdrill/service/session.hpp"
#include "pdrill/service/wire.hpp"

namespace pdrill {

/// Splits "host:port", ":port" or "port"; the host defaults to 127.0.0.1.
inline std::pair<std::string, int> parse_listen_address(const std::string& addr) {
  std::string host = "127.0.0.1";
  std::string port = addr;
  if (const auto colon = addr.rfind(':'); colon != std::string::npos) {
    if (colon > 0) host = addr.substr(0, colon);
    port = addr.substr(colon + 1);
  }
  int p = -1;
  try {
    std::size_t used = 0;
    p = std::stoi(port, &used);
    if (used != port.size()) p = -1;
  } catch (const std::exception&) {
    p = -1;
  }
  if (p < 0 || p > 65535) throw Error(ErrorCode::kInvalidArgument, "bad listen address '" + addr + "'");
  return {host, p};
}

/// Errors caused by the request itself.
inline bool is_client_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntax:
    case ErrorCode::kUnknownFunction:
    case ErrorCode::kTypeMismatch:
    case ErrorCode::kUnsupported:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse: return true;
    default: return false;
  }
}

/// JSON-over-HTTP front end of a Session. Endpoints live under /v1/:
///   GET  /v1/tables
///   GET  /v1/tables/{t}/schema
///   POST /v1/query   {"sql": ..., "trace": bool, "tree": {"workers", "levels", "seed", "timeout_ms"}}
///   GET  /v1/stats
///   GET  /v1/healthz
class Service {
 public:
  explicit Service(std::shared_ptr<Session> session, std::size_t threads = 32) : session_(std::move(session)) {
    server_.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    // SO_REUSEADDR only: a port held by another listener must fail to bind.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});
    server_.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server_.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    server_.Get("/v1/tables", [this](const httplib::Request&, httplib::Response& res) { tables(res); });
    server_.Get(R"(/v1/tables/([^/]+)/schema)",
                [this](const httplib::Request& req, httplib::Response& res) { schema(req.matches[1], res); });
    server_.Post("/v1/query", [this](const httplib::Request& req, httplib::Response& res) { query(req, res); });
    server_.Get("/v1/stats", [this](const httplib::Request&, httplib::Response& res) { stats(res); });
    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        reply_error(res, e);
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}, {"code", "internal"}});
      } catch (...) {
        reply(res, 500, {{"error", "unknown failure"}, {"code", "internal"}});
      }
    });
  }

  ~Service() { stop(); }

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
    } else {
      port_ = server_.bind_to_port(host, port) ? port : -1;
    }
    if (port_ < 0) throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
    return port_;
  }

  /// Serves on the calling thread until stop().
  void run() { server_.listen_after_bind(); }

  void start() {
    thread_ = std::thread([this] { run(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  Session& session() { return *session_; }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void reply_error(httplib::Response& res, const Error& e) {
    nlohmann::json body = {{"error", e.what()}, {"code", error_code_name(e.code())}};
    if (e.position()) body["position"] = *e.position();
    reply(res, is_client_error(e.code()) ? 400 : 500, body);
  }

  void tables(httplib::Response& res) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& name : session_->store().table_names()) {
      const StoreTable& t = session_->store().table(name);
      std::size_t chunks = 0;
      for (const auto& s : t.shards) chunks += s->chunk_count();
      list.push_back({{"name", name}, {"rows", t.entry.rows}, {"shards", t.shards.size()}, {"chunks", chunks}});
    }
    reply(res, 200, {{"tables", list}});
  }

  void schema(const std::string& name, httplib::Response& res) {
    if (!session_->store().find(name)) {
      reply(res, 404, {{"error", "unknown table '" + name + "'"}, {"code", "not_found"}});
      return;
    }
    const StoreTable& t = session_->store().table(name);
    nlohmann::json fields = nlohmann::json::array();
    for (const auto& p : session_->profile(name)) {
      fields.push_back({{"name", p.field.name},
                        {"type", kind_name(p.field.kind)},
                        {"nullable", p.field.nullable},
                        {"distinct", p.distinct},
                        {"role", p.role},
                        {"partition_key", p.partition_key}});
    }
    reply(res, 200, {{"table", name}, {"rows", t.entry.rows}, {"fields", fields}});
  }

  void query(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      reply(res, 400, {{"error", std::string("request body is not JSON: ") + e.what()}, {"code", "bad_request"}});
      return;
    }
    if (!body.is_object() || !body.contains("sql") || !body["sql"].is_string()) {
      reply(res, 400, {{"error", "request needs a string field 'sql'"}, {"code", "bad_request"}});
      return;
    }
    const std::string sql = body["sql"].get<std::string>();
    const bool trace = body.value("trace", false);
    const auto start = std::chrono::steady_clock::now();
    nlohmann::json out;
    try {
      if (body.contains("tree") && body["tree"].is_object()) {
        const auto& tj = body["tree"];
        ClusterConfig cc;
        cc.workers = tj.value("workers", cc.workers);
        cc.levels = tj.value("levels", cc.levels);
        cc.seed = tj.value("seed", cc.seed);
        cc.timeout_ms = tj.value("timeout_ms", cc.timeout_ms);
        const DistributedResult r = session_->query_tree(sql, cc);
        out = result_to_json(r.result);
        out["stats"] = stats_to_json(r.stats.query);
        out["tree"] = {{"nodes_per_level", r.stats.nodes_per_level},
                       {"replica_wins", r.stats.replica_wins},
                       {"failed_responses", r.stats.failed_responses},
                       {"late_responses", r.stats.late_responses},
                       {"simulated_ms", r.stats.elapsed_ms}};
      } else {
        const QueryResult r = session_->query(sql, trace);
        out = result_to_json(r.result);
        out["stats"] = stats_to_json(r.stats, trace);
      }
    } catch (const Error& e) {
      reply_error(res, e);
      return;
    }
    out["elapsed_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    reply(res, 200, out);
  }

  void stats(httplib::Response& res) {
    const SessionTotals t = session_->totals();
    const CacheStats c = session_->cache_stats();
    const ResultCacheStats r = session_->result_cache_stats();
    reply(res, 200,
          {{"queries", t.queries},
           {"failed", t.failed},
           {"latency_ms", t.latency_ms},
           {"totals", stats_to_json(t.stats)},
           {"cache",
            {{"budget_bytes", c.budget_bytes},
             {"hot_bytes", c.hot_bytes},
             {"cold_bytes", c.cold_bytes},
             {"entries", c.entries},
             {"hot_hits", c.hot_hits},
             {"cold_hits", c.cold_hits},
             {"loads", c.loads},
             {"coalesced", c.coalesced},
             {"evictions", c.evictions}}},
           {"result_cache", {{"entries", r.entries}, {"hits", r.hits}, {"misses", r.misses}, {"stores", r.stores}}}});
  }

  std::shared_ptr<Session> session_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace pdrill
