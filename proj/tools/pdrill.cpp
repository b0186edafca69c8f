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


// pdrill command line: import, query, bench, serve.
//
// Exit codes: 0 ok, 1 usage (bad flags, bad SQL), 2 data error (input or
// store unreadable, malformed CSV), 3 internal (including an oracle
// mismatch).

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdrill/ingest/bench.hpp"
#include "pdrill/ingest/import.hpp"
#include "pdrill/ingest/oracle.hpp"
#include "pdrill/ingest/store.hpp"
#include "pdrill/service/service.hpp"
#include "pdrill/service/session.hpp"
#include "pdrill/service/wire.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kInternal = 3;

bool is_query_error(pdrill::ErrorCode c) {
  using pdrill::ErrorCode;
  return c == ErrorCode::kSyntax || c == ErrorCode::kUnknownFunction || c == ErrorCode::kTypeMismatch ||
         c == ErrorCode::kUnsupported || c == ErrorCode::kInvalidArgument;
}

int fail(int code, const std::string& msg) {
  std::cerr << "pdrill: " << msg << "\n";
  return code;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct ImportArgs {
  std::vector<std::string> inputs;
  std::string schema;
  std::string table;
  std::string partition_fields;
  std::size_t max_chunk_rows = pdrill::kDefaultMaxChunkRows;
  std::size_t shard_rows = pdrill::kDefaultShardRows;
  std::size_t threads = 0;
  std::string out;
  bool json = false;
};

int run_import(const ImportArgs& a) {
  pdrill::IngestConfig cfg;
  for (const auto& i : a.inputs) cfg.inputs.emplace_back(i);
  cfg.schema = a.schema;
  cfg.table_name = a.table;
  cfg.partition.fields = split_list(a.partition_fields);
  cfg.partition.max_chunk_rows = a.max_chunk_rows;
  cfg.shard_rows = a.shard_rows;
  cfg.threads = a.threads;
  cfg.out = a.out;
  try {
    const pdrill::ImportReport r = pdrill::ingest_csv(cfg);
    std::cout << (a.json ? r.to_json().dump(2) + "\n" : r.to_text());
    return kOk;
  } catch (const pdrill::Error& e) {
    return fail(e.code() == pdrill::ErrorCode::kInvalidArgument ? kUsage : kData, e.what());
  }
}

struct QueryArgs {
  std::string store;
  std::string sql;
  std::string format = "csv";
  bool oracle_check = false;
  bool trace = false;
  std::size_t tree_levels = 0;
  std::size_t tree_workers = 4;
};

int run_query(const QueryArgs& a) {
  std::unique_ptr<pdrill::Session> session;
  try {
    session = std::make_unique<pdrill::Session>(pdrill::Store::open(a.store));
  } catch (const pdrill::Error& e) {
    return fail(kData, e.what());
  }
  pdrill::ResultSet result;
  nlohmann::json extra;
  try {
    if (a.tree_levels > 0) {
      pdrill::ClusterConfig cc;
      cc.levels = a.tree_levels;
      cc.workers = a.tree_workers;
      const pdrill::DistributedResult r = session->query_tree(a.sql, cc);
      result = r.result;
      extra["stats"] = pdrill::stats_to_json(r.stats.query);
      extra["tree"] = {{"nodes_per_level", r.stats.nodes_per_level}, {"replica_wins", r.stats.replica_wins}};
    } else {
      const pdrill::QueryResult r = session->query(a.sql, a.trace);
      result = r.result;
      extra["stats"] = pdrill::stats_to_json(r.stats, a.trace);
    }
  } catch (const pdrill::Error& e) {
    return fail(is_query_error(e.code()) ? kUsage : kData, e.what());
  }

  if (a.format == "json") {
    nlohmann::json j = pdrill::result_to_json(result);
    for (auto& [k, v] : extra.items()) j[k] = v;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << pdrill::result_to_csv(result);
  }

  if (a.oracle_check) {
    const pdrill::QueryAst ast = pdrill::parse(a.sql);
    const pdrill::StoreTable& t = session->store().table(ast.from);
    pdrill::Table all;
    all.schema = t.schema;
    all.columns.resize(t.schema.fields.size());
    for (const auto& s : t.shards) {
      const pdrill::Table part = s->decode_table();
      for (std::size_t c = 0; c < all.columns.size(); ++c) {
        all.columns[c].insert(all.columns[c].end(), part.columns[c].begin(), part.columns[c].end());
      }
    }
    const auto want = pdrill::oracle::run(pdrill::analyze(ast, t.schema), all);
    std::string why;
    if (!pdrill::oracle::rows_match(result.rows, want, 1e-9, &why)) {
      return fail(kInternal, "oracle mismatch: " + why);
    }
    std::cerr << "oracle: match (" << want.size() << " rows)\n";
  }
  return kOk;
}

int run_bench(const std::string& config_path, bool json) {
  pdrill::bench::BenchConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) return fail(kUsage, "cannot open config '" + config_path + "'");
    try {
      cfg = pdrill::bench::BenchConfig::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      return fail(kUsage, std::string("bad config: ") + e.what());
    } catch (const pdrill::Error& e) {
      return fail(kUsage, std::string("bad config: ") + e.what());
    }
  }
  const pdrill::bench::BenchReport r = pdrill::bench::run_bench(cfg);
  std::cout << (json ? r.to_json().dump(2) + "\n" : r.to_text());
  return kOk;
}

pdrill::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int run_serve(const std::string& store, const std::string& listen, std::size_t cache_bytes, std::size_t threads) {
  std::pair<std::string, int> addr;
  try {
    addr = pdrill::parse_listen_address(listen);
  } catch (const pdrill::Error& e) {
    return fail(kUsage, e.what());
  }
  std::shared_ptr<pdrill::Session> session;
  try {
    pdrill::SessionConfig sc;
    sc.cache_bytes = cache_bytes;
    session = std::make_shared<pdrill::Session>(pdrill::Store::open(store), sc);
  } catch (const pdrill::Error& e) {
    return fail(kData, e.what());
  }
  pdrill::Service service(session, threads);
  int port = 0;
  try {
    port = service.bind(addr.first, addr.second);
  } catch (const pdrill::Error& e) {
    return fail(kData, e.what());
  }
  std::cout << "listening on " << addr.first << ":" << port << std::endl;
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.run();
  g_service = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pdrill: columnar drill-down query engine"};
  app.require_subcommand(1);

  ImportArgs ia;
  auto* imp = app.add_subcommand("import", "Import CSV files into a store directory");
  imp->add_option("--input", ia.inputs, "CSV file(s); all must share one header")->required();
  imp->add_option("--schema", ia.schema, "Type overrides, e.g. \"ts:timestamp,id:str\"");
  imp->add_option("--table", ia.table, "Table name (default: first input's file stem)");
  imp->add_option("--partition-fields", ia.partition_fields, "Comma-separated partition field order");
  imp->add_option("--max-chunk-rows", ia.max_chunk_rows, "Split chunks larger than this")->check(CLI::PositiveNumber);
  imp->add_option("--shard-rows", ia.shard_rows, "Target rows per shard")->check(CLI::PositiveNumber);
  imp->add_option("--threads", ia.threads, "Build threads (0 = hardware)");
  imp->add_option("--out", ia.out, "Store directory")->required();
  imp->add_flag("--json", ia.json, "Print the import report as JSON");

  QueryArgs qa;
  auto* qry = app.add_subcommand("query", "Run one SQL query against a store");
  qry->add_option("--store", qa.store, "Store directory")->required();
  qry->add_option("--sql", qa.sql, "Query text")->required();
  qry->add_option("--format", qa.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  qry->add_flag("--oracle-check", qa.oracle_check, "Compare against the row-scan oracle");
  qry->add_flag("--trace", qa.trace, "Include per-chunk decisions (json format)");
  qry->add_option("--tree-levels", qa.tree_levels, "Run through a simulated aggregation tree of this depth");
  qry->add_option("--tree-workers", qa.tree_workers, "Simulated workers for --tree-levels");

  std::string bench_config;
  bool bench_json = false;
  auto* bch = app.add_subcommand("bench", "Storage ladder benchmark on generated log data");
  bch->add_option("--config", bench_config, "JSON config (rows, seed, table_names, max_chunk_rows, runs, ...)");
  bch->add_flag("--json", bench_json, "Print the report as JSON");

  std::string serve_store;
  std::string listen = "127.0.0.1:8080";
  std::size_t cache_bytes = std::size_t{256} << 20;
  std::size_t threads = 32;
  auto* srv = app.add_subcommand("serve", "Serve a store over HTTP");
  srv->add_option("--store", serve_store, "Store directory")->required();
  srv->add_option("--listen", listen, "host:port");
  srv->add_option("--cache-bytes", cache_bytes, "Artifact cache budget");
  srv->add_option("--threads", threads, "Request threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*imp) return run_import(ia);
    if (*qry) return run_query(qa);
    if (*bch) return run_bench(bench_config, bench_json);
    if (*srv) return run_serve(serve_store, listen, cache_bytes, threads);
  } catch (const pdrill::Error& e) {
    return fail(kInternal, std::string(pdrill::error_code_name(e.code())) + ": " + e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, e.what());
  }
  return kUsage;
}
