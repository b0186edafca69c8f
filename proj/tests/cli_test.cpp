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


#include <gtest/gtest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "pdrill/service/session.hpp"
#include "pdrill/service/wire.hpp"
#include "test_util.hpp"

namespace pdrill {
namespace {

using nlohmann::json;
using testing::ScratchDir;

struct CliRun {
  int code = -1;
  std::string out;
};

/// Runs the CLI with `args` through the shell; stderr is appended to stdout
/// when `merge` is set.
CliRun cli(const std::string& args, bool merge = false) {
  const std::string cmd = std::string(PDRILL_CLI) + " " + args + (merge ? " 2>&1" : " 2>/dev/null");
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  for (std::size_t n; (n = fread(buf.data(), 1, buf.size(), p)) > 0;) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_.write("data.csv", "country,latency\nde,10\nde,20\nfr,15\nfr,25\nus,30\nus,30\n");
    const CliRun r = cli("import --input " + (dir_ / "data.csv").string() +
                      " --partition-fields country --max-chunk-rows 2 --out " + store());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("3 chunks"), std::string::npos) << r.out;
  }

  std::string store() const { return (dir_ / "store").string(); }

  ScratchDir dir_{"cli"};
};

TEST_F(CliTest, QueryCsv) {
  const CliRun r = cli("query --store " + store() +
                    " --sql 'SELECT country, COUNT(*) as c FROM data GROUP BY country ORDER BY c DESC LIMIT 10'");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "country,c\nde,2\nfr,2\nus,2\n");
}

TEST_F(CliTest, OracleCheck) {
  const CliRun r = cli("query --oracle-check --store " + store() +
                        " --sql 'SELECT country, AVG(latency), MAX(latency) FROM data WHERE latency > 10 GROUP BY country'",
                    true);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("oracle: match (3 rows)"), std::string::npos) << r.out;
}

TEST_F(CliTest, JsonMatchesService) {
  const std::string sql = "SELECT country, SUM(latency) AS s FROM data WHERE country NOT IN ('de') GROUP BY country";
  const CliRun r = cli("query --format json --store " + store() + " --sql " + quote(sql));
  ASSERT_EQ(r.code, 0);
  const json got = json::parse(r.out);
  Session session(Store::open(store()));
  const json want = result_to_json(session.query(sql).result);
  EXPECT_EQ(got["columns"], want["columns"]);
  EXPECT_EQ(got["rows"], want["rows"]);
  EXPECT_EQ(got["stats"]["chunks_skipped"], 1);
}

TEST_F(CliTest, TreeMode) {
  const CliRun r = cli("query --tree-levels 2 --tree-workers 3 --store " + store() +
                    " --sql 'SELECT country, MIN(latency) FROM data GROUP BY country'");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "country,MIN(latency)\nde,10\nfr,15\nus,30\n");
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("query --store " + store()).code, 1);
  EXPECT_EQ(cli("query --store " + store() + " --format xml --sql 'SELECT COUNT(*) FROM data'").code, 1);

  const CliRun syntax = cli("query --store " + store() + " --sql 'SELECT country, FROM data'", true);
  EXPECT_EQ(syntax.code, 1);
  EXPECT_NE(syntax.out.find("position"), std::string::npos) << syntax.out;
  EXPECT_EQ(cli("query --store " + store() + " --sql 'SELECT COUNT(*) FROM elsewhere'").code, 1);
  EXPECT_EQ(cli("query --store " + (dir_ / "missing").string() + " --sql 'SELECT COUNT(*) FROM data'").code, 2);

  dir_.write("bad.csv", "a,b\n1,2\n3,\"4\n");
  const CliRun bad = cli("import --input " + (dir_ / "bad.csv").string() + " --out " + (dir_ / "s2").string(), true);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("line 3"), std::string::npos) << bad.out;
  EXPECT_EQ(cli("import --input " + (dir_ / "nope.csv").string() + " --out " + (dir_ / "s3").string()).code, 2);
  EXPECT_EQ(cli("import --input " + (dir_ / "data.csv").string() + " --partition-fields zzz --out " +
                (dir_ / "s4").string())
                .code,
            1);
  EXPECT_EQ(cli("import --input " + (dir_ / "data.csv").string() + " --max-chunk-rows 0 --out " + store()).code, 1);
  EXPECT_EQ(cli("bench --config " + (dir_ / "none.json").string()).code, 1);
  EXPECT_EQ(cli("serve --store " + (dir_ / "missing").string() + " --listen 127.0.0.1:0").code, 2);
  EXPECT_EQ(cli("serve --store " + store() + " --listen nowhere:x").code, 1);
}

TEST_F(CliTest, Bench) {
  dir_.write("bench.json", R"({"rows": 20000, "table_names": 5000, "max_chunk_rows": 1000, "runs": 1})");
  const CliRun r = cli("bench --config " + (dir_ / "bench.json").string());
  EXPECT_EQ(r.code, 0);
  for (const char* want : {"Basic", "Chunks", "OptCols", "OptDicts", "+Codec", "+Reorder", "Gates"}) {
    EXPECT_NE(r.out.find(want), std::string::npos) << want;
  }
}

TEST_F(CliTest, Serve) {
  int out[2];
  ASSERT_EQ(pipe(out), 0);
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    dup2(out[1], STDOUT_FILENO);
    close(out[0]);
    close(out[1]);
    execl(PDRILL_CLI, PDRILL_CLI, "serve", "--store", store().c_str(), "--listen", "127.0.0.1:0", "--cache-bytes",
          "65536", static_cast<char*>(nullptr));
    _exit(127);
  }
  close(out[1]);
  std::string line;
  char c;
  while (read(out[0], &c, 1) == 1 && c != '\n') line += c;
  close(out[0]);
  const auto colon = line.rfind(':');
  ASSERT_NE(colon, std::string::npos) << line;
  const int port = std::stoi(line.substr(colon + 1));

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/v1/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->body, "ok");
  auto q = client.Post("/v1/query", R"({"sql": "SELECT COUNT(*) FROM data"})", "application/json");
  ASSERT_TRUE(q);
  EXPECT_EQ(json::parse(q->body)["rows"], json::parse("[[6]]"));
  auto stats = client.Get("/v1/stats");
  EXPECT_EQ(json::parse(stats->body)["cache"]["budget_bytes"], 65536);

  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}

}  // namespace
}  // namespace pdrill
