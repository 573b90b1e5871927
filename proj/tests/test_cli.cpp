//
// attnsearch - Copyright 2026 The attnsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Runs the built command-line tool against the files in samples/.

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "attnsearch/interchange.hpp"
#include "support.hpp"

using namespace attnsearch;
namespace fx = attnsearch::testing;

namespace {

const std::string kCli = ATTNSEARCH_CLI_PATH;
const std::string kSource = ATTNSEARCH_SOURCE_DIR;
const std::string kSamples = kSource + "/samples";

struct Outcome {
  int code = -1;
  std::string out, err;
};

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
protected:
  fx::TempDir tmp{"cli"};

  Outcome run(const std::string &args, const std::string &cwd = "") {
    const auto out = tmp / "stdout.txt";
    const auto err = tmp / "stderr.txt";
    std::string cmd;
    if (!cwd.empty()) cmd = "cd '" + cwd + "' && ";
    cmd += "'" + kCli + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string emb() const { return "--embeddings " + kSamples + "/embeddings.tsv"; }

  std::string build_index() {
    const auto dir = (tmp / "index").string();
    const auto r = run("build-index --attentions " + kSamples + "/attentions.jsonl --meta " +
                       kSamples + "/meta.jsonl " + emb() + " --out " + dir);
    EXPECT_EQ(r.code, 0) << r.err;
    return dir;
  }
};

}  // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("build-index --no-such-flag").code, 2);
  EXPECT_EQ(run("build-index --attentions x --out y").code, 2);  // no embeddings
  EXPECT_EQ(run("query --index x " + emb() + " --tau notanumber").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, BuildIndexWritesLayoutAndSummary) {
  const auto dir = build_index();
  for (const char *f : {"graphs.jsonl", "clusters.jsonl", "meta.jsonl", "fingerprint.json"}) {
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(dir) / f)) << f;
  }
  const auto r = run("build-index --attentions " + kSamples + "/attentions.jsonl " + emb() +
                     " --out " + (tmp / "index2").string());
  EXPECT_NE(r.out.find("sentences   9"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("vocabulary  28"), std::string::npos) << r.out;
}

TEST_F(CliTest, MalformedAttentionFileCitesLine) {
  const auto bad = tmp.write("bad.jsonl", slurp(kSamples + "/attentions.jsonl").substr(0, 10) +
                                              "\n");
  std::string good_then_bad = slurp(kSamples + "/attentions.jsonl");
  good_then_bad = good_then_bad.substr(0, good_then_bad.find('\n') + 1) + "{\"doc_id\":1}\n";
  const auto path = tmp.write("bad2.jsonl", good_then_bad);
  const auto r = run("build-index --attentions " + path.string() + " " + emb() + " --out " +
                     (tmp / "ix").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_EQ(run("build-index --attentions " + bad.string() + " " + emb() + " --out " +
                (tmp / "ix").string())
                .code,
            1);
}

TEST_F(CliTest, QueryRanksTheExpectedSentenceFirst) {
  const auto dir = build_index();
  const auto r = run("query --index " + dir + " " + emb() + " --query-attn " + kSamples +
                     "/queries.jsonl --json --top-k 2");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  const auto &results = j.at("results");
  ASSERT_EQ(results.size(), 3u);
  EXPECT_EQ(results[0].at("hits").size(), 2u);
  EXPECT_EQ(results[0].at("hits")[0].at("doc_id"), "r-003");
  EXPECT_EQ(results[1].at("hits")[0].at("doc_id"), "r-001");
  EXPECT_EQ(results[1].at("hits")[0].at("sent_id"), 2);
  EXPECT_EQ(results[2].at("hits")[0].at("doc_id"), "r-002");
  EXPECT_NEAR(results[2].at("hits")[0].at("score").get<double>(), 2.72 * 2.72 * 2.72, 1e-9);

  const auto text = run("query --index " + dir + " " + emb() + " --query-attn " + kSamples +
                        "/queries.jsonl --by-document");
  EXPECT_EQ(text.code, 0);
  EXPECT_NE(text.out.find("query q-exfil#0"), std::string::npos);
}

TEST_F(CliTest, QueryWordsNeedFullyConnected) {
  const auto dir = build_index();
  const auto base = "query --index " + dir + " " + emb();
  EXPECT_EQ(run(base + " --query-words 'steal password'").code, 2);
  EXPECT_EQ(run(base).code, 2);
  EXPECT_EQ(run(base + " --query-words x --query-attn " + kSamples + "/queries.jsonl").code, 2);
  const auto r = run(base + " --query-words 'Steal password' --fully-connected --json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto hits = json::parse(r.out).at("results")[0].at("hits");
  ASSERT_FALSE(hits.empty());
  EXPECT_EQ(hits[0].at("pairs").size(), 2u);
}

TEST_F(CliTest, StaleParametersExitOne) {
  const auto dir = build_index();
  const auto r = run("query --index " + dir + " " + emb() + " --tau 0.3 --query-attn " +
                     kSamples + "/queries.jsonl");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("fingerprint"), std::string::npos) << r.err;
}

TEST_F(CliTest, AttributeCountsDocuments) {
  const auto dir = build_index();
  const auto r = run("attribute --index " + dir + " " + emb() + " --queries " + kSamples +
                     "/queries.jsonl --sim-threshold 10 --json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto actors = json::parse(r.out).at("actors");
  ASSERT_EQ(actors.size(), 2u);
  EXPECT_EQ(actors[0].at("actor"), "apt28");
  EXPECT_EQ(actors[0].at("documents"), 2);
  EXPECT_EQ(actors[1].at("actor"), "fin7");
  EXPECT_EQ(actors[1].at("documents"), 1);
}

TEST_F(CliTest, EvalFromConfigFile) {
  const auto out = (tmp / "report.json").string();
  const auto r = run("eval --config samples/config.json --query-attn samples/queries.jsonl "
                     "--labels samples/labels.jsonl --thresholds 0,5,10,15 --seed 3 --json-out " +
                         out,
                     kSource);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("best threshold"), std::string::npos);
  const auto j = json::parse(slurp(out));
  EXPECT_EQ(j.at("sweep").size(), 4u);
  EXPECT_EQ(j.at("ablation"), "full");
  EXPECT_EQ(j.at("cases"), 12);
  EXPECT_GE(j.at("sweep")[0].at("micro").at("precision").get<double>(), 0.5);

  EXPECT_EQ(run("eval --config samples/config.json --query-attn samples/queries.jsonl "
                "--labels samples/labels.jsonl --ablation bogus",
                kSource)
                .code,
            2);
}

TEST_F(CliTest, BenchWritesCsv) {
  const auto csv = (tmp / "bench.csv").string();
  const auto r = run("bench --sizes 200 --query-words 4 --repetitions 2 --vocabulary 100 "
                     "--dimension 16 --csv " + csv);
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "method,sentences,query_words,repetitions,avg_s,min_s,max_s,median_s");
  EXPECT_EQ(lines[4].rfind("GC+SC,200,4,2,", 0), 0u);
}
