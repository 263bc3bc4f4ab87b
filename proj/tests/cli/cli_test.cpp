#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "json.hpp"
#include "sdpforge/conllu.hpp"
#include "sdpforge/instance_io.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using sdpforge::testing::data_path;
using sdpforge::testing::read_text;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("SDPFORGE_THREADS=2 '") + SDPFORGE_CLI + "' " + args +
                          " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(out);
  r.err = read_text(err);
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::size_t lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// A pool of random trees, one CoNLL-U file per domain directory.
void write_pool(const fs::path& dir, const std::string& domain, std::size_t n,
                std::uint64_t seed) {
  fs::create_directories(dir / domain);
  sdpforge::Rng rng(seed);
  std::vector<sdpforge::ParsedSentence> sents;
  for (std::size_t i = 0; i < n; ++i) {
    auto s = sdpforge::testing::random_tree(4 + rng.uniform_index(20), rng);
    s.sent_id = domain + "-" + std::to_string(i);
    s.passthrough.push_back({0, "# sent_id = " + s.sent_id});
    sents.push_back(std::move(s));
  }
  sdpforge::write_conllu_file(dir / domain / "part.conllu", sents);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = sdpforge::testing::scratch_dir(
        std::string("cli-") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  fs::path dir;
};

}  // namespace

TEST_F(Cli, ValidateExitCodes) {
  auto ok = run("validate --input " + q(data_path("lfp.conllu")), dir);
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(ok.out, "");

  auto bad = run("validate --input " + q(data_path("cyclic.conllu")) + " " +
                     q(data_path("recommender.conllu")),
                 dir);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("CycleDetected"), std::string::npos);
  auto parsed = sdpforge::read_conllu_file(data_path("cyclic.conllu"));
  EXPECT_EQ(lines(bad.out), parsed.errors.size());

  EXPECT_EQ(run("validate --input " + q(dir / "missing.conllu"), dir).code, 2);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("", dir).code, 1);
  EXPECT_EQ(run("validate", dir).code, 1);
  EXPECT_EQ(run("validate --input x --bogus", dir).code, 1);
  EXPECT_EQ(run("stats labels --corpus a --conllu b --group-by nothing", dir).code, 1);
  EXPECT_EQ(run("--log-level loud validate --input x", dir).code, 1);
  EXPECT_EQ(run("--help", dir).code, 0);
}

TEST_F(Cli, ConjRewrite) {
  auto r = run("conj-rewrite --input " + q(data_path("recommender.conllu")) + " --out " +
                   q(dir / "out.conllu"),
               dir);
  ASSERT_EQ(r.code, 0) << r.err;
  auto rewritten = sdpforge::read_conllu_file(dir / "out.conllu");
  ASSERT_TRUE(rewritten.ok());
  EXPECT_EQ(rewritten.sentences[0].tokens[11].head, 6);
  EXPECT_EQ(rewritten.sentences[0].tokens[11].deprel, "nmod");
  EXPECT_TRUE(fs::exists(dir / "out.conllu.config.json"));
}

TEST_F(Cli, StatsFormatsAgree) {
  const std::string base = "stats labels --corpus " + q(data_path("corpus.jsonl")) +
                           " --conllu " + q(data_path("parses.conllu"));
  auto tsv = run(base + " --format tsv", dir);
  auto json = run(base + " --format json", dir);
  ASSERT_EQ(tsv.code, 0) << tsv.err;
  ASSERT_EQ(json.code, 0) << json.err;
  std::map<std::pair<std::string, std::string>, long> a, b;
  std::istringstream in(tsv.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "group\tkey\tcount");
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string g, k;
    long n;
    std::getline(f, g, '\t');
    std::getline(f, k, '\t');
    f >> n;
    a[{g, k}] = n;
  }
  const auto doc = nlohmann::json::parse(json.out);
  for (const auto& c : doc.at("cells")) b[{c.at("group"), c.at("key")}] = c.at("count");
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a.empty());
}

TEST_F(Cli, StatsOnEmptyCorpusIsHeaderOnly) {
  std::ofstream(dir / "empty.jsonl").flush();
  std::ofstream(dir / "empty.conllu").flush();
  auto r = run("stats labels --corpus " + q(dir / "empty.jsonl") + " --conllu " +
                   q(dir / "empty.conllu"),
               dir);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "group\tkey\tcount\n");
}

TEST_F(Cli, StatsAlignmentFailureIsDataError) {
  auto r = run("stats lengths --corpus " + q(data_path("corpus.jsonl")) + " --conllu " +
                   q(data_path("lfp.conllu")),
               dir);
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, GenDefaultsAndDeterminism) {
  write_pool(dir, "ai", 40, 1);
  write_pool(dir, "music", 40, 2);
  const std::string base = "gen --conllu " + q(dir / "ai") + " --conllu " + q(dir / "music") +
                           " --per-domain 10 --holdout 20";
  auto a = run(base + " --out " + q(dir / "a.jsonl"), dir);
  auto b = run(base + " --out " + q(dir / "b.jsonl"), dir);
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_text(dir / "a.jsonl"), read_text(dir / "b.jsonl"));

  auto echo = nlohmann::json::parse(read_text(dir / "a.jsonl.config.json"));
  EXPECT_EQ(echo["gen"]["labels"],
            (std::vector<std::string>{"nsubj", "obj", "obl", "nmod", "appos"}));
  EXPECT_EQ(echo["gen"]["max-per-sentence"], 5);
  EXPECT_EQ(echo["seed"], 4012);

  auto recs = sdpforge::read_instances(dir / "a.jsonl");
  ASSERT_FALSE(recs.empty());
  std::map<std::string, int> per_sentence;
  for (const auto& r : recs) {
    per_sentence[std::get<sdpforge::SilverProvenance>(r.provenance).sent_id]++;
  }
  for (const auto& [_, n] : per_sentence) EXPECT_LE(n, 5);

  // Replaying the echo reproduces the output; an explicit flag wins over it.
  auto replay = run("--config " + q(dir / "a.jsonl.config.json") + " gen --out " +
                        q(dir / "c.jsonl"),
                    dir);
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(read_text(dir / "a.jsonl"), read_text(dir / "c.jsonl"));
  auto other = run("--config " + q(dir / "a.jsonl.config.json") + " --seed 9 gen --out " +
                       q(dir / "d.jsonl"),
                   dir);
  ASSERT_EQ(other.code, 0) << other.err;
  EXPECT_NE(read_text(dir / "a.jsonl"), read_text(dir / "d.jsonl"));
}

TEST_F(Cli, GenEdgeCases) {
  write_pool(dir, "ai", 105, 1);
  auto empty = run("gen --conllu " + q(dir / "ai") + " --per-domain 0 --out " +
                       q(dir / "e.jsonl"),
                   dir);
  EXPECT_EQ(empty.code, 0) << empty.err;
  EXPECT_EQ(read_text(dir / "e.jsonl"), "");

  auto small = run("gen --conllu " + q(dir / "ai") + " --per-domain 10 --out " +
                       q(dir / "s.jsonl"),
                   dir);
  EXPECT_EQ(small.code, 2);
  EXPECT_NE(small.err.find("PoolTooSmall"), std::string::npos);

  EXPECT_EQ(run("gen --conllu " + q(dir / "ai") + " --out " + q(dir / "x.jsonl"), dir).code, 1);
}

TEST_F(Cli, TrainBaselineReport) {
  sdpforge::synth::Task task({});
  sdpforge::write_instances(dir / "train.jsonl", task.gold(20, 1, "alpha"));
  sdpforge::write_instances(dir / "test.jsonl", task.gold(40, 2, "alpha"));
  auto r = run("train --train " + q(dir / "train.jsonl") + " --test " + q(dir / "test.jsonl") +
                   " --report " + q(dir / "report.json") +
                   " --epochs-finetune 2 --embedding-dim 4 --hidden-dim 4 --tsv " +
                   q(dir / "report.tsv"),
               dir);
  ASSERT_EQ(r.code, 0) << r.err;
  auto report = nlohmann::json::parse(read_text(dir / "report.json"));
  EXPECT_EQ(report["mode"], "baseline");
  EXPECT_EQ(report["config"]["seeds"],
            (std::vector<std::uint64_t>{4012, 5096, 8878, 8857, 9908}));
  for (const auto& run : report["runs"]) EXPECT_FALSE(run.contains("pretrain"));
  for (const auto& cell : report["cells"]) {
    double sum = 0;
    for (double v : cell["per_seed"]) sum += v;
    EXPECT_NEAR(cell["mean"].get<double>(), sum / cell["per_seed"].size(), 1e-12);
  }
  EXPECT_EQ(lines(read_text(dir / "report.tsv")), 1u + 5u);

  std::ofstream(dir / "bad.jsonl") << "{\"tokens\": [\"a\"]}\n";
  auto bad = run("train --train " + q(dir / "bad.jsonl") + " --test " + q(dir / "test.jsonl") +
                     " --report " + q(dir / "r2.json"),
                 dir);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("SchemaMismatch"), std::string::npos);
}

TEST_F(Cli, ManifestAndSweep) {
  write_pool(dir, "ai", 60, 3);
  write_pool(dir, "news", 60, 4);
  auto g = run("gen --conllu " + q(dir / "ai") + " --conllu " + q(dir / "news") +
                   " --per-domain 30 --holdout 10 --sweep-sizes 20,60 --out-dir " +
                   q(dir / "manifest"),
               dir);
  ASSERT_EQ(g.code, 0) << g.err;
  auto manifest = nlohmann::json::parse(read_text(dir / "manifest" / "manifest.json"));
  ASSERT_EQ(manifest["entries"].size(), 2u);
  EXPECT_EQ(manifest["entries"][1]["instances"], 60);

  sdpforge::synth::Task task({});
  sdpforge::write_instances(dir / "train.jsonl", task.gold(20, 1, "alpha"));
  sdpforge::write_instances(dir / "dev.jsonl", task.gold(20, 2, "alpha"));
  auto s = run("sweep --manifest " + q(dir / "manifest" / "manifest.json") + " --train " +
                   q(dir / "train.jsonl") + " --dev " + q(dir / "dev.jsonl") +
                   " --seeds 1,2 --epochs-pretrain 1 --epochs-finetune 2 --embedding-dim 4"
                   " --hidden-dim 4 --report " +
                   q(dir / "sweep.json"),
               dir);
  ASSERT_EQ(s.code, 0) << s.err;
  auto result = nlohmann::json::parse(read_text(dir / "sweep.json"));
  ASSERT_EQ(result.size(), 3u);
  EXPECT_EQ(result[0]["instances"], 0);
  EXPECT_EQ(result[0]["report"]["mode"], "baseline");
  EXPECT_EQ(result[2]["instances"], 60);
  EXPECT_TRUE(fs::exists(dir / "sweep.json.config.json"));
}
