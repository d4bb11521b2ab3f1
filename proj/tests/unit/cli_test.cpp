#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "igraph/data.hpp"
#include "igraph/train.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Proc {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("igraph_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Proc run(const std::string& args) const {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string(IGRAPH_CLI_PATH) + " " + args + " 2>" + err.string();
    Proc r;
    FILE* pipe = popen(cmd.c_str(), "r");
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
  }

  fs::path write_config(json j, const std::string& name = "config.json") const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  json toy_config() const {
    json j = json::parse(slurp(fs::path(IGRAPH_TEST_DATA_DIR) / "toy_config.json"));
    j["data_path"] = (fs::path(IGRAPH_TEST_DATA_DIR) / "toy_ratings.tsv").string();
    j["checkpoint_path"] = (dir_ / "toy.ckpt.json").string();
    j["log_path"] = (dir_ / "epochs.jsonl").string();
    return j;
  }

  std::string trained_checkpoint() const {
    const Proc r = run("train --config " + write_config(toy_config()).string());
    EXPECT_EQ(r.code, 0) << r.err;
    return (dir_ / "toy.ckpt.json").string();
  }

  fs::path dir_;
};

TEST_F(Cli, TrainToyFixtureIsFastAndDeterministic) {
  const auto cfg = write_config(toy_config());
  const auto start = std::chrono::steady_clock::now();
  const Proc a = run("train --config " + cfg.string());
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_LT(seconds, 10.0);
  const json ja = json::parse(a.out);
  EXPECT_EQ(ja.at("epochs"), toy_config().at("epochs"));
  EXPECT_TRUE(fs::exists(dir_ / "toy.ckpt.json"));

  // One JSON line per epoch in the log file.
  std::ifstream log(dir_ / "epochs.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    const json e = json::parse(line);
    EXPECT_TRUE(e.contains("train_loss") && e.contains("val_rmse") && e.contains("val_mae"));
    EXPECT_EQ(e.at("epoch"), ++lines);
  }
  EXPECT_EQ(lines, toy_config().at("epochs").get<std::size_t>());

  const Proc b = run("train --config " + cfg.string());
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(json::parse(b.out).at("digest"), ja.at("digest"));
}

TEST_F(Cli, MissingSigmaIsAConfigError) {
  json j = toy_config();
  j.erase("sigma");
  const Proc r = run("train --config " + write_config(j).string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("sigma"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, MissingDataIsADataError) {
  json j = toy_config();
  j["data_path"] = (dir_ / "absent.tsv").string();
  EXPECT_EQ(run("train --config " + write_config(j).string()).code, 2);
}

TEST_F(Cli, EvalBeatsGlobalMeanOnTrainingData) {
  const std::string ckpt = trained_checkpoint();
  const std::string data = (fs::path(IGRAPH_TEST_DATA_DIR) / "toy_ratings.tsv").string();
  const Proc r = run("eval --checkpoint " + ckpt + " --data " + data);
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = json::parse(r.out);
  const auto ds = igraph::load_movielens(data);
  EXPECT_EQ(m.at("n"), ds.size());
  EXPECT_LT(m.at("rmse").get<double>(), igraph::train::global_mean_baseline(ds, ds).rmse);
  EXPECT_GE(m.at("rmse").get<double>(), m.at("mae").get<double>());
}

TEST_F(Cli, CorruptedCheckpointIsRejected) {
  const std::string ckpt = trained_checkpoint();
  std::string text = slurp(ckpt);
  std::ofstream(ckpt) << text.substr(0, text.size() / 2);
  const std::string data = (fs::path(IGRAPH_TEST_DATA_DIR) / "toy_ratings.tsv").string();
  const Proc r = run("eval --checkpoint " + ckpt + " --data " + data);
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, PredictKnownAndUnknownIds) {
  const std::string ckpt = trained_checkpoint();
  const Proc a = run("predict --checkpoint " + ckpt + " --user 1 --item 11");
  ASSERT_EQ(a.code, 0) << a.err;
  const double rating = json::parse(a.out).get<double>();
  EXPECT_GT(rating, 0.0);
  EXPECT_LT(rating, 6.0);
  EXPECT_EQ(run("predict --checkpoint " + ckpt + " --user 1 --item 11").out, a.out);
  const Proc bad = run("predict --checkpoint " + ckpt + " --user ghost --item 11");
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.err.find("ghost"), std::string::npos);
}

TEST_F(Cli, VerifyReportsEverySuite) {
  const Proc r = run("verify");
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(r.out);
  EXPECT_TRUE(report.at("passed").get<bool>());
  EXPECT_EQ(report.at("suites").size(), 7u);
  for (const auto& s : report.at("suites")) {
    EXPECT_NE(r.err.find(s.at("suite").get<std::string>()), std::string::npos);
  }
}

TEST_F(Cli, VerifyCatchesInjectedFault) {
  const Proc r = run("verify --inject-fault softmax");
  EXPECT_EQ(r.code, 3);
  const json report = json::parse(r.out);
  EXPECT_FALSE(report.at("passed").get<bool>());
  EXPECT_EQ(report.at("injected_fault"), "softmax");
  EXPECT_EQ(run("verify --inject-fault nonsense").code, 1);
}

TEST_F(Cli, DemoTextClassifier) {
  const fs::path corpus = dir_ / "corpus.txt";
  ASSERT_EQ(run("synth-corpus --out " + corpus.string() + " --docs 40 --seed 2").code, 0);
  const auto cfg = write_config({{"epochs", 5}}, "demo.json");
  const Proc r = run("demo-textclf --data " + corpus.string() + " --config " + cfg.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(r.out);
  EXPECT_EQ(report.at("epochs"), 5);
  EXPECT_FALSE(report.at("degenerate_labels").get<bool>());
  EXPECT_LE(report.at("max_marginal_gap").get<double>(), 1e-10);
}

TEST_F(Cli, DemoDegenerateAndMalformedCorpora) {
  const fs::path single = dir_ / "single.txt";
  std::ofstream(single) << "only\ta b\nonly\tb c\nonly\tc a\nonly\ta c\n";
  const auto cfg = write_config({{"epochs", 2}}, "demo.json");
  const Proc r = run("demo-textclf --data " + single.string() + " --config " + cfg.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("test_accuracy"), 1.0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);

  const Proc bad = run("demo-textclf --data " + std::string(IGRAPH_TEST_DATA_DIR) + "/corpus_malformed.txt");
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("train").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

}  // namespace
