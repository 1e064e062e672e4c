#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = bleubound::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bleubound_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string file(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << content;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, BleuIdenticalFiles) {
  const std::string f = file("a.txt", "the cat sat on the mat\na b c d e\n");
  const Result r = run({"bleu", "--cand", f, "--ref", f});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 3u);
  const Json first = Json::parse(ls[0]);
  for (const char* key : {"score", "bp", "precisions", "overlaps", "cand_len", "ref_len"}) {
    EXPECT_TRUE(first.contains(key)) << key;
  }
  EXPECT_EQ(Json::parse(ls[2])["corpus"]["score"].get<double>(), 1.0);
}

TEST_F(Cli, BleuHandExample) {
  const Result r = run({"bleu", "--cand", file("c.txt", "the cat the cat\n"), "--ref",
                        file("r.txt", "the cat sat\n"), "--max-order", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(Json::parse(lines(r.out)[0])["score"].get<double>(), 0.40825, 1e-5);
}

TEST_F(Cli, BleuLineCountMismatch) {
  const Result r = run({"bleu", "--cand", file("c.txt", "a\nb\nc\n"), "--ref", file("r.txt", "a\nb\n")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("3"), std::string::npos);
  EXPECT_NE(r.err.find("2"), std::string::npos);
}

TEST_F(Cli, BleuMissingFileAndCsv) {
  EXPECT_EQ(run({"bleu", "--cand", path("missing.txt"), "--ref", path("missing.txt")}).code, 3);
  const std::string f = file("a.txt", "x y\n");
  const Result r = run({"bleu", "--cand", f, "--ref", f, "--format", "csv", "--vocab-out", path("v.txt")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(lines(r.out)[0].substr(0, 11), "line,score,");
  EXPECT_EQ(lines(r.out).back().substr(0, 7), "corpus,");
  EXPECT_TRUE(fs::exists(path("v.txt")));
}

TEST_F(Cli, LbExamples) {
  const std::string ref = file("ref.txt", "a b\n");
  Result r = run({"lb", "--logits", file("u.csv", "0,0\n0,0\n"), "--ref", ref, "--max-order", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  Json j = Json::parse(r.out);
  EXPECT_NEAR(j["aggregate"].get<double>(), 2.0 / 3.0, 1e-12);
  for (const char* key : {"lb_overlaps", "lb_precisions", "smoothed", "aggregate", "bound_value"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }

  r = run({"lb", "--logits", file("d.csv", "20,-20\n-20,20\n"), "--ref", ref, "--max-order", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(Json::parse(r.out)["aggregate"].get<double>(), 1.0, 1e-6);

  EXPECT_EQ(run({"lb", "--logits", file("bad.csv", "0,0,0\n"), "--ref", ref}).code, 2);
}

TEST_F(Cli, LbWithVocabFileAndHeader) {
  const std::string vocab = file("vocab.txt", "a\nb\nc\n");
  const Result r = run({"lb", "--logits", file("u.csv", "a,b,c\n0,0,0\n"), "--header", "--ref",
                        file("ref.txt", "c\n"), "--vocab", vocab, "--max-order", "1", "--smoothing"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(Json::parse(r.out)["aggregate"].get<double>(), (1.0 / 3.0 + 1.0) / 2.0, 1e-12);
  EXPECT_EQ(run({"lb", "--logits", path("u.csv"), "--ref", file("r2.txt", "zzz\n"), "--vocab", vocab}).code, 2);
}

TEST_F(Cli, ExpectedExamples) {
  const std::string ref = file("ref.txt", "a b\n");
  const std::string uniform = file("u.csv", "0,0\n0,0\n");
  Result r = run({"expected", "--logits", uniform, "--ref", ref, "--mode", "exhaustive", "--max-order", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(Json::parse(r.out)["value"].get<double>(), 0.75, 1e-15);
  EXPECT_EQ(Json::parse(r.out)["outcomes"].get<int>(), 4);

  r = run({"expected", "--logits", file("d.csv", "30,-30\n-30,30\n"), "--ref", ref, "--samples", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json mc = Json::parse(r.out);
  EXPECT_EQ(mc["std_error"].get<double>(), 0.0);
  EXPECT_EQ(mc["samples"].get<int>(), 100);
  EXPECT_EQ(mc["seed"].get<int>(), 0);

  const std::string big = file("big.csv", std::string("0,0,0,0,0,0,0,0,0,0\n") + "0,0,0,0,0,0,0,0,0,0\n");
  const std::string vocab = file("vocab.txt", "a\nb\nc\nd\ne\nf\ng\nh\ni\nj\n");
  EXPECT_EQ(run({"expected", "--logits", big, "--ref", ref, "--vocab", vocab, "--mode", "exhaustive"}).code, 0);
  setenv("BLEUBOUND_ENUM_CAP", "99", 1);
  EXPECT_EQ(run({"expected", "--logits", big, "--ref", ref, "--vocab", vocab, "--mode", "exhaustive"}).code, 4);
  setenv("BLEUBOUND_ENUM_CAP", "lots", 1);
  EXPECT_EQ(run({"expected", "--logits", big, "--ref", ref, "--vocab", vocab, "--mode", "exhaustive"}).code, 2);
  unsetenv("BLEUBOUND_ENUM_CAP");
}

TEST_F(Cli, ExpectedIsSeedDeterministic) {
  const std::vector<std::string> args{"expected", "--logits", file("z.csv", "0.1,0.5\n1,-1\n"), "--ref",
                                      file("ref.txt", "a b\n"), "--samples", "500", "--seed", "17"};
  const Result a = run(args);
  std::vector<std::string> threaded = args;
  threaded.insert(threaded.end(), {"--threads", "3"});
  const Result b = run(threaded);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, Gradcheck) {
  const Result a = run({"gradcheck", "--instances", "20", "--seed", "3"});
  ASSERT_EQ(a.code, 0) << a.err;
  const Json j = Json::parse(a.out);
  EXPECT_LT(j["max_rel_error"].get<double>(), 1e-4);
  EXPECT_EQ(run({"gradcheck", "--instances", "20", "--seed", "3"}).out, a.out);
  EXPECT_EQ(run({"gradcheck", "--instances", "5", "--corrupt-gradient"}).code, 1);
}

TEST_F(Cli, ToyCsvAndSummary) {
  const Result r = run({"toy", "--len", "3", "--vocab-size", "20", "--steps", "40", "--eval-every", "10",
                        "--samples", "50", "--lr", "0.05", "--output", path("curve.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path("curve.csv"));
  std::stringstream csv;
  csv << in.rdbuf();
  const auto rows = lines(csv.str());
  ASSERT_EQ(rows.size(), 1u + 40 / 10 + 1);
  EXPECT_EQ(rows[0], "step,lb,exact_argmax_bleu,mc_mean,mc_stderr");
  const Json summary = Json::parse(r.out);
  EXPECT_TRUE(summary.contains("correlation"));
  EXPECT_TRUE(summary.contains("initial_argmax_bleu"));
  EXPECT_TRUE(summary.contains("final_argmax_bleu"));
}

TEST_F(Cli, ToyConfigFileAndOverrides) {
  const std::string cfg = file("toy.json", R"({"len": 3, "vocab_size": 20, "steps": 10, "eval_every": 5,
                                               "mc_samples": 20, "learning_rate": 0.01})");
  Result r = run({"toy", "--config", cfg, "--steps", "20", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["config"]["steps"].get<int>(), 20);
  EXPECT_EQ(j["config"]["len"].get<int>(), 3);
  EXPECT_EQ(j["curve"].size(), 5u);

  EXPECT_EQ(run({"toy", "--config", file("bad.json", R"({"lenn": 3})")}).code, 2);
  EXPECT_EQ(run({"toy", "--config", file("broken.json", "{")}).code, 2);
  EXPECT_EQ(run({"toy", "--config", path("none.json")}).code, 3);
}

TEST_F(Cli, ToyRejectsLengthBelowOrder) {
  const Result r = run({"toy", "--len", "2", "--max-order", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("max_order"), std::string::npos);
}

TEST_F(Cli, CompareGrad) {
  const Result a = run({"compare-grad", "--samples", "200", "--seed", "1"});
  ASSERT_EQ(a.code, 0) << a.err;
  const Json j = Json::parse(a.out);
  EXPECT_TRUE(j["lb"]["deterministic"].get<bool>());
  EXPECT_EQ(j["lb"]["mean_entry_variance"].get<double>(), 0.0);
  ASSERT_EQ(j["reinforce"].size(), 3u);
  EXPECT_GT(j["reinforce"][0]["mean_entry_variance"].get<double>(),
            j["reinforce"][2]["mean_entry_variance"].get<double>());
  EXPECT_EQ(run({"compare-grad", "--samples", "200", "--seed", "1"}).out, a.out);
  EXPECT_EQ(run({"compare-grad", "--len", "12", "--vocab-size", "10"}).code, 4);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"lb", "--ref", "x"}).code, 2);
  EXPECT_EQ(run({"bleu", "--cand", "a", "--ref", "b", "--format", "xml"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, OutputFile) {
  const std::string f = file("a.txt", "x y\n");
  ASSERT_EQ(run({"bleu", "--cand", f, "--ref", f, "-o", path("out.jsonl")}).code, 0);
  EXPECT_TRUE(fs::file_size(path("out.jsonl")) > 0);
  EXPECT_EQ(run({"bleu", "--cand", f, "--ref", f, "-o", path("no/such/dir/out")}).code, 3);
}
