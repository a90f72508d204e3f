#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace cssam::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cssam(std::vector<std::string> args) {
  args.insert(args.begin(), "cssam");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("cssam_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  std::string work() const { return (root_ / "work").string(); }
  std::string corpus() const { return (root_ / "corpus.jsonl").string(); }
  std::vector<std::string> with_workdir(std::vector<std::string> args) const {
    args.push_back("--workdir");
    args.push_back(work());
    return args;
  }
  fs::path root_;
};

const std::vector<std::string> kTinyModel = {"--embed-dim", "8", "--hidden", "8", "--d-m", "8", "--cress-blocks", "2",
                                             "--batch-size", "8", "--threads", "1"};

std::vector<std::string> tiny(std::vector<std::string> a) {
  a.insert(a.end(), kTinyModel.begin(), kTinyModel.end());
  return a;
}

TEST_F(CliTest, NoCommandIsUsageError) { EXPECT_EQ(cssam({}).code, kUsage); }

TEST_F(CliTest, MissingCorpusIsDataError) {
  const Result r = cssam(with_workdir({"ingest", "--corpus", (root_ / "nope.jsonl").string()}));
  EXPECT_EQ(r.code, kData);
  EXPECT_NE(r.err.find("nope.jsonl"), std::string::npos);
}

TEST_F(CliTest, UnknownConfigKeyIsRejected) {
  std::ofstream(root_ / "cfg.json") << R"({"model": {"hidden": 8, "hiden": 9}})";
  const Result r = cssam(with_workdir({"ingest", "--config", (root_ / "cfg.json").string()}));
  EXPECT_EQ(r.code, kUsage);
  EXPECT_NE(r.err.find("hiden"), std::string::npos);
}

TEST_F(CliTest, TrainWithoutWorkspaceFails) {
  const Result r = cssam(with_workdir({"train"}));
  EXPECT_NE(r.code, kOk);
}

TEST_F(CliTest, IngestIsIdempotent) {
  ASSERT_EQ(cssam({"synth", "--count", "40", "--out", corpus()}).code, kOk);
  ASSERT_EQ(cssam(with_workdir({"ingest", "--corpus", corpus()})).code, kOk);
  const std::string train1 = slurp(fs::path(work()) / "dataset" / "train.jsonl");
  const std::string vocab1 = slurp(fs::path(work()) / "vocab" / "code.json");
  ASSERT_EQ(cssam(with_workdir({"ingest", "--corpus", corpus()})).code, kOk);
  EXPECT_EQ(slurp(fs::path(work()) / "dataset" / "train.jsonl"), train1);
  EXPECT_EQ(slurp(fs::path(work()) / "vocab" / "code.json"), vocab1);
  EXPECT_FALSE(train1.empty());
}

TEST_F(CliTest, DuplicateIdsRejected) {
  std::ofstream(corpus()) << "{\"id\":\"a\",\"code\":\"x = 1\",\"docstring\":\"one two three\",\"lang\":\"toy\"}\n"
                          << "{\"id\":\"a\",\"code\":\"y = 2\",\"docstring\":\"four five six\",\"lang\":\"toy\"}\n";
  EXPECT_EQ(cssam(with_workdir({"ingest", "--corpus", corpus()})).code, kData);
}

TEST_F(CliTest, PipelineWithOracleAndAblation) {
  ASSERT_EQ(cssam({"synth", "--count", "50", "--out", corpus(), "--seed", "2"}).code, kOk);
  ASSERT_EQ(cssam(with_workdir({"ingest", "--corpus", corpus(), "--test-fraction", "0.2"})).code, kOk);
  ASSERT_EQ(cssam(with_workdir({"graphs"})).code, kOk);
  EXPECT_TRUE(fs::exists(fs::path(work()) / "graphs" / "stats.json"));
  ASSERT_EQ(cssam(with_workdir({"pretrain", "--embed-dim", "8", "--pretrain-epochs", "1", "--walks-per-node", "2"})).code,
            kOk);
  const Result tr = cssam(with_workdir(tiny({"train", "--epochs", "2"})));
  ASSERT_EQ(tr.code, kOk) << tr.err;
  EXPECT_TRUE(fs::exists(fs::path(work()) / "checkpoint" / "manifest.json"));

  const Result oracle = cssam(with_workdir({"eval", "--scorer", "oracle", "--pool-size", "5"}));
  ASSERT_EQ(oracle.code, kOk) << oracle.err;
  const auto report = nlohmann::json::parse(slurp(fs::path(work()) / "reports" / "eval.json"));
  EXPECT_DOUBLE_EQ(report.at("MRR").get<double>(), 1.0);

  const Result model_eval = cssam(with_workdir({"eval", "--pool-size", "5"}));
  ASSERT_EQ(model_eval.code, kOk) << model_eval.err;
  EXPECT_NE(model_eval.out.find("MRR"), std::string::npos);

  EXPECT_EQ(cssam(with_workdir({"eval", "--pool-size", "1000"})).code, kUsage);

  const Result ab = cssam(with_workdir(tiny({"ablate", "--epochs", "1", "--pool-size", "5"})));
  ASSERT_EQ(ab.code, kOk) << ab.err;
  const auto rows = nlohmann::json::parse(slurp(fs::path(work()) / "reports" / "ablation.json"));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].at("label"), "Base");

  const Result resumed = cssam(with_workdir(tiny({"train", "--epochs", "3", "--resume"})));
  EXPECT_EQ(resumed.code, kOk) << resumed.err;
  const Result mismatch = cssam(with_workdir(tiny({"train", "--epochs", "4", "--resume", "--gat-layers", "2"})));
  EXPECT_EQ(mismatch.code, kCheckpoint);
}

TEST_F(CliTest, OverfitSearchRanksTargetFirst) {
  std::ofstream c(corpus());
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"void saveStringToFile(String s, File f) { f.write(s); }", "save string into the file"},
      {"int countLines(Reader r) { return r.lines().count(); }", "count lines in a reader"},
      {"void sortArray(int[] a) { Arrays.sort(a); }", "sort an integer array"},
      {"String readConfig(Path p) { return Files.readString(p); }", "read config from a path"},
      {"boolean isEmpty(List l) { return l.size() == 0; }", "check whether a list is empty"},
      {"void closeSocket(Socket s) { s.close(); }", "close the network socket"},
      {"int maxValue(int a, int b) { return a > b ? a : b; }", "return the larger value"},
      {"void printMessage(String m) { System.out.println(m); }", "print message to console"},
  };
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    c << nlohmann::json{{"id", "p" + std::to_string(i)}, {"code", pairs[i].first}, {"docstring", pairs[i].second},
                        {"lang", "java"}}
             .dump()
      << '\n';
  }
  c.close();
  ASSERT_EQ(cssam(with_workdir({"ingest", "--corpus", corpus(), "--test-fraction", "0"})).code, kOk);
  ASSERT_EQ(cssam(with_workdir({"graphs"})).code, kOk);
  const Result tr = cssam(with_workdir({"train", "--epochs", "60", "--lr", "1e-2", "--no-pretrained", "--no-cress",
                                        "--no-csrg", "--no-attention", "--dropout", "0",
                                        "--embed-dim", "16", "--hidden", "16", "--d-m", "16", "--batch-size", "8"}));
  ASSERT_EQ(tr.code, kOk) << tr.err;
  const Result s = cssam(with_workdir({"search", "save", "string", "into", "the", "file", "--top-k", "3"}));
  ASSERT_EQ(s.code, kOk) << s.err;
  const auto j = nlohmann::json::parse(s.out);
  EXPECT_EQ(j.at("query"), "save string into the file");
  ASSERT_EQ(j.at("results").size(), 3u);
  EXPECT_EQ(j.at("results")[0].at("id"), "p0");
  EXPECT_NE(j.at("results")[0].at("snippet_preview").get<std::string>().find("saveStringToFile"), std::string::npos);

  const Result text = cssam(with_workdir({"search", "sort", "array", "--format", "text", "--top-k", "1"}));
  ASSERT_EQ(text.code, kOk);
  EXPECT_EQ(text.out.substr(0, 2), "1\t");
}

TEST(RunConfigTest, JsonRoundTrip) {
  RunConfig c;
  c.seed = 9;
  c.model.hidden = 12;
  c.eval.pool_size = 33;
  const RunConfig back = run_config_from_json(to_json(c));
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.model.hidden, 12);
  EXPECT_EQ(back.eval.pool_size, 33u);
}

}  // namespace
}  // namespace cssam::cli
