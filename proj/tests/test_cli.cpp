#include <doctest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "topicopt/corpus.hpp"
#include "topicopt/metrics.hpp"

using namespace topicopt;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("topicopt_cli_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("cd '") + TOPICOPT_SOURCE_DIR + "' && '" + TOPICOPT_CLI + "' " + args + " > '" +
                          log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(log);
  return r;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("unknown subcommand prints usage and fails") {
    const fs::path dir = scratch_dir("usage");
    const Run r = cli("frobnicate", dir / "log.txt");
    CHECK(r.code != 0);
    CHECK(r.output.find("Subcommands") != std::string::npos);
    CHECK(cli("", dir / "log.txt").code != 0);
    fs::remove_all(dir);
  }

  TEST_CASE("soo pipeline over a 2x2 space logs four trials") {
    const fs::path dir = scratch_dir("soo");
    const std::string common = "--config configs/cluster_soo.json --out '" + dir.string() + "'";
    for (const char* stage : {"ingest", "preprocess", "train", "evaluate", "hpo", "report"}) {
      const Run r = cli(std::string(stage) + " " + common, dir / "log.txt");
      INFO(stage << ": " << r.output);
      REQUIRE(r.code == 0);
    }
    const std::string log = slurp(dir / "trials.ndjson");
    CHECK(std::count(log.begin(), log.end(), '\n') == 4);
    const auto result = nlohmann::json::parse(slurp(dir / "hpo_result.json"));
    CHECK(result.at("n_trials") == 4);
    CHECK(result.at("best").is_object());
    double best = -INFINITY;
    std::istringstream lines(log);
    for (std::string line; std::getline(lines, line);)
      best = std::max(best, nlohmann::json::parse(line).at("objectives").at(0).get<double>());
    CHECK(result.at("best").at("objectives").at(0).get<double>() == best);

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    for (const char* stage : {"ingest", "preprocess", "train", "evaluate", "hpo", "report"})
      CHECK(manifest.at("stages").at(stage).at("status") == "complete");
    for (const char* f : {"report/topic_table.csv", "report/similarity.csv", "report/doc_scatter.csv",
                          "report/topics_over_time.csv", "report/wordcloud.csv", "metrics.json"})
      CHECK(fs::exists(dir / f));
    fs::remove_all(dir);
  }

  TEST_CASE("evaluate on a hand-written topic set matches the metric oracles") {
    const fs::path dir = scratch_dir("eval");
    const std::vector<std::vector<std::string>> docs = {{"plastic", "waste", "bottle", "reuse"},
                                                        {"reuse", "repair", "shop", "waste"},
                                                        {"plastic", "bottle", "deposit"},
                                                        {"repair", "cafe", "shop", "tool", "reuse"}};
    Corpus c;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      Document d;
      d.tokens = docs[i];
      d.doc_id = i;
      d.timestamp = 1600000000 + static_cast<std::int64_t>(i);
      c.docs.push_back(d);
    }
    std::ofstream(dir / "corpus.ndjson") << corpus_to_ndjson(c);
    const std::vector<std::vector<std::string>> topics = {{"plastic", "bottle", "waste"}, {"repair", "shop", "reuse"}};
    std::ofstream(dir / "topics.json") << nlohmann::json(topics).dump();

    const Run r = cli("evaluate --out '" + dir.string() + "' --metrics.window_size=3", dir / "log.txt");
    INFO(r.output);
    REQUIRE(r.code == 0);
    const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
    CHECK(std::abs(metrics.at("coherence").get<double>() - oracle::coherence(docs, topics, 3)) <= 1e-9);
    CHECK(std::abs(metrics.at("diversity").get<double>() - oracle::diversity(topics, 0.9, 10)) <= 1e-9);
    CHECK(metrics.at("perplexity").is_null());
    fs::remove_all(dir);
  }

  TEST_CASE("config and data errors map to exit codes and name the problem") {
    const fs::path dir = scratch_dir("errors");
    const std::string out = " --out '" + dir.string() + "'";

    Run r = cli("train --config configs/cluster_soo.json" + out, dir / "log.txt");
    CHECK(r.code == 3);
    CHECK(r.output.find("topicopt preprocess") != std::string::npos);

    r = cli("ingest --config configs/cluster_soo.json --lda.n_topics=0" + out, dir / "log.txt");
    CHECK(r.code == 2);
    CHECK(r.output.find("lda.n_topics") != std::string::npos);

    r = cli("ingest --config configs/cluster_soo.json --lda.bogus=1" + out, dir / "log.txt");
    CHECK(r.code == 2);
    CHECK(r.output.find("lda.bogus") != std::string::npos);

    r = cli("ingest --config configs/does_not_exist.json" + out, dir / "log.txt");
    CHECK(r.code == 2);

    r = cli("ingest --data.path=missing_corpus.json" + out, dir / "log.txt");
    CHECK(r.code == 2);
    CHECK(r.output.find("data.path") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("a failing stage still leaves its manifest") {
    const fs::path dir = scratch_dir("crash");
    const std::string common = "--config configs/cluster_soo.json --out '" + dir.string() + "'";
    REQUIRE(cli("ingest " + common, dir / "log.txt").code == 0);
    REQUIRE(cli("preprocess " + common, dir / "log.txt").code == 0);
    const Run r = cli("train " + common + " --cluster.n_clusters=100000", dir / "log.txt");
    CHECK(r.code == 3);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("stages").at("train").at("status") == "failed");
    CHECK_FALSE(manifest.at("stages").at("train").at("error").get<std::string>().empty());
    CHECK_FALSE(fs::exists(dir / "model.json"));
    fs::remove_all(dir);
  }
}
