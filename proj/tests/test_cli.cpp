#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "comorbid/pipeline.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace comorbid;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("comorbid-cli-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

/// Runs the CLI with `args`; stderr goes to `err` when given.
int cli(const std::string& args, const fs::path& err = "/dev/null") {
  const std::string cmd = std::string(COMORBID_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fixture_terms() {
  return "--lexicon " + oracle::data("fixtures/lexicon.tsv") + " --mapping " + oracle::data("fixtures/mapping.csv");
}

/// Structural equality with a tolerance on numbers.
bool close(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return std::abs(a.get<double>() - b.get<double>()) <= 1e-12;
  if (a.type() != b.type()) return false;
  if (a.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!close(a[i], b[i])) return false;
    return true;
  }
  if (a.is_object()) {
    if (a.size() != b.size()) return false;
    for (const auto& [k, v] : a.items())
      if (!b.contains(k) || !close(v, b[k])) return false;
    return true;
  }
  return a == b;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli("") == 1);
  CHECK(cli("--no-such-flag kappa") == 1);
  CHECK(cli("kappa --bogus") == 1);
  CHECK(cli("frobnicate") == 1);
}

TEST_CASE("kappa on the fixture annotations") {
  TempDir dir("kappa");
  const auto out = dir.path / "kappa.json";
  REQUIRE(cli(fixture_terms() + " kappa --annotations " + oracle::data("fixtures/kappa/annotations.jsonl") +
              " --out " + out.string()) == 0);
  const auto got = json::parse(pipeline::read_file(out));
  const auto expected = json::parse(pipeline::read_file(oracle::data("fixtures/kappa/expected.json")));
  INFO(got.dump());
  CHECK(close(got, expected));
}

TEST_CASE("missing input exits 2, missing seed exits 1") {
  TempDir dir("errors");
  CHECK(cli(fixture_terms() + " kappa --annotations " + (dir.path / "none.jsonl").string()) == 2);
  CHECK(cli("--lexicon /nonexistent.tsv --mapping /nonexistent.csv kappa --annotations " +
            oracle::data("fixtures/kappa/annotations.jsonl")) == 2);
  CHECK(cli(fixture_terms() + " synth --out-dir " + dir.path.string()) == 1);
  pipeline::write_file(dir.path / "bad.json", "{\"colour\": 1}");
  CHECK(cli("--config " + (dir.path / "bad.json").string() + " kappa") == 1);
}

TEST_CASE("train skips single-class conditions") {
  TempDir dir("train");
  const auto mentions = dir.path / "mentions.jsonl";
  REQUIRE(cli(fixture_terms() + " extract --corpus " + oracle::data("fixtures/corpus.jsonl") + " --out " +
              mentions.string()) == 0);
  const auto ms = pipeline::load_mentions(mentions);
  REQUIRE(ms.size() == 7);
  // Hypertension has both labels (two mentions), diabetes only one.
  std::vector<annotation::GoldInstance> gold{{ref_of(ms[0]), Label::TrueMention, std::nullopt, std::nullopt},
                                             {ref_of(ms[4]), Label::NotMention, std::nullopt, std::nullopt},
                                             {ref_of(ms[1]), Label::TrueMention, std::nullopt, std::nullopt}};
  REQUIRE(ms[0].cui == ms[4].cui);
  pipeline::write_file(dir.path / "gold.jsonl", annotation::serialize_gold(gold));

  const auto err = dir.path / "stderr.txt";
  CHECK(cli(fixture_terms() + " --seed 7 train --gold " + (dir.path / "gold.jsonl").string() + " --mentions " +
                mentions.string() + " --model-dir " + (dir.path / "models").string(),
            err) == 0);
  CHECK(fs::exists(dir.path / "models" / (ms[0].cui.str() + ".cmrf")));
  CHECK_FALSE(fs::exists(dir.path / "models" / (ms[1].cui.str() + ".cmrf")));
  CHECK(pipeline::read_file(err).find("skipping " + ms[1].cui.str()) != std::string::npos);

  // The model scores mentions at extraction time.
  const auto scored = dir.path / "scored.jsonl";
  REQUIRE(cli(fixture_terms() + " extract --corpus " + oracle::data("fixtures/corpus.jsonl") + " --models " +
              (dir.path / "models").string() + " --out " + scored.string()) == 0);
  const auto sm = pipeline::load_mentions(scored);
  CHECK(sm[0].filter_score.has_value());
  CHECK_FALSE(sm[1].filter_score.has_value());
}

TEST_CASE("synthetic pipeline with a config is reproducible") {
  TempDir dir("eval");
  const auto d = dir.path.string();
  pipeline::write_file(dir.path / "config.json", R"({
    "corpus": "corpus.jsonl", "annotations": "annotations.jsonl", "mentions": "mentions.jsonl",
    "gold": "gold.jsonl", "model_dir": "models", "seed": 42, "k": 5, "forest": {"n_trees": 20}
  })");
  const auto cfg = " --config " + d + "/config.json";
  const auto syn_terms =
      " --lexicon " + oracle::data("synthetic/lexicon.tsv") + " --mapping " + oracle::data("synthetic/mapping.csv");
  REQUIRE(cli(cfg + syn_terms + " synth --out-dir " + d + " --documents 60") == 0);
  REQUIRE(cli(cfg + syn_terms + " extract") == 0);
  REQUIRE(cli(cfg + syn_terms + " gold") == 0);
  REQUIRE(cli(cfg + syn_terms + " eval --out-dir " + d + "/r1") == 0);
  REQUIRE(cli(cfg + syn_terms + " --threads 3 eval --out-dir " + d + "/r2") == 0);
  for (const char* f : {"chapter_metrics.csv", "condition_metrics.csv", "chapter_metrics.txt"}) {
    INFO(f);
    CHECK(pipeline::read_file(dir.path / "r1" / f) == pipeline::read_file(dir.path / "r2" / f));
  }
  CHECK(pipeline::read_file(dir.path / "r1" / "chapter_metrics.csv").rfind("chapter,instances,precision", 0) == 0);

  REQUIRE(cli(cfg + syn_terms + " train") == 0);
  const auto first = pipeline::read_file(dir.path / "models" / "C9000102.cmrf");
  REQUIRE(cli(cfg + syn_terms + " train") == 0);
  CHECK(pipeline::read_file(dir.path / "models" / "C9000102.cmrf") == first);

  // The seed flag overrides the config.
  REQUIRE(cli(cfg + syn_terms + " --seed 43 eval --out-dir " + d + "/r3") == 0);
  CHECK(pipeline::read_file(dir.path / "r3" / "condition_metrics.csv") !=
        pipeline::read_file(dir.path / "r1" / "condition_metrics.csv"));
}

TEST_CASE("index writes a loadable match index") {
  TempDir dir("index");
  REQUIRE(cli(fixture_terms() + " index --out " + (dir.path / "index.txt").string()) == 0);
  const auto index = matcher::MatchIndex::deserialize(pipeline::read_file(dir.path / "index.txt"));
  CHECK(index.size() > 16);
}
