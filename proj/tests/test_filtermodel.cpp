#include "doctest.h"

#include "comorbid/error.hpp"
#include "comorbid/filtermodel.hpp"
#include "comorbid/rng.hpp"
#include "oracles.hpp"

using namespace comorbid;
using namespace comorbid::filtermodel;

namespace {

Mention mention_at(const char* cui, std::size_t sentence, std::size_t start) {
  Mention m;
  m.doc_id = "d";
  m.cui = Cui(cui);
  m.icd_code = IcdCode("A00");
  m.chapter = ChapterId(1);
  m.sentence_index = sentence;
  m.start = start;
  m.end = start + 3;
  return m;
}

FeatureKey same(const char* cui) { return FeatureKey{Slot::SameSentence, Cui(cui)}; }
FeatureKey prior(const char* cui) { return FeatureKey{Slot::PriorSentence, Cui(cui)}; }

TrainInstance instance(FeatureKeys features, bool positive) {
  std::sort(features.begin(), features.end());
  return TrainInstance{std::move(features), positive ? Label::TrueMention : Label::NotMention, Cui("C0000001"),
                       ChapterId(1)};
}

// Feature C0000010 present exactly on the positives; C0000011 is noise.
std::vector<TrainInstance> separable_set() {
  std::vector<TrainInstance> out;
  for (int i = 0; i < 20; ++i) {
    FeatureKeys f;
    if (i % 2 == 0) f.push_back(same("C0000010"));
    if (i % 3 == 0) f.push_back(same("C0000011"));
    if (i % 5 == 0) f.push_back(prior("C0000012"));
    out.push_back(instance(f, i % 2 == 0));
  }
  return out;
}

std::vector<TrainInstance> random_set(Xoshiro256& rng, std::size_t n, unsigned features) {
  std::vector<TrainInstance> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(oracle::instance_of_type(static_cast<unsigned>(rng.below(1u << (features + 1))), features));
  // Both classes must be present.
  out[0].label = Label::TrueMention;
  out[1].label = Label::NotMention;
  return out;
}

Tree leaf_tree(std::uint32_t t, std::uint32_t f) {
  Tree tree;
  TreeNode leaf;
  leaf.true_count = t;
  leaf.false_count = f;
  tree.nodes.push_back(leaf);
  return tree;
}

ForestModel model_of(std::vector<Tree> trees) {
  ForestModel m;
  m.condition_cui = Cui("C0000001");
  m.params.n_trees = static_cast<std::uint32_t>(trees.size());
  m.trees = std::move(trees);
  return m;
}

}  // namespace

TEST_CASE("encode_features examples") {
  const std::vector<Mention> doc{mention_at("C0008354", 0, 0), mention_at("C0011849", 1, 20)};
  CHECK(encode_features(doc[1], doc) == FeatureKeys{same("C0011849"), prior("C0008354")});
  CHECK(encode_features(doc[0], doc) == FeatureKeys{same("C0008354")});

  const std::vector<Mention> solo{mention_at("C0008354", 0, 0)};
  CHECK(encode_features(solo[0], solo).size() == 1);

  const std::vector<Mention> repeated{mention_at("C0008354", 0, 0), mention_at("C0008354", 0, 10)};
  CHECK(encode_features(repeated[0], repeated) == FeatureKeys{same("C0008354")});

  // Only the sentence directly before counts.
  const std::vector<Mention> gap{mention_at("C0000005", 0, 0), mention_at("C0000006", 2, 30)};
  CHECK(encode_features(gap[1], gap) == FeatureKeys{same("C0000006")});
}

TEST_CASE("vocabulary encoding ignores unseen keys") {
  const std::vector<FeatureKeys> examples{{same("C0000002"), prior("C0000001")}, {same("C0000001")}};
  const auto vocab = FeatureVocab::build(examples);
  REQUIRE(vocab.size() == 3);
  CHECK(vocab.id_of(same("C0000001")) == 0u);
  CHECK(vocab.id_of(same("C0000002")) == 1u);
  CHECK(vocab.id_of(prior("C0000001")) == 2u);
  CHECK(vocab.encode({same("C0000002"), same("C0000009")}).ids == std::vector<std::uint32_t>{1});
  CHECK_FALSE(vocab.id_of(prior("C0000009")).has_value());
}

TEST_CASE("gini examples") {
  CHECK(gini(10, 0) == 0.0);
  CHECK(gini(0, 3) == 0.0);
  CHECK(gini(5, 5) == 0.5);
  CHECK(gini(3, 1) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK_THROWS_AS(gini(0, 0), ArgumentError);
}

TEST_CASE("max_features default") {
  ForestParams p;
  CHECK(p.n_trees == 100);
  CHECK(p.min_leaf == 1);
  CHECK(p.max_depth == 0);
  CHECK(p.bootstrap);
  CHECK(p.features_for(0) == 1);
  CHECK(p.features_for(1) == 1);
  CHECK(p.features_for(3) == 1);
  CHECK(p.features_for(4) == 2);
  CHECK(p.features_for(99) == 9);
  CHECK(p.features_for(100) == 10);
  p.max_features = 7;
  CHECK(p.features_for(100) == 7);
}

TEST_CASE("degenerate and invalid training data") {
  std::vector<TrainInstance> all_true{instance({same("C0000010")}, true), instance({}, true)};
  CHECK_THROWS_AS(train_forest(all_true, ForestParams{}, 1), DegenerateDataError);
  std::vector<TrainInstance> none;
  CHECK_THROWS_AS(train_forest(none, ForestParams{}, 1), ArgumentError);
  auto mixed = separable_set();
  mixed[3].cui = Cui("C0000002");
  CHECK_THROWS_AS(train_forest(mixed, ForestParams{}, 1), ArgumentError);
}

TEST_CASE("separable set is learned perfectly") {
  const auto data = separable_set();
  const auto model = train_forest(data, ForestParams{}, 42);
  CHECK(model.trees.size() == 100);
  for (const auto& inst : data) CHECK(predict(model, inst.features).label == inst.label);
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) CHECK(static_cast<std::size_t>(node.feature) < model.vocab.size());
}

TEST_CASE("training is deterministic across runs and thread counts") {
  Xoshiro256 rng(8);
  for (int round = 0; round < 10; ++round) {
    const auto data = random_set(rng, 30 + rng.below(40), 6);
    ForestParams p;
    p.n_trees = 25;
    const auto a = serialize_model(train_forest(data, p, 1234 + round, 1));
    CHECK(serialize_model(train_forest(data, p, 1234 + round, 1)) == a);
    CHECK(serialize_model(train_forest(data, p, 1234 + round, 3)) == a);
  }
  const auto data = separable_set();
  CHECK(serialize_model(train_forest(data, ForestParams{}, 1)) !=
        serialize_model(train_forest(data, ForestParams{}, 2)));
}

TEST_CASE("bootstrap samples follow the per-tree seed stream") {
  const auto data = separable_set();
  ForestParams p;
  p.n_trees = 12;
  TrainTrace trace;
  train_forest(data, p, 500, 2, &trace);
  REQUIRE(trace.samples.size() == 12);
  for (std::size_t t = 0; t < trace.samples.size(); ++t) {
    REQUIRE(trace.samples[t].size() == data.size());
    Xoshiro256 stream(500 + t);
    for (auto idx : trace.samples[t]) CHECK(idx == stream.below(data.size()));
  }

  p.bootstrap = false;
  TrainTrace identity;
  train_forest(data, p, 500, 1, &identity);
  for (const auto& s : identity.samples) {
    REQUIRE(s.size() == data.size());
    for (std::uint32_t i = 0; i < s.size(); ++i) CHECK(s[i] == i);
  }
}

TEST_CASE("vote rules") {
  const FeatureVector none;
  auto all_true = predict(model_of({leaf_tree(3, 0), leaf_tree(2, 1)}), none);
  CHECK(all_true.label == Label::TrueMention);
  CHECK(all_true.score == 1.0);
  auto all_false = predict(model_of({leaf_tree(0, 3), leaf_tree(1, 2)}), none);
  CHECK(all_false.label == Label::NotMention);
  CHECK(all_false.score == 0.0);
  auto half = predict(model_of({leaf_tree(3, 0), leaf_tree(0, 3), leaf_tree(0, 1), leaf_tree(1, 0)}), none);
  CHECK(half.label == Label::TrueMention);
  CHECK(half.score == 0.5);
  CHECK(half.true_votes == 2);
  // A tied leaf votes TrueMention.
  CHECK(leaf_tree(2, 2).vote(none) == Label::TrueMention);
  auto minority = predict(model_of({leaf_tree(1, 0), leaf_tree(0, 1), leaf_tree(0, 1)}), none);
  CHECK(minority.label == Label::NotMention);
  CHECK(minority.score == 1.0 / 3.0);
}

TEST_CASE("score is the exact vote fraction") {
  Xoshiro256 rng(77);
  for (int round = 0; round < 5; ++round) {
    const auto data = random_set(rng, 40, 5);
    ForestParams p;
    p.n_trees = 1 + static_cast<std::uint32_t>(rng.below(30));
    const auto model = train_forest(data, p, round);
    for (const auto& inst : data) {
      const auto vec = model.vocab.encode(inst.features);
      std::uint32_t votes = 0;
      for (auto it = model.trees.rbegin(); it != model.trees.rend(); ++it)
        votes += it->vote(vec) == Label::TrueMention;
      const auto pred = predict(model, vec);
      CHECK(pred.true_votes == votes);
      CHECK(pred.score == static_cast<double>(votes) / p.n_trees);
      CHECK((pred.label == Label::TrueMention) == (2 * votes >= p.n_trees));
    }
  }
}

TEST_CASE("depth and leaf limits") {
  Xoshiro256 rng(4);
  const auto data = random_set(rng, 60, 6);
  ForestParams p;
  p.n_trees = 5;
  p.max_depth = 1;
  for (const auto& tree : train_forest(data, p, 3).trees) CHECK(tree.nodes.size() <= 3);
  p.max_depth = 0;
  p.min_leaf = 10;
  for (const auto& tree : train_forest(data, p, 3).trees)
    for (const auto& n : tree.nodes)
      if (n.is_leaf()) CHECK(n.true_count + n.false_count >= 10);
}

TEST_CASE("model serialization") {
  const auto model = train_forest(separable_set(), ForestParams{}, 9);
  const auto bytes = serialize_model(model);
  CHECK(bytes.substr(0, 4) == "CMRF");
  CHECK(deserialize_model(bytes) == model);
  CHECK(serialize_model(deserialize_model(bytes)) == bytes);

  ForestParams small;
  small.n_trees = 2;
  small.max_features = 2;
  const auto tiny = serialize_model(train_forest(separable_set(), small, 9));
  for (std::size_t len = 0; len < tiny.size(); ++len)
    CHECK_THROWS_AS(deserialize_model(std::string_view(tiny).substr(0, len)), ParseError);

  auto flipped = tiny;
  flipped[tiny.size() / 2] ^= 0x40;
  CHECK_THROWS_AS(deserialize_model(flipped), ParseError);

  auto future = tiny;
  future[4] = 9;
  try {
    deserialize_model(future);
    FAIL("expected a version error");
  } catch (const VersionError& e) {
    const std::string what = e.what();
    CHECK(what.find("expected 1") != std::string::npos);
    CHECK(what.find("found 9") != std::string::npos);
  }
}

TEST_CASE("single full-feature tree equals the exhaustive Gini tree") {
  Xoshiro256 rng(61);
  for (int round = 0; round < 300; ++round) {
    const auto features = 1 + static_cast<unsigned>(rng.below(4));
    const auto data = random_set(rng, 2 + rng.below(11), features);
    CHECK(oracle::tree_matches_oracle(data));
  }
}
