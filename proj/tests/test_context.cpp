#include "doctest.h"

#include <fstream>
#include <sstream>

#include "comorbid/context.hpp"
#include "comorbid/error.hpp"
#include "comorbid/matcher.hpp"
#include "oracles.hpp"

using namespace comorbid;
using namespace comorbid::context;

namespace {

const matcher::MatchIndex& fixture_index() {
  static const auto mapping = terminology::load_mapping(oracle::data("fixtures/mapping.csv"));
  static const auto lexicon = terminology::load_lexicon(oracle::data("fixtures/lexicon.tsv"), mapping);
  static const auto index = matcher::MatchIndex::build(lexicon);
  return index;
}

const TriggerMatcher& default_matcher() {
  static const TriggerMatcher m(TriggerSet::defaults());
  return m;
}

/// Attributed mentions of `text`, in order.
std::vector<Mention> attributed(const std::string& text) {
  const auto analyzed = textproc::analyze(text);
  auto ms = matcher::find_mentions("d", analyzed, fixture_index());
  for (auto& m : ms) attribute(m, analyzed.tokens[m.sentence_index], default_matcher());
  return ms;
}

const Mention& by_text(const std::vector<Mention>& ms, const std::string& surface) {
  for (const auto& m : ms)
    if (m.matched_text == surface) return m;
  FAIL("no mention '" << surface << "'");
  return ms.front();
}

}  // namespace

TEST_CASE("negation examples") {
  auto ms = attributed("No evidence of cholera.");
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].attributes.negated);
  REQUIRE(ms[0].attributes.triggers.size() == 1);
  CHECK(ms[0].attributes.triggers[0].trigger == "no evidence of");
  CHECK(ms[0].attributes.triggers[0].start == 0);
  CHECK(ms[0].attributes.triggers[0].end == 14);

  CHECK_FALSE(attributed("Patient presented with cholera.")[0].attributes.negated);
  CHECK_FALSE(by_text(attributed("Denies chest pain but reports asthma."), "asthma").attributes.negated);
}

TEST_CASE("temporality examples") {
  CHECK(attributed("History of asthma.")[0].attributes.temporality == Temporality::Historic);
  CHECK(attributed("Asthma exacerbation today.")[0].attributes.temporality == Temporality::Recent);
  const auto ms = attributed("Previous cholera; now has asthma.");
  CHECK(by_text(ms, "cholera").attributes.temporality == Temporality::Historic);
  CHECK(by_text(ms, "asthma").attributes.temporality == Temporality::Recent);
}

TEST_CASE("window is six words and ignores punctuation") {
  CHECK(attributed("No a b c d e asthma.")[0].attributes.negated);
  CHECK_FALSE(attributed("No a b c d e f asthma.")[0].attributes.negated);
  CHECK(attributed("No, a, b, c, d, e, asthma.")[0].attributes.negated);
  CHECK(attributed("Asthma a b c d e excluded.")[0].attributes.negated);
  CHECK_FALSE(attributed("Asthma a b c d e f excluded.")[0].attributes.negated);
}

TEST_CASE("scope stays inside the sentence") {
  CHECK_FALSE(attributed("No fever. Asthma.")[0].attributes.negated);
  CHECK_FALSE(attributed("Asthma. Ruled out for other things.")[0].attributes.negated);
  CHECK(attributed("History of falls.\nAsthma.")[0].attributes.temporality == Temporality::Recent);
}

TEST_CASE("is_relevant truth table") {
  for (bool negated : {false, true})
    for (auto t : {Temporality::Recent, Temporality::Historic}) {
      MentionAttributes a;
      a.negated = negated;
      a.temporality = t;
      CHECK(is_relevant(a) == (!negated && t == Temporality::Recent));
    }
}

TEST_CASE("trigger-free token streams give the defaults") {
  const std::vector<std::string> words{"patient", "seen", "asthma", "cholera", "with", "and", "reports",
                                       "cough", "the", "clinic", ",", "-", "pain"};
  Xoshiro256 rng(31);
  for (int round = 0; round < 1000; ++round) {
    std::string s;
    const auto n = 1 + rng.below(25);
    for (std::uint64_t i = 0; i < n; ++i) s += words[rng.below(words.size())] + " ";
    for (const auto& m : attributed(s)) {
      CHECK_FALSE(m.attributes.negated);
      CHECK(m.attributes.temporality == Temporality::Recent);
      CHECK(m.attributes.triggers.empty());
    }
  }
}

TEST_CASE("fixture sentences") {
  std::ifstream in(oracle::data("fixtures/context_cases.tsv"));
  REQUIRE(in);
  std::string line;
  std::size_t cases = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, '\t');) f.push_back(cell);
    REQUIRE(f.size() == 4);
    INFO(f[0]);
    const auto& m = by_text(attributed(f[0]), f[1]);
    CHECK(m.attributes.negated == (f[2] == "yes"));
    CHECK(to_string(m.attributes.temporality) == f[3]);
    ++cases;
  }
  CHECK(cases >= 50);
}

TEST_CASE("trigger file parsing") {
  const auto set = TriggerSet::parse(
      "negation_pre = [\"No\", \"denies\"]\nnegation_post = []\nhistoric = [\"History of\"]\n"
      "terminators = [\";\", \"but\"] # trailing comment\n");
  CHECK(set.negation_pre == std::vector<std::string>{"no", "denies"});
  CHECK(set.historic == std::vector<std::string>{"history of"});
  CHECK(set.terminators == std::vector<std::string>{";", "but"});

  CHECK_THROWS_AS(TriggerSet::parse("negation_pre = [\"no\"]\n"), ParseError);
  CHECK_THROWS_AS(TriggerSet::parse("negation_pre = [\"no\"\n"), ParseError);
  CHECK_THROWS_AS(TriggerSet::parse("negation_pre = []\nnegation_post = []\nhistoric = []\nterminators = []\n"
                                    "extra = []\n"),
                  ParseError);
  CHECK_THROWS_AS(TriggerSet::parse("negation_pre = [\"no\"]\nnegation_post = [\"No\"]\nhistoric = []\n"
                                    "terminators = []\n"),
                  ValidationError);
  CHECK_THROWS_AS(TriggerMatcher(TriggerSet::defaults(), 0), ArgumentError);
}
