#include "doctest.h"

#include "comorbid/rng.hpp"
#include "comorbid/textproc.hpp"
#include "comorbid/unicode.hpp"

using namespace comorbid;
using namespace comorbid::textproc;

namespace {

std::vector<std::pair<std::size_t, std::size_t>> spans(const std::vector<Sentence>& ss) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& s : ss) out.emplace_back(s.start, s.end);
  return out;
}

std::vector<std::string> surfaces(const std::vector<Token>& ts) {
  std::vector<std::string> out;
  for (const auto& t : ts) out.push_back(t.surface);
  return out;
}

// Random note text drawn from words, punctuation, newlines and a few
// non-ASCII letters.
std::string random_note(Xoshiro256& rng, std::size_t pieces) {
  static const char* parts[] = {"asthma",  "Denies",  "pain", "Dr.",   "e.g.",   "naïve", "ŒDEMA", "café", "x-ray",
                                "type-2", "  ",      ".",    "?",     "!",      ",",     ";",     "\n",   "\n\n",
                                "3.5mg",  "(left)",  "…",    "日本",  "Ⅻ",     "ﬁbrosis", "\t",   "'s",   "BP:120/80"};
  std::string s;
  for (std::size_t i = 0; i < pieces; ++i) {
    s += parts[rng.below(std::size(parts))];
    if (rng.below(3) != 0) s += " ";
  }
  return s;
}

}  // namespace

TEST_CASE("sentence segmentation examples") {
  using P = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(spans(segment_sentences(std::string_view("Has asthma. Denies pain."))) == P{{0, 11}, {12, 24}});
  CHECK(segment_sentences(std::string_view("")).empty());
  CHECK(segment_sentences(std::string_view("Seen by Dr. Smith today.")).size() == 1);
  CHECK(spans(segment_sentences(std::string_view("Line one\nLine two"))) == P{{0, 8}, {9, 17}});
  CHECK(segment_sentences(std::string_view("Dose 3.5 mg daily. Stable")).size() == 2);
  CHECK(segment_sentences(std::string_view("Really?! Yes.")).size() == 2);
  CHECK(segment_sentences(std::string_view("   \n\n  ")).empty());
  // Offsets count code points, not bytes.
  CHECK(spans(segment_sentences(std::string_view("Naïve. Café."))) == P{{0, 6}, {7, 12}});
}

TEST_CASE("custom abbreviation list") {
  auto abbrev = AbbreviationList::parse("# comment\nobs.\n");
  CHECK(abbrev.size() == 1);
  CHECK(segment_sentences(std::string_view("Routine obs. Stable."), abbrev).size() == 1);
  CHECK(segment_sentences(std::string_view("Seen by Dr. Smith."), abbrev).size() == 2);
}

TEST_CASE("tokenize examples") {
  CHECK(surfaces(tokenize(std::string_view("type-2 diabetes"))) == std::vector<std::string>{"type", "-", "2", "diabetes"});
  CHECK(tokenize(std::string_view("asthma")).size() == 1);
  CHECK(tokenize(std::string_view("  ")).empty());
  auto t = tokenize(std::string_view("Café, OK"));
  REQUIRE(t.size() == 3);
  CHECK(t[0].start == 0);
  CHECK(t[0].end == 4);
  CHECK(t[0].norm == "café");
  CHECK(t[1].punct);
  CHECK(t[1].key() == ",");
  CHECK(t[2].key() == "ok");
}

TEST_CASE("normalize examples") {
  CHECK(normalize("Cholera") == "cholera");
  CHECK(normalize("cholera,") == "cholera");
  CHECK(normalize("(Asthma)") == "asthma");
  CHECK(normalize("ÖDEMA") == "ödema");
  CHECK(normalize("ﬁbrosis") == "fibrosis");
  CHECK(normalize("Straße") == "strasse");
  CHECK(normalize(",,,") == "");
  CHECK(normalize("type-2") == "type-2");
}

TEST_CASE("normalize is idempotent") {
  Xoshiro256 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto s = random_note(rng, 1 + rng.below(4));
    const auto once = normalize(s);
    CHECK(normalize(once) == once);
  }
}

TEST_CASE("offset fidelity and sentence partition on random notes") {
  Xoshiro256 rng(3);
  for (int round = 0; round < 500; ++round) {
    const auto note = random_note(rng, rng.below(80));
    const auto analyzed = analyze(note);
    const auto& text = analyzed.text;
    CHECK(text == unicode::decode(note));

    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < analyzed.sentences.size(); ++i) {
      const auto& s = analyzed.sentences[i];
      CHECK(s.index == i);
      CHECK(s.start < s.end);
      CHECK(s.end <= text.size());
      CHECK(s.start >= prev_end);
      prev_end = s.end;
      for (const auto& t : analyzed.tokens[i]) {
        CHECK(t.start >= s.start);
        CHECK(t.end <= s.end);
        CHECK(unicode::encode(std::u32string_view(text).substr(t.start, t.end - t.start)) == t.surface);
        CHECK(t.norm == (t.punct ? std::string() : normalize(t.surface)));
      }
    }
    const auto again = analyze(note);
    CHECK(again.sentences == analyzed.sentences);
    CHECK(again.tokens == analyzed.tokens);
  }
}
