#include "doctest.h"

#include <map>
#include <string>

#include "comorbid/error.hpp"
#include "comorbid/rng.hpp"
#include "comorbid/types.hpp"
#include "comorbid/unicode.hpp"

using namespace comorbid;

TEST_CASE("cui validation") {
  CHECK(Cui::is_valid("C0008354"));
  CHECK_FALSE(Cui::is_valid("C000835"));
  CHECK_FALSE(Cui::is_valid("c0008354"));
  CHECK_FALSE(Cui::is_valid("C00083541"));
  CHECK_FALSE(Cui::is_valid("C00O8354"));
  CHECK_THROWS_AS(Cui("X0008354"), ValidationError);
  CHECK(Cui("C0008354").str() == "C0008354");
  CHECK(Cui("C0000001") < Cui("C0000002"));
}

TEST_CASE("icd code ordinal round trip") {
  CHECK(IcdCode("A00").ordinal() == 0);
  CHECK(IcdCode("A99").ordinal() == 99);
  CHECK(IcdCode("B00").ordinal() == 100);
  CHECK(IcdCode("Z99").ordinal() == 2599);
  for (int o = 0; o < 2600; ++o) CHECK(IcdCode::from_ordinal(o).ordinal() == o);
  CHECK_THROWS_AS(IcdCode("A0"), ValidationError);
  CHECK_THROWS_AS(IcdCode("a00"), ValidationError);
  CHECK_THROWS_AS(IcdCode("A00.1"), ValidationError);
}

TEST_CASE("chapter roman numerals") {
  const char* romans[] = {"I",    "II",  "III", "IV",   "V",     "VI",  "VII", "VIII", "IX",   "X",    "XI",
                          "XII",  "XIII", "XIV", "XV",  "XVI",   "XVII", "XVIII", "XIX", "XX",  "XXI", "XXII"};
  for (int i = 1; i <= 22; ++i) {
    CHECK(ChapterId(i).roman() == romans[i - 1]);
    CHECK(ChapterId::parse(romans[i - 1]) == ChapterId(i));
  }
  CHECK_THROWS_AS(ChapterId::parse("IIII"), ValidationError);
  CHECK_THROWS_AS(ChapterId::parse(""), ValidationError);
  CHECK_THROWS_AS(ChapterId(23), ValidationError);
}

TEST_CASE("enum names") {
  CHECK(to_string(Temporality::Historic) == "historic");
  CHECK(parse_temporality("recent") == Temporality::Recent);
  CHECK(parse_label("TrueMention") == Label::TrueMention);
  CHECK_THROWS_AS(parse_temporality("past"), ParseError);
  CHECK_THROWS_AS(parse_label("yes"), ParseError);
}

TEST_CASE("splitmix64 reference outputs") {
  // Published first outputs for seed 0.
  SplitMix64 sm(0);
  CHECK(sm.next() == 0xe220a8397b1dcdafULL);
  CHECK(sm.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(sm.next() == 0x06c45d188009454fULL);
}

TEST_CASE("fnv1a64 reference outputs") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("xoshiro below stays in range and covers it") {
  Xoshiro256 rng(42);
  std::map<std::uint64_t, int> seen;
  for (int i = 0; i < 7000; ++i) {
    auto v = rng.below(7);
    REQUIRE(v < 7);
    seen[v]++;
  }
  CHECK(seen.size() == 7);
  for (auto& [v, n] : seen) CHECK(n > 800);
  CHECK(rng.below(1) == 0);

  Xoshiro256 a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("utf-8 decode and encode") {
  const std::string s = "na\xc3\xafve \xe2\x82\xac \xf0\x9f\x98\x80";  // naïve € 😀
  const auto u = unicode::decode(s);
  CHECK(u.size() == 9);
  CHECK(u[2] == U'ï');
  CHECK(u[8] == U'\U0001F600');
  CHECK(unicode::encode(u) == s);
  CHECK(unicode::length(s) == 9);
  CHECK(unicode::is_valid(s));
  CHECK_FALSE(unicode::is_valid("\xc3"));
  CHECK_FALSE(unicode::is_valid("\xed\xa0\x80"));  // surrogate
  CHECK(unicode::decode("a\xff" "b") == U"a�b");
}

TEST_CASE("character classes") {
  CHECK(unicode::is_word(U'a'));
  CHECK(unicode::is_word(U'7'));
  CHECK(unicode::is_word(U'é'));
  CHECK(unicode::is_word(U'́'));  // combining acute
  CHECK(unicode::is_space(U' '));
  CHECK(unicode::is_space(U' '));
  CHECK(unicode::is_punct(U'-'));
  CHECK(unicode::is_punct(U'.'));
  CHECK_FALSE(unicode::is_punct(U'x'));
}
