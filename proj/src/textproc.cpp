#include "comorbid/textproc.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <fstream>
#include <sstream>

#include "comorbid/error.hpp"
#include "comorbid/unicode.hpp"
#include "embedded.hpp"
#include "text_util.hpp"

namespace comorbid::textproc {

namespace {

bool is_terminator(char32_t c) { return c == U'.' || c == U'?' || c == U'!'; }

char32_t lower(char32_t c) {
  if (c < 0x80) return (c >= U'A' && c <= U'Z') ? c + 32 : c;
  return static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
}

std::string strip_ends(std::string_view s) {
  const auto text = unicode::decode(s);
  std::size_t b = 0, e = text.size();
  while (b < e && !unicode::is_word(text[b])) ++b;
  while (e > b && !unicode::is_word(text[e - 1])) --e;
  if (b == 0 && e == text.size()) return std::string(s);
  return unicode::encode(std::u32string_view(text).substr(b, e - b));
}

std::string casefold_nfkc(std::string_view s) {
  bool ascii = true;
  for (char c : s)
    if (static_cast<unsigned char>(c) >= 0x80) {
      ascii = false;
      break;
    }
  if (ascii) {
    std::string out(s);
    for (auto& c : out)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    return out;
  }
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc_cf = icu::Normalizer2::getNFKCCasefoldInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFKC_Casefold normalizer unavailable");
  const auto input = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  const auto folded = nfkc_cf->normalize(input, status);
  if (U_FAILURE(status)) throw Error("ICU normalization failed");
  std::string out;
  folded.toUTF8String(out);
  return out;
}

}  // namespace

const AbbreviationList& AbbreviationList::defaults() {
  static const AbbreviationList list = parse(embedded::abbreviations);
  return list;
}

AbbreviationList AbbreviationList::parse(std::string_view text) {
  std::set<std::u32string, std::less<>> entries;
  for (auto line : detail::split_lines(text)) {
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::u32string entry = unicode::decode(line);
    for (auto& c : entry) c = lower(c);
    entries.insert(std::move(entry));
  }
  return AbbreviationList(std::move(entries));
}

AbbreviationList AbbreviationList::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open abbreviation list " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool AbbreviationList::contains(std::u32string_view lowercase_word) const {
  return entries_.find(lowercase_word) != entries_.end();
}

std::vector<Sentence> segment_sentences(std::u32string_view text, const AbbreviationList& abbrev) {
  std::vector<Sentence> out;
  const std::size_t n = text.size();

  auto emit = [&](std::size_t b, std::size_t e) {
    while (b < e && unicode::is_space(text[b])) ++b;
    while (e > b && unicode::is_space(text[e - 1])) --e;
    if (b < e) out.push_back(Sentence{out.size(), b, e});
  };

  // True when the '.' at `dot` closes a listed abbreviation.
  auto closes_abbreviation = [&](std::size_t dot) {
    std::size_t b = dot;
    while (b > 0 && !unicode::is_space(text[b - 1])) --b;
    std::u32string word;
    word.reserve(dot + 1 - b);
    for (std::size_t i = b; i <= dot; ++i) word.push_back(lower(text[i]));
    return abbrev.contains(word);
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < n) {
    const char32_t c = text[i];
    if (c == U'\n') {
      emit(start, i);
      while (i < n && (text[i] == U'\n' || text[i] == U'\r')) ++i;
      start = i;
      continue;
    }
    if (is_terminator(c)) {
      std::size_t j = i;
      while (j < n && is_terminator(text[j])) ++j;
      const bool at_break = j == n || unicode::is_space(text[j]);
      const bool abbreviation = j - i == 1 && c == U'.' && closes_abbreviation(i);
      if (at_break && !abbreviation) {
        emit(start, j);
        start = j;
      }
      i = j;
      continue;
    }
    ++i;
  }
  emit(start, n);
  return out;
}

std::vector<Sentence> segment_sentences(std::string_view utf8, const AbbreviationList& abbrev) {
  const auto text = unicode::decode(utf8);
  return segment_sentences(std::u32string_view(text), abbrev);
}

std::vector<Token> tokenize(std::u32string_view text, const Sentence& sentence) {
  std::vector<Token> out;
  const std::size_t end = std::min(sentence.end, text.size());
  std::size_t i = sentence.start;
  while (i < end) {
    const char32_t c = text[i];
    if (unicode::is_space(c)) {
      ++i;
      continue;
    }
    Token tok;
    tok.start = i;
    if (unicode::is_word(c)) {
      while (i < end && unicode::is_word(text[i])) ++i;
    } else {
      ++i;
      tok.punct = true;
    }
    tok.end = i;
    tok.surface = unicode::encode(text.substr(tok.start, tok.end - tok.start));
    if (!tok.punct) tok.norm = normalize(tok.surface);
    out.push_back(std::move(tok));
  }
  return out;
}

std::vector<Token> tokenize(std::string_view utf8, const Sentence& sentence) {
  const auto text = unicode::decode(utf8);
  return tokenize(std::u32string_view(text), sentence);
}

std::vector<Token> tokenize(std::string_view utf8) {
  const auto text = unicode::decode(utf8);
  return tokenize(std::u32string_view(text), Sentence{0, 0, text.size()});
}

std::string normalize(std::string_view surface) {
  std::string current(surface);
  // NFKC_Casefold is idempotent on its own; stripping can expose a new
  // string boundary, so iterate to a fixed point.
  for (int round = 0; round < 8; ++round) {
    auto next = strip_ends(casefold_nfkc(current));
    if (next == current) return next;
    current = std::move(next);
  }
  return current;
}

AnalyzedText analyze(std::string_view utf8, const AbbreviationList& abbrev) {
  AnalyzedText out;
  out.text = unicode::decode(utf8);
  out.sentences = segment_sentences(std::u32string_view(out.text), abbrev);
  out.tokens.reserve(out.sentences.size());
  for (const auto& s : out.sentences) out.tokens.push_back(tokenize(std::u32string_view(out.text), s));
  return out;
}

}  // namespace comorbid::textproc
