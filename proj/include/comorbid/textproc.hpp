#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace comorbid::textproc {

/// Half-open span of Unicode scalar offsets.
struct Sentence {
  std::size_t index = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Sentence&) const = default;
};

struct Token {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;
  std::string norm;
  /// Single punctuation character (its norm is empty).
  bool punct = false;

  /// Key used for dictionary and trigger matching: the norm, or the surface
  /// for punctuation.
  const std::string& key() const { return punct ? surface : norm; }
  bool operator==(const Token&) const = default;
};

/// Lowercase tokens that end in `.` and must not end a sentence.
class AbbreviationList {
 public:
  AbbreviationList() = default;
  explicit AbbreviationList(std::set<std::u32string, std::less<>> entries)
      : entries_(std::move(entries)) {}

  /// The bundled `data/abbrev.txt`.
  static const AbbreviationList& defaults();
  /// One entry per line; blank lines and `#` comments ignored.
  static AbbreviationList parse(std::string_view text);
  static AbbreviationList load(const std::filesystem::path& path);

  bool contains(std::u32string_view lowercase_word) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::set<std::u32string, std::less<>> entries_;
};

/// Splits on `.`, `?` and `!` when followed by whitespace or end of text,
/// and on every run of newlines. A `.` closing an abbreviation does not split.
/// Spans are trimmed of whitespace; empty spans are dropped.
std::vector<Sentence> segment_sentences(std::u32string_view text,
                                        const AbbreviationList& abbrev = AbbreviationList::defaults());
std::vector<Sentence> segment_sentences(std::string_view utf8,
                                        const AbbreviationList& abbrev = AbbreviationList::defaults());

/// Maximal runs of word characters are tokens; each punctuation character is
/// its own token; whitespace separates.
std::vector<Token> tokenize(std::u32string_view text, const Sentence& sentence);
std::vector<Token> tokenize(std::string_view utf8, const Sentence& sentence);
/// Tokenizes the whole string.
std::vector<Token> tokenize(std::string_view utf8);

/// NFKC case fold, then strip leading and trailing punctuation. Idempotent.
std::string normalize(std::string_view surface);

/// Document text decoded once, with its sentences and per-sentence tokens.
struct AnalyzedText {
  std::u32string text;
  std::vector<Sentence> sentences;
  std::vector<std::vector<Token>> tokens;
};

AnalyzedText analyze(std::string_view utf8,
                     const AbbreviationList& abbrev = AbbreviationList::defaults());

}  // namespace comorbid::textproc
