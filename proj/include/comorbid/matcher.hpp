#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "comorbid/terminology.hpp"
#include "comorbid/textproc.hpp"
#include "comorbid/types.hpp"

namespace comorbid::matcher {

/// A normalized token sequence and the concept it denotes.
struct Pattern {
  std::vector<std::string> keys;
  Cui cui;
  bool operator==(const Pattern&) const = default;
};

/// Token-level trie over every preferred term and synonym of a lexicon.
/// Immutable once built.
class MatchIndex {
 public:
  MatchIndex() { nodes_.emplace_back(); }

  /// Throws ValidationError for a term that normalizes to nothing.
  static MatchIndex build(const terminology::Lexicon& lexicon);
  /// Builds from explicit patterns. `concepts` supplies ICD code and chapter
  /// for each CUI referenced.
  static MatchIndex from_patterns(std::span<const Pattern> patterns,
                                  const std::map<Cui, IcdCode>& concepts);

  std::size_t size() const { return patterns_.size(); }
  bool empty() const { return patterns_.empty(); }
  /// Patterns in insertion order, deduplicated.
  const std::vector<Pattern>& patterns() const { return patterns_; }
  /// Number of distinct token sequences that two or more CUIs claimed. The
  /// smallest CUI keeps the pattern.
  std::size_t ambiguous() const { return ambiguous_; }

  const IcdCode& icd_code(const Cui& cui) const { return concepts_.at(cui); }

  /// Length (in tokens) and pattern id of every pattern starting at `begin`.
  template <typename Fn>
  void walk(std::span<const textproc::Token> tokens, std::size_t begin, Fn&& on_match) const {
    std::uint32_t node = 0;
    for (std::size_t i = begin; i < tokens.size(); ++i) {
      auto it = nodes_[node].children.find(tokens[i].key());
      if (it == nodes_[node].children.end()) return;
      node = it->second;
      if (nodes_[node].pattern >= 0) on_match(i + 1 - begin, nodes_[node].pattern);
    }
  }

  /// Text form: a version line then `cui<TAB>icd_code<TAB>key key ...` per
  /// pattern. Keys never contain whitespace.
  std::string serialize() const;
  /// Throws ParseError or VersionError.
  static MatchIndex deserialize(std::string_view text);

 private:
  struct Node {
    std::unordered_map<std::string, std::uint32_t> children;
    std::int32_t pattern = -1;
  };
  void insert(Pattern pattern);

  std::vector<Node> nodes_;
  std::vector<Pattern> patterns_;
  std::map<Cui, IcdCode> concepts_;
  std::size_t ambiguous_ = 0;
};

/// Candidate span before overlap resolution.
struct Candidate {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t sentence = 0;
  std::size_t first_token = 0;
  std::size_t token_count = 0;
  std::int32_t pattern = -1;
};

/// Keeps the longest candidates (by character length), earliest start on
/// ties, dropping any that overlap an accepted one. Output sorted by start.
std::vector<Candidate> resolve_overlaps(std::vector<Candidate> candidates);

/// Token-aligned, case-insensitive matches within sentence boundaries.
/// Attributes are left at their defaults.
std::vector<Mention> find_mentions(const std::string& doc_id, const textproc::AnalyzedText& text,
                                   const MatchIndex& index);

}  // namespace comorbid::matcher
