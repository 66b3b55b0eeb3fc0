#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comorbid/textproc.hpp"
#include "comorbid/types.hpp"

namespace comorbid::context {

enum class TriggerKind : std::uint8_t { NegationPre, NegationPost, Historic, Terminator };

/// Four phrase lists, stored normalized. Lists must be disjoint.
struct TriggerSet {
  std::vector<std::string> negation_pre;
  std::vector<std::string> negation_post;
  std::vector<std::string> historic;
  std::vector<std::string> terminators;

  /// The bundled `data/triggers.toml`.
  static const TriggerSet& defaults();
  /// TOML subset: `name = [ "phrase", ... ]` with `#` comments. Unknown
  /// keys, missing lists or overlapping lists are errors.
  static TriggerSet parse(std::string_view text);
  static TriggerSet load(const std::filesystem::path& path);
};

/// Default scope in word tokens (punctuation is not counted).
inline constexpr std::size_t kDefaultWindow = 6;

/// TriggerSet compiled to token-key sequences for scanning sentences.
class TriggerMatcher {
 public:
  explicit TriggerMatcher(const TriggerSet& triggers, std::size_t window = kDefaultWindow);

  struct Occurrence {
    TriggerKind kind;
    const std::string* phrase;
    std::size_t first_token;
    std::size_t token_count;
  };

  /// Non-overlapping trigger occurrences in `tokens`, longest match first,
  /// leftmost on ties, skipping tokens in [skip_begin, skip_end).
  std::vector<Occurrence> scan(std::span<const textproc::Token> tokens, std::size_t skip_begin,
                               std::size_t skip_end) const;

  std::size_t window() const { return window_; }

 private:
  struct Entry {
    std::vector<std::string> keys;
    TriggerKind kind;
    std::string phrase;
  };
  std::vector<Entry> entries_;
  std::map<std::string, std::vector<std::size_t>> by_first_key_;
  std::size_t window_;
};

struct NegationResult {
  bool negated = false;
  std::vector<TriggerHit> fired;
};

/// Pre-triggers negate a mention starting within the next `window` word
/// tokens, post-triggers one ending within the previous `window`; a
/// terminator between trigger and mention blocks the scope.
NegationResult detect_negation(const Mention& mention, std::span<const textproc::Token> sentence_tokens,
                               const TriggerMatcher& triggers);

struct TemporalityResult {
  Temporality temporality = Temporality::Recent;
  std::vector<TriggerHit> fired;
};

/// Historic iff a historic trigger precedes the mention within the window
/// with no terminator between them.
TemporalityResult detect_temporality(const Mention& mention,
                                     std::span<const textproc::Token> sentence_tokens,
                                     const TriggerMatcher& triggers);

/// Runs both detectors and fills `mention.attributes`.
void attribute(Mention& mention, std::span<const textproc::Token> sentence_tokens,
               const TriggerMatcher& triggers);

/// Recent and not negated.
constexpr bool is_relevant(const MentionAttributes& attrs) {
  return !attrs.negated && attrs.temporality == Temporality::Recent;
}

}  // namespace comorbid::context
