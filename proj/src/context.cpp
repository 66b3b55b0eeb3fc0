#include "comorbid/context.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "comorbid/error.hpp"
#include "embedded.hpp"

namespace comorbid::context {

namespace {

// Phrase -> token keys, e.g. "No evidence of" -> {"no", "evidence", "of"}.
std::vector<std::string> phrase_keys(std::string_view phrase) {
  std::vector<std::string> keys;
  for (const auto& tok : textproc::tokenize(phrase)) {
    if (!tok.punct && tok.norm.empty()) continue;
    keys.push_back(tok.key());
  }
  return keys;
}

std::string join(const std::vector<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) {
    if (!out.empty()) out += ' ';
    out += k;
  }
  return out;
}

class TomlArrayReader {
 public:
  explicit TomlArrayReader(std::string_view text) : text_(text) {}

  std::map<std::string, std::vector<std::string>> read() {
    std::map<std::string, std::vector<std::string>> out;
    while (true) {
      skip_blank();
      if (pos_ >= text_.size()) return out;
      const auto key_line = line_;
      std::string key = identifier();
      skip_blank();
      expect('=');
      skip_blank();
      expect('[');
      std::vector<std::string> values;
      while (true) {
        skip_blank();
        if (peek() == ']') {
          ++pos_;
          break;
        }
        values.push_back(string_literal());
        skip_blank();
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          fail("expected ',' or ']'");
        }
      }
      if (!out.emplace(key, std::move(values)).second) throw ParseError("duplicate key '" + key + "'", key_line);
    }
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_); }

  void skip_blank() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        return;
      }
    }
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string identifier() {
    std::string id;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-') {
        id.push_back(c);
        ++pos_;
      } else {
        break;
      }
    }
    if (id.empty()) fail("expected a key");
    return id;
  }

  std::string string_literal() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n') fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 't': out.push_back('\t'); break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out.push_back(c);
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

std::size_t count_words(std::span<const textproc::Token> tokens, std::size_t from, std::size_t to) {
  std::size_t n = 0;
  for (std::size_t i = from; i < to; ++i)
    if (!tokens[i].punct) ++n;
  return n;
}

struct MentionTokens {
  std::size_t first = 0;
  std::size_t last = 0;  // exclusive
};

MentionTokens locate(const Mention& mention, std::span<const textproc::Token> tokens) {
  MentionTokens r{tokens.size(), tokens.size()};
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].end > mention.start && tokens[i].start < mention.end) {
      if (r.first == tokens.size()) r.first = i;
      r.last = i + 1;
    }
  }
  if (r.first == tokens.size()) {
    // Mention outside the sentence: nothing can be in scope.
    r.first = r.last = tokens.size();
  }
  return r;
}

TriggerHit hit_of(const TriggerMatcher::Occurrence& occ, std::span<const textproc::Token> tokens) {
  return TriggerHit{*occ.phrase, tokens[occ.first_token].start,
                    tokens[occ.first_token + occ.token_count - 1].end};
}

bool blocked(const std::vector<TriggerMatcher::Occurrence>& occs, std::size_t from, std::size_t to) {
  for (const auto& o : occs)
    if (o.kind == TriggerKind::Terminator && o.first_token >= from && o.first_token + o.token_count <= to)
      return true;
  return false;
}

}  // namespace

const TriggerSet& TriggerSet::defaults() {
  static const TriggerSet set = parse(embedded::triggers);
  return set;
}

TriggerSet TriggerSet::parse(std::string_view text) {
  auto lists = TomlArrayReader(text).read();
  static constexpr std::string_view kNames[] = {"negation_pre", "negation_post", "historic", "terminators"};
  for (const auto& [key, _] : lists)
    if (std::find(std::begin(kNames), std::end(kNames), key) == std::end(kNames))
      throw ParseError("unknown trigger list '" + key + "'");

  TriggerSet set;
  std::vector<std::string>* targets[] = {&set.negation_pre, &set.negation_post, &set.historic,
                                         &set.terminators};
  std::map<std::string, std::string_view> owner;
  for (std::size_t i = 0; i < 4; ++i) {
    auto it = lists.find(std::string(kNames[i]));
    if (it == lists.end()) throw ParseError("missing trigger list '" + std::string(kNames[i]) + "'");
    std::set<std::string> seen;
    for (const auto& phrase : it->second) {
      const auto keys = phrase_keys(phrase);
      if (keys.empty()) throw ValidationError("trigger '" + phrase + "' is empty after normalization");
      auto norm = join(keys);
      if (!seen.insert(norm).second) continue;
      if (auto [o, inserted] = owner.emplace(norm, kNames[i]); !inserted)
        throw ValidationError("trigger '" + norm + "' appears in both " + std::string(o->second) +
                              " and " + std::string(kNames[i]));
      targets[i]->push_back(std::move(norm));
    }
  }
  return set;
}

TriggerSet TriggerSet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trigger file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

TriggerMatcher::TriggerMatcher(const TriggerSet& triggers, std::size_t window) : window_(window) {
  if (window == 0) throw ArgumentError("trigger window must be positive");
  const std::pair<const std::vector<std::string>*, TriggerKind> lists[] = {
      {&triggers.negation_pre, TriggerKind::NegationPre},
      {&triggers.negation_post, TriggerKind::NegationPost},
      {&triggers.historic, TriggerKind::Historic},
      {&triggers.terminators, TriggerKind::Terminator}};
  for (const auto& [phrases, kind] : lists) {
    for (const auto& phrase : *phrases) {
      auto keys = phrase_keys(phrase);
      if (keys.empty()) throw ValidationError("empty trigger phrase");
      entries_.push_back(Entry{std::move(keys), kind, phrase});
    }
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) by_first_key_[entries_[i].keys.front()].push_back(i);
}

std::vector<TriggerMatcher::Occurrence> TriggerMatcher::scan(std::span<const textproc::Token> tokens,
                                                            std::size_t skip_begin,
                                                            std::size_t skip_end) const {
  auto skipped = [&](std::size_t i) { return i >= skip_begin && i < skip_end; };
  std::vector<Occurrence> found;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (skipped(i)) continue;
    auto it = by_first_key_.find(tokens[i].key());
    if (it == by_first_key_.end()) continue;
    for (auto e : it->second) {
      const auto& entry = entries_[e];
      const auto n = entry.keys.size();
      if (i + n > tokens.size()) continue;
      bool ok = true;
      for (std::size_t k = 0; k < n && ok; ++k) ok = !skipped(i + k) && tokens[i + k].key() == entry.keys[k];
      if (ok) found.push_back(Occurrence{entry.kind, &entry.phrase, i, n});
    }
  }
  std::sort(found.begin(), found.end(), [](const Occurrence& a, const Occurrence& b) {
    if (a.token_count != b.token_count) return a.token_count > b.token_count;
    return a.first_token < b.first_token;
  });
  std::vector<Occurrence> kept;
  std::vector<bool> used(tokens.size(), false);
  for (const auto& o : found) {
    bool free = true;
    for (std::size_t k = 0; k < o.token_count && free; ++k) free = !used[o.first_token + k];
    if (!free) continue;
    for (std::size_t k = 0; k < o.token_count; ++k) used[o.first_token + k] = true;
    kept.push_back(o);
  }
  std::sort(kept.begin(), kept.end(),
            [](const Occurrence& a, const Occurrence& b) { return a.first_token < b.first_token; });
  return kept;
}

NegationResult detect_negation(const Mention& mention, std::span<const textproc::Token> tokens,
                               const TriggerMatcher& triggers) {
  NegationResult result;
  const auto span = locate(mention, tokens);
  if (span.first == span.last) return result;
  const auto occs = triggers.scan(tokens, span.first, span.last);
  for (const auto& o : occs) {
    const auto o_end = o.first_token + o.token_count;
    if (o.kind == TriggerKind::NegationPre && o_end <= span.first) {
      if (count_words(tokens, o_end, span.first) < triggers.window() && !blocked(occs, o_end, span.first))
        result.fired.push_back(hit_of(o, tokens));
    } else if (o.kind == TriggerKind::NegationPost && o.first_token >= span.last) {
      if (count_words(tokens, span.last, o.first_token) < triggers.window() &&
          !blocked(occs, span.last, o.first_token))
        result.fired.push_back(hit_of(o, tokens));
    }
  }
  result.negated = !result.fired.empty();
  return result;
}

TemporalityResult detect_temporality(const Mention& mention, std::span<const textproc::Token> tokens,
                                     const TriggerMatcher& triggers) {
  TemporalityResult result;
  const auto span = locate(mention, tokens);
  if (span.first == span.last) return result;
  const auto occs = triggers.scan(tokens, span.first, span.last);
  for (const auto& o : occs) {
    const auto o_end = o.first_token + o.token_count;
    if (o.kind == TriggerKind::Historic && o_end <= span.first &&
        count_words(tokens, o_end, span.first) < triggers.window() && !blocked(occs, o_end, span.first))
      result.fired.push_back(hit_of(o, tokens));
  }
  if (!result.fired.empty()) result.temporality = Temporality::Historic;
  return result;
}

void attribute(Mention& mention, std::span<const textproc::Token> tokens, const TriggerMatcher& triggers) {
  auto neg = detect_negation(mention, tokens, triggers);
  auto tmp = detect_temporality(mention, tokens, triggers);
  MentionAttributes attrs;
  attrs.negated = neg.negated;
  attrs.temporality = tmp.temporality;
  attrs.triggers = std::move(neg.fired);
  attrs.triggers.insert(attrs.triggers.end(), tmp.fired.begin(), tmp.fired.end());
  std::sort(attrs.triggers.begin(), attrs.triggers.end(),
            [](const TriggerHit& a, const TriggerHit& b) { return a.start < b.start; });
  mention.attributes = std::move(attrs);
}

}  // namespace comorbid::context
