#include "comorbid/matcher.hpp"

#include <algorithm>
#include <map>

#include "comorbid/error.hpp"
#include "comorbid/unicode.hpp"
#include "text_util.hpp"

namespace comorbid::matcher {

namespace {

constexpr std::string_view kIndexHeader = "# comorbid match index v1";

std::vector<std::string> term_keys(std::string_view term, const Cui& cui) {
  const auto norm = textproc::normalize(term);
  if (norm.empty())
    throw ValidationError("term '" + std::string(term) + "' of " + cui.str() +
                          " is empty after normalization");
  std::vector<std::string> keys;
  for (const auto& tok : textproc::tokenize(norm)) keys.push_back(tok.key());
  return keys;
}

}  // namespace

void MatchIndex::insert(Pattern pattern) {
  std::uint32_t node = 0;
  for (const auto& key : pattern.keys) {
    auto it = nodes_[node].children.find(key);
    if (it == nodes_[node].children.end()) {
      const auto child = static_cast<std::uint32_t>(nodes_.size());
      nodes_[node].children.emplace(key, child);
      nodes_.emplace_back();
      node = child;
    } else {
      node = it->second;
    }
  }
  auto& slot = nodes_[node].pattern;
  if (slot < 0) {
    slot = static_cast<std::int32_t>(patterns_.size());
    patterns_.push_back(std::move(pattern));
    return;
  }
  auto& existing = patterns_[static_cast<std::size_t>(slot)];
  if (existing.cui == pattern.cui) return;
  ++ambiguous_;
  if (pattern.cui < existing.cui) existing.cui = pattern.cui;
}

MatchIndex MatchIndex::build(const terminology::Lexicon& lexicon) {
  MatchIndex index;
  for (const auto& entry : lexicon.entries()) {
    index.concepts_.emplace(entry.cui, entry.icd_code);
    index.insert(Pattern{term_keys(entry.preferred_term, entry.cui), entry.cui});
    for (const auto& syn : entry.synonyms) index.insert(Pattern{term_keys(syn, entry.cui), entry.cui});
  }
  return index;
}

MatchIndex MatchIndex::from_patterns(std::span<const Pattern> patterns,
                                     const std::map<Cui, IcdCode>& concepts) {
  MatchIndex index;
  index.concepts_ = concepts;
  for (const auto& p : patterns) {
    if (p.keys.empty()) throw ValidationError("empty pattern for " + p.cui.str());
    if (!concepts.count(p.cui)) throw ValidationError("pattern CUI " + p.cui.str() + " has no ICD code");
    index.insert(p);
  }
  return index;
}

std::string MatchIndex::serialize() const {
  std::string out(kIndexHeader);
  out += '\n';
  for (const auto& p : patterns_) {
    out += p.cui.str();
    out += '\t';
    out += concepts_.at(p.cui).str();
    out += '\t';
    for (std::size_t i = 0; i < p.keys.size(); ++i) {
      if (i) out += ' ';
      out += p.keys[i];
    }
    out += '\n';
  }
  return out;
}

MatchIndex MatchIndex::deserialize(std::string_view text) {
  auto lines = detail::split_lines(text);
  if (lines.empty() || !lines[0].starts_with("# comorbid match index "))
    throw ParseError("not a match index file", 1);
  if (lines[0] != kIndexHeader)
    throw VersionError("match index version mismatch: expected '" + std::string(kIndexHeader) +
                       "', found '" + std::string(lines[0]) + "'");
  MatchIndex index;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = detail::split(lines[i], '\t');
    if (fields.size() != 3 || fields[2].empty()) throw ParseError("malformed index row", i + 1);
    try {
      Cui cui(fields[0]);
      IcdCode icd(fields[1]);
      auto [it, inserted] = index.concepts_.emplace(cui, icd);
      if (!inserted && it->second != icd) throw ParseError("conflicting ICD codes for " + cui.str(), i + 1);
      Pattern p{{}, cui};
      for (auto key : detail::split(fields[2], ' ')) p.keys.emplace_back(key);
      index.insert(std::move(p));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), i + 1);
    }
  }
  return index;
}

std::vector<Candidate> resolve_overlaps(std::vector<Candidate> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    const auto la = a.end - a.start, lb = b.end - b.start;
    if (la != lb) return la > lb;
    if (a.start != b.start) return a.start < b.start;
    return a.pattern < b.pattern;
  });
  std::map<std::size_t, std::size_t> accepted;  // start -> end
  std::vector<Candidate> out;
  for (auto& c : candidates) {
    auto next = accepted.lower_bound(c.start);
    if (next != accepted.end() && next->first < c.end) continue;
    if (next != accepted.begin() && std::prev(next)->second > c.start) continue;
    accepted.emplace(c.start, c.end);
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(),
            [](const Candidate& a, const Candidate& b) { return a.start < b.start; });
  return out;
}

std::vector<Mention> find_mentions(const std::string& doc_id, const textproc::AnalyzedText& text,
                                   const MatchIndex& index) {
  if (index.empty()) return {};
  std::vector<Candidate> candidates;
  for (std::size_t s = 0; s < text.tokens.size(); ++s) {
    const auto& tokens = text.tokens[s];
    for (std::size_t b = 0; b < tokens.size(); ++b) {
      index.walk(tokens, b, [&](std::size_t len, std::int32_t pattern) {
        candidates.push_back(Candidate{tokens[b].start, tokens[b + len - 1].end, s, b, len, pattern});
      });
    }
  }

  std::vector<Mention> out;
  for (const auto& c : resolve_overlaps(std::move(candidates))) {
    const auto& pattern = index.patterns()[static_cast<std::size_t>(c.pattern)];
    Mention m;
    m.doc_id = doc_id;
    m.cui = pattern.cui;
    m.icd_code = index.icd_code(pattern.cui);
    m.chapter = terminology::chapter_of(m.icd_code).id;
    m.start = c.start;
    m.end = c.end;
    m.matched_text = unicode::encode(std::u32string_view(text.text).substr(c.start, c.end - c.start));
    m.sentence_index = c.sentence;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace comorbid::matcher
