#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace comorbid {

/// UMLS Concept Unique Identifier, `C` followed by seven digits.
class Cui {
 public:
  Cui() = default;
  /// Throws ValidationError unless `text` matches `C[0-9]{7}`.
  explicit Cui(std::string_view text);

  static bool is_valid(std::string_view text);

  const std::string& str() const { return value_; }
  auto operator<=>(const Cui&) const = default;

 private:
  std::string value_;
};

/// Three-character ICD-10 category such as `A00`.
class IcdCode {
 public:
  IcdCode() = default;
  /// Throws ValidationError unless `text` matches `[A-Z][0-9][0-9]`.
  explicit IcdCode(std::string_view text);

  static bool is_valid(std::string_view text);

  const std::string& str() const { return value_; }
  /// Dense ordinal: letter * 100 + number, so A00 == 0 and Z99 == 2599.
  int ordinal() const;
  static IcdCode from_ordinal(int ordinal);

  auto operator<=>(const IcdCode&) const = default;

 private:
  std::string value_;
};

/// ICD-10 chapter, stored as its number and printed as a Roman numeral.
class ChapterId {
 public:
  ChapterId() = default;
  explicit ChapterId(int number);
  /// Parses "I" ... "XXII". Throws ValidationError otherwise.
  static ChapterId parse(std::string_view roman);

  int number() const { return number_; }
  std::string roman() const;

  auto operator<=>(const ChapterId&) const = default;

 private:
  int number_ = 0;
};

enum class Temporality : std::uint8_t { Recent, Historic };
enum class Label : std::uint8_t { NotMention, TrueMention };

std::string_view to_string(Temporality t);
std::string_view to_string(Label l);
/// Throws ParseError on unknown names.
Temporality parse_temporality(std::string_view text);
Label parse_label(std::string_view text);

/// A trigger phrase that fired for a mention, with its character span.
struct TriggerHit {
  std::string trigger;
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const TriggerHit&) const = default;
};

struct MentionAttributes {
  bool negated = false;
  Temporality temporality = Temporality::Recent;
  /// Non-empty iff negated or historic.
  std::vector<TriggerHit> triggers;
  bool operator==(const MentionAttributes&) const = default;
};

/// A located concept occurrence. Offsets count Unicode scalar values.
struct Mention {
  std::string doc_id;
  Cui cui;
  IcdCode icd_code;
  ChapterId chapter;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string matched_text;
  std::size_t sentence_index = 0;
  MentionAttributes attributes;
  std::optional<double> filter_score;

  bool operator==(const Mention&) const = default;
};

/// Identity of a mention across extraction, annotation and gold files.
struct MentionRef {
  std::string doc_id;
  std::size_t start = 0;
  std::size_t end = 0;
  Cui cui;

  auto operator<=>(const MentionRef&) const = default;
};

inline MentionRef ref_of(const Mention& m) {
  return MentionRef{m.doc_id, m.start, m.end, m.cui};
}

}  // namespace comorbid
