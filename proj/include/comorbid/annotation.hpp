#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "comorbid/types.hpp"

namespace comorbid::annotation {

/// One annotator's verdict on one extracted mention.
struct AnnotationRecord {
  MentionRef mention;
  std::string annotator_id;
  bool correct = false;
  bool negated = false;
  Temporality temporality = Temporality::Recent;
  std::string timestamp;
  bool operator==(const AnnotationRecord&) const = default;
};

/// One JSON object per line. See docs/formats.md.
nlohmann::json to_json(const AnnotationRecord& record);
AnnotationRecord record_from_json(const nlohmann::json& j);
std::vector<AnnotationRecord> parse_records(std::string_view jsonl);
std::vector<AnnotationRecord> load_records(const std::filesystem::path& path);
std::string serialize_records(std::span<const AnnotationRecord> records);

struct StoredRecord {
  AnnotationRecord record;
  /// Number of accepted writes for this (mention, annotator) key.
  std::uint64_t version = 0;
};

/// Verdict store keyed by (mention, annotator).
///
/// Writes are serialized and upsert (last write wins). When a log path is
/// given every accepted write is appended to it, and reopening replays the
/// log; `compact()` rewrites the log with only the live records.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::set<MentionRef> mentions,
                           std::optional<std::filesystem::path> log = std::nullopt);

  /// Throws ReferenceError for an unknown mention. With `expected_version`,
  /// throws ConflictError unless it equals the stored version (0 when
  /// absent). Returns the new version.
  std::uint64_t record(const AnnotationRecord& record,
                       std::optional<std::uint64_t> expected_version = std::nullopt);

  std::size_t size() const;
  std::uint64_t version_of(const MentionRef& mention, const std::string& annotator) const;
  bool has_mention(const MentionRef& mention) const { return mentions_.count(mention) > 0; }
  const std::set<MentionRef>& mentions() const { return mentions_; }

  /// Live records ordered by (mention, annotator).
  std::vector<AnnotationRecord> records() const;
  std::vector<StoredRecord> stored() const;
  std::size_t count_for(const std::string& annotator) const;

  void compact();

 private:
  using Key = std::pair<MentionRef, std::string>;
  void append_to_log(const StoredRecord& stored);

  std::set<MentionRef> mentions_;
  std::optional<std::filesystem::path> log_;
  std::map<Key, StoredRecord> records_;
  mutable std::shared_mutex mutex_;
};

struct GoldInstance {
  MentionRef mention;
  Label label = Label::NotMention;
  /// Set only where every annotator agreed on the attribute.
  std::optional<bool> gold_negated;
  std::optional<Temporality> gold_temporality;
  bool operator==(const GoldInstance&) const = default;
};

struct GoldResult {
  std::vector<GoldInstance> gold;
  /// Eligible mentions with a split `correct` verdict.
  std::size_t discarded = 0;
  /// Mentions seen by fewer than two annotators.
  std::size_t under_annotated = 0;
};

/// Unanimous `correct` verdicts among mentions with at least two annotators.
/// For the same (mention, annotator) the last record in input order counts.
GoldResult build_gold(std::span<const AnnotationRecord> records);

nlohmann::json to_json(const GoldInstance& gold);
GoldInstance gold_from_json(const nlohmann::json& j);
std::string serialize_gold(std::span<const GoldInstance> gold);
std::vector<GoldInstance> parse_gold(std::string_view jsonl);
std::vector<GoldInstance> load_gold(const std::filesystem::path& path);

/// 2x2 counts over paired `correct` verdicts of annotators A and B.
struct AgreementTable {
  std::uint64_t both_true = 0;
  std::uint64_t a_only = 0;  // A true, B false
  std::uint64_t b_only = 0;  // A false, B true
  std::uint64_t both_false = 0;

  std::uint64_t total() const { return both_true + a_only + b_only + both_false; }
  bool operator==(const AgreementTable&) const = default;
};

using AnnotatorPair = std::pair<std::string, std::string>;
using ChapterMap = std::map<Cui, ChapterId>;

/// Counts over mentions annotated by both annotators, optionally restricted
/// to one chapter (mentions whose CUI is not in `chapters` are then skipped).
/// Throws EmptyScopeError when nothing is shared.
AgreementTable contingency(std::span<const AnnotationRecord> records, const AnnotatorPair& pair,
                           std::optional<ChapterId> chapter = std::nullopt,
                           const ChapterMap& chapters = {});

/// (p_o - p_e) / (1 - p_e). Throws ArgumentError for an empty table and
/// DegenerateMarginalsError when p_e == 1.
double cohens_kappa(const AgreementTable& table);

struct PairKappa {
  AnnotatorPair pair;
  AgreementTable table;
  double kappa = 0.0;
};

struct ChapterKappa {
  ChapterId chapter;
  /// Mean over `pairs`; absent when no pair was computable.
  std::optional<double> kappa;
  std::vector<PairKappa> pairs;
};

struct KappaReport {
  /// Every chapter seen in the records, in chapter order.
  std::vector<ChapterKappa> chapters;
  /// Unweighted mean of the present chapter values.
  std::optional<double> average;
};

/// Per chapter: kappa per pair where computable, averaged over pairs.
/// Pairs with no shared mentions or degenerate marginals are left out.
KappaReport kappa_report(std::span<const AnnotationRecord> records,
                         std::span<const AnnotatorPair> pairs, const ChapterMap& chapters);

/// Every unordered pair of annotators present in `records`, sorted.
std::vector<AnnotatorPair> annotator_pairs(std::span<const AnnotationRecord> records);

nlohmann::json to_json(const KappaReport& report);

}  // namespace comorbid::annotation
