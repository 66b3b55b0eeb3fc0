#include "comorbid/annotation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "comorbid/error.hpp"
#include "text_util.hpp"

namespace comorbid::annotation {

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) throw ParseError(std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("field '") + name + "' has the wrong type");
  }
}

MentionRef ref_from_json(const nlohmann::json& j) {
  MentionRef ref;
  ref.doc_id = field<std::string>(j, "doc_id");
  ref.start = field<std::size_t>(j, "start");
  ref.end = field<std::size_t>(j, "end");
  try {
    ref.cui = Cui(field<std::string>(j, "cui"));
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  if (ref.end <= ref.start) throw ParseError("mention span is empty or inverted");
  return ref;
}

void ref_to_json(const MentionRef& ref, nlohmann::json& j) {
  j["doc_id"] = ref.doc_id;
  j["start"] = ref.start;
  j["end"] = ref.end;
  j["cui"] = ref.cui.str();
}

template <typename T, typename Fn>
std::vector<T> parse_lines(std::string_view jsonl, Fn&& from_json) {
  std::vector<T> out;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(jsonl)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

nlohmann::json to_json(const AnnotationRecord& record) {
  nlohmann::json j;
  ref_to_json(record.mention, j);
  j["annotator_id"] = record.annotator_id;
  j["correct"] = record.correct;
  j["negated"] = record.negated;
  j["temporality"] = to_string(record.temporality);
  j["timestamp"] = record.timestamp;
  return j;
}

AnnotationRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("annotation record must be an object");
  AnnotationRecord r;
  r.mention = ref_from_json(j);
  r.annotator_id = field<std::string>(j, "annotator_id");
  if (r.annotator_id.empty()) throw ParseError("annotator_id is empty");
  r.correct = field<bool>(j, "correct");
  r.negated = field<bool>(j, "negated");
  r.temporality = parse_temporality(field<std::string>(j, "temporality"));
  r.timestamp = j.contains("timestamp") ? field<std::string>(j, "timestamp") : std::string();
  return r;
}

std::vector<AnnotationRecord> parse_records(std::string_view jsonl) {
  return parse_lines<AnnotationRecord>(jsonl, record_from_json);
}

std::vector<AnnotationRecord> load_records(const std::filesystem::path& path) {
  return parse_records(read_all(path));
}

std::string serialize_records(std::span<const AnnotationRecord> records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

// ---------------------------------------------------------------------------

AnnotationStore::AnnotationStore(std::set<MentionRef> mentions, std::optional<std::filesystem::path> log)
    : mentions_(std::move(mentions)), log_(std::move(log)) {
  if (!log_ || !std::filesystem::exists(*log_)) return;
  const auto text = read_all(*log_);
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      StoredRecord stored{record_from_json(j), field<std::uint64_t>(j, "version")};
      if (!has_mention(stored.record.mention))
        throw ReferenceError("log line " + std::to_string(line_no) + " references an unknown mention");
      records_[Key{stored.record.mention, stored.record.annotator_id}] = std::move(stored);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

void AnnotationStore::append_to_log(const StoredRecord& stored) {
  if (!log_) return;
  std::ofstream out(*log_, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to annotation log " + log_->string());
  auto j = to_json(stored.record);
  j["version"] = stored.version;
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw IoError("write to annotation log failed");
}

std::uint64_t AnnotationStore::record(const AnnotationRecord& record,
                                      std::optional<std::uint64_t> expected_version) {
  if (!has_mention(record.mention))
    throw ReferenceError("no extracted mention " + record.mention.doc_id + " [" +
                         std::to_string(record.mention.start) + "," + std::to_string(record.mention.end) +
                         ") " + record.mention.cui.str());
  if (record.annotator_id.empty()) throw ArgumentError("annotator_id is empty");
  std::unique_lock lock(mutex_);
  Key key{record.mention, record.annotator_id};
  auto it = records_.find(key);
  const std::uint64_t current = it == records_.end() ? 0 : it->second.version;
  if (expected_version && *expected_version != current)
    throw ConflictError("version conflict: expected " + std::to_string(*expected_version) + ", current " +
                        std::to_string(current));
  StoredRecord stored{record, current + 1};
  append_to_log(stored);
  records_[key] = std::move(stored);
  return current + 1;
}

std::size_t AnnotationStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::uint64_t AnnotationStore::version_of(const MentionRef& mention, const std::string& annotator) const {
  std::shared_lock lock(mutex_);
  auto it = records_.find(Key{mention, annotator});
  return it == records_.end() ? 0 : it->second.version;
}

std::vector<AnnotationRecord> AnnotationStore::records() const {
  std::shared_lock lock(mutex_);
  std::vector<AnnotationRecord> out;
  out.reserve(records_.size());
  for (const auto& [_, s] : records_) out.push_back(s.record);
  return out;
}

std::vector<StoredRecord> AnnotationStore::stored() const {
  std::shared_lock lock(mutex_);
  std::vector<StoredRecord> out;
  for (const auto& [_, s] : records_) out.push_back(s);
  return out;
}

std::size_t AnnotationStore::count_for(const std::string& annotator) const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [key, _] : records_)
    if (key.second == annotator) ++n;
  return n;
}

void AnnotationStore::compact() {
  if (!log_) return;
  std::unique_lock lock(mutex_);
  auto tmp = *log_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    for (const auto& [_, s] : records_) {
      auto j = to_json(s.record);
      j["version"] = s.version;
      out << j.dump() << '\n';
    }
    if (!out) throw IoError("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, *log_);
}

// ---------------------------------------------------------------------------

GoldResult build_gold(std::span<const AnnotationRecord> records) {
  std::map<MentionRef, std::map<std::string, const AnnotationRecord*>> by_mention;
  for (const auto& r : records) by_mention[r.mention][r.annotator_id] = &r;

  GoldResult result;
  for (const auto& [ref, verdicts] : by_mention) {
    if (verdicts.size() < 2) {
      ++result.under_annotated;
      continue;
    }
    const auto& first = *verdicts.begin()->second;
    bool correct_agree = true, negated_agree = true, temporal_agree = true;
    for (const auto& [_, r] : verdicts) {
      correct_agree &= r->correct == first.correct;
      negated_agree &= r->negated == first.negated;
      temporal_agree &= r->temporality == first.temporality;
    }
    if (!correct_agree) {
      ++result.discarded;
      continue;
    }
    GoldInstance g;
    g.mention = ref;
    g.label = first.correct ? Label::TrueMention : Label::NotMention;
    if (negated_agree) g.gold_negated = first.negated;
    if (temporal_agree) g.gold_temporality = first.temporality;
    result.gold.push_back(std::move(g));
  }
  return result;
}

nlohmann::json to_json(const GoldInstance& gold) {
  nlohmann::json j;
  ref_to_json(gold.mention, j);
  j["label"] = to_string(gold.label);
  j["gold_negated"] = gold.gold_negated ? nlohmann::json(*gold.gold_negated) : nlohmann::json(nullptr);
  j["gold_temporality"] =
      gold.gold_temporality ? nlohmann::json(to_string(*gold.gold_temporality)) : nlohmann::json(nullptr);
  return j;
}

GoldInstance gold_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("gold record must be an object");
  GoldInstance g;
  g.mention = ref_from_json(j);
  g.label = parse_label(field<std::string>(j, "label"));
  if (j.contains("gold_negated") && !j["gold_negated"].is_null()) g.gold_negated = field<bool>(j, "gold_negated");
  if (j.contains("gold_temporality") && !j["gold_temporality"].is_null())
    g.gold_temporality = parse_temporality(field<std::string>(j, "gold_temporality"));
  return g;
}

std::string serialize_gold(std::span<const GoldInstance> gold) {
  std::string out;
  for (const auto& g : gold) out += to_json(g).dump() + "\n";
  return out;
}

std::vector<GoldInstance> parse_gold(std::string_view jsonl) {
  return parse_lines<GoldInstance>(jsonl, gold_from_json);
}

std::vector<GoldInstance> load_gold(const std::filesystem::path& path) { return parse_gold(read_all(path)); }

// ---------------------------------------------------------------------------

AgreementTable contingency(std::span<const AnnotationRecord> records, const AnnotatorPair& pair,
                           std::optional<ChapterId> chapter, const ChapterMap& chapters) {
  std::map<MentionRef, bool> a, b;
  for (const auto& r : records) {
    if (chapter) {
      auto it = chapters.find(r.mention.cui);
      if (it == chapters.end() || it->second != *chapter) continue;
    }
    if (r.annotator_id == pair.first) a[r.mention] = r.correct;
    if (r.annotator_id == pair.second) b[r.mention] = r.correct;
  }
  AgreementTable t;
  for (const auto& [ref, va] : a) {
    auto it = b.find(ref);
    if (it == b.end()) continue;
    const bool vb = it->second;
    if (va && vb) ++t.both_true;
    else if (va) ++t.a_only;
    else if (vb) ++t.b_only;
    else ++t.both_false;
  }
  if (t.total() == 0)
    throw EmptyScopeError("annotators " + pair.first + " and " + pair.second + " share no mentions" +
                          (chapter ? " in chapter " + chapter->roman() : std::string()));
  return t;
}

double cohens_kappa(const AgreementTable& t) {
  const auto n = static_cast<double>(t.total());
  if (t.total() == 0) throw ArgumentError("kappa of an empty table");
  const double po = static_cast<double>(t.both_true + t.both_false) / n;
  const double a_true = static_cast<double>(t.both_true + t.a_only) / n;
  const double b_true = static_cast<double>(t.both_true + t.b_only) / n;
  const double pe = a_true * b_true + (1.0 - a_true) * (1.0 - b_true);
  // p_e == 1 exactly when both annotators gave one identical constant label.
  const bool a_constant = t.both_true + t.a_only == 0 || t.both_false + t.b_only == 0;
  const bool b_constant = t.both_true + t.b_only == 0 || t.both_false + t.a_only == 0;
  if (a_constant && b_constant && t.a_only == 0 && t.b_only == 0)
    throw DegenerateMarginalsError("kappa undefined: both annotators gave the same single label");
  return (po - pe) / (1.0 - pe);
}

std::vector<AnnotatorPair> annotator_pairs(std::span<const AnnotationRecord> records) {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.annotator_id);
  std::vector<AnnotatorPair> pairs;
  for (auto i = ids.begin(); i != ids.end(); ++i)
    for (auto j = std::next(i); j != ids.end(); ++j) pairs.emplace_back(*i, *j);
  return pairs;
}

KappaReport kappa_report(std::span<const AnnotationRecord> records, std::span<const AnnotatorPair> pairs,
                         const ChapterMap& chapters) {
  std::set<ChapterId> seen;
  for (const auto& r : records)
    if (auto it = chapters.find(r.mention.cui); it != chapters.end()) seen.insert(it->second);

  KappaReport report;
  double sum = 0.0;
  std::size_t present = 0;
  for (const auto& chapter : seen) {
    ChapterKappa ck;
    ck.chapter = chapter;
    double pair_sum = 0.0;
    for (const auto& pair : pairs) {
      try {
        const auto table = contingency(records, pair, chapter, chapters);
        const double k = cohens_kappa(table);
        ck.pairs.push_back(PairKappa{pair, table, k});
        pair_sum += k;
      } catch (const EmptyScopeError&) {
      } catch (const DegenerateMarginalsError&) {
      }
    }
    if (!ck.pairs.empty()) {
      ck.kappa = pair_sum / static_cast<double>(ck.pairs.size());
      sum += *ck.kappa;
      ++present;
    }
    report.chapters.push_back(std::move(ck));
  }
  if (present > 0) report.average = sum / static_cast<double>(present);
  return report;
}

nlohmann::json to_json(const KappaReport& report) {
  nlohmann::json j;
  j["average"] = report.average ? nlohmann::json(*report.average) : nlohmann::json(nullptr);
  auto& chapters = j["chapters"] = nlohmann::json::array();
  for (const auto& ck : report.chapters) {
    nlohmann::json c;
    c["chapter"] = ck.chapter.roman();
    c["kappa"] = ck.kappa ? nlohmann::json(*ck.kappa) : nlohmann::json(nullptr);
    auto& pairs = c["pairs"] = nlohmann::json::array();
    for (const auto& pk : ck.pairs) {
      pairs.push_back({{"annotators", {pk.pair.first, pk.pair.second}},
                       {"table", {pk.table.both_true, pk.table.a_only, pk.table.b_only, pk.table.both_false}},
                       {"kappa", pk.kappa}});
    }
    chapters.push_back(std::move(c));
  }
  return j;
}

}  // namespace comorbid::annotation
