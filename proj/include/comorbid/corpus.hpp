#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace comorbid::corpus {

using Date = std::chrono::year_month_day;

/// Parses `YYYY-MM-DD`. Throws ParseError.
Date parse_date(std::string_view text);
std::string format_date(Date date);
/// Calendar month subtraction; the day is clamped to the target month's end.
Date minus_months(Date date, int months);

struct Document {
  std::string doc_id;
  std::string patient_id;
  Date date;
  std::string text;
  bool operator==(const Document&) const = default;
};

nlohmann::json to_json(const Document& doc);

/// Keeps each patient's documents dated within
/// [index_date - 3 months, study_end], both ends inclusive. Patients without
/// an index date are outside the cohort.
class CohortFilter {
 public:
  static constexpr int kMonthsBeforeIndex = 3;

  CohortFilter(std::map<std::string, Date> index_dates, Date study_end);
  /// CSV with header `patient_id,index_date`.
  static CohortFilter load(const std::filesystem::path& index_dates_csv, Date study_end);

  bool admits(const std::string& patient_id, Date date) const;
  std::optional<std::pair<Date, Date>> window(const std::string& patient_id) const;

 private:
  std::map<std::string, Date> index_dates_;
  Date study_end_;
};

struct Corpus {
  std::vector<Document> documents;
  std::size_t excluded = 0;
  const Document* find(const std::string& doc_id) const;
};

/// JSON Lines, one `{"doc_id","patient_id","date","text"}` object per line.
/// Throws ParseError (with line) or ValidationError on a duplicate doc_id.
Corpus parse_corpus(std::string_view jsonl, const CohortFilter* filter = nullptr);
Corpus ingest_corpus(const std::filesystem::path& path, const CohortFilter* filter = nullptr);
std::string serialize_corpus(std::span<const Document> documents);

}  // namespace comorbid::corpus
