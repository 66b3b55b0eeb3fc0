#include "comorbid/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "comorbid/error.hpp"
#include "comorbid/unicode.hpp"
#include "text_util.hpp"

namespace comorbid::corpus {

using namespace std::chrono;

Date parse_date(std::string_view text) {
  auto digits = [&](std::size_t from, std::size_t n) {
    int v = 0;
    for (std::size_t i = from; i < from + n; ++i) {
      if (text[i] < '0' || text[i] > '9') throw ParseError("malformed date '" + std::string(text) + "'");
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw ParseError("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  Date d{year{digits(0, 4)}, month{static_cast<unsigned>(digits(5, 2))}, day{static_cast<unsigned>(digits(8, 2))}};
  if (!d.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
  return d;
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

Date minus_months(Date date, int n) {
  const year_month ym = year_month{date.year(), date.month()} - months{n};
  const auto last = year_month_day_last{ym.year(), month_day_last{ym.month()}}.day();
  return Date{ym.year(), ym.month(), std::min(date.day(), last)};
}

nlohmann::json to_json(const Document& doc) {
  return nlohmann::json{{"doc_id", doc.doc_id},
                        {"patient_id", doc.patient_id},
                        {"date", format_date(doc.date)},
                        {"text", doc.text}};
}

CohortFilter::CohortFilter(std::map<std::string, Date> index_dates, Date study_end)
    : index_dates_(std::move(index_dates)), study_end_(study_end) {
  for (const auto& [patient, index_date] : index_dates_)
    if (!(sys_days(minus_months(index_date, kMonthsBeforeIndex)) < sys_days(study_end_)))
      throw ValidationError("cohort window for patient " + patient + " is empty");
}

CohortFilter CohortFilter::load(const std::filesystem::path& path, Date study_end) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open index date file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::map<std::string, Date> dates;
  std::size_t line_no = 0;
  bool header = false;
  const auto text = ss.str();
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (!header) {
      header = true;
      if (detail::trim(line) != "patient_id,index_date") throw ParseError("expected header 'patient_id,index_date'", line_no);
      continue;
    }
    auto fields = detail::split_csv(line, line_no);
    if (fields.size() != 2) throw ParseError("expected 2 fields", line_no);
    Date d;
    try {
      d = parse_date(detail::trim(fields[1]));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!dates.emplace(std::string(detail::trim(fields[0])), d).second)
      throw ValidationError("duplicate patient " + fields[0] + " on line " + std::to_string(line_no));
  }
  return CohortFilter(std::move(dates), study_end);
}

std::optional<std::pair<Date, Date>> CohortFilter::window(const std::string& patient_id) const {
  auto it = index_dates_.find(patient_id);
  if (it == index_dates_.end()) return std::nullopt;
  return std::pair{minus_months(it->second, kMonthsBeforeIndex), study_end_};
}

bool CohortFilter::admits(const std::string& patient_id, Date date) const {
  const auto w = window(patient_id);
  if (!w) return false;
  return sys_days(w->first) <= sys_days(date) && sys_days(date) <= sys_days(w->second);
}

const Document* Corpus::find(const std::string& doc_id) const {
  for (const auto& d : documents)
    if (d.doc_id == doc_id) return &d;
  return nullptr;
}

Corpus parse_corpus(std::string_view jsonl, const CohortFilter* filter) {
  Corpus corpus;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(jsonl)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    Document doc;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw ParseError("document must be a JSON object", line_no);
      for (const char* key : {"doc_id", "patient_id", "date", "text"})
        if (!j.contains(key) || !j[key].is_string())
          throw ParseError(std::string("missing string field '") + key + "'", line_no);
      doc.doc_id = j["doc_id"].get<std::string>();
      doc.patient_id = j["patient_id"].get<std::string>();
      doc.date = parse_date(j["date"].get<std::string>());
      doc.text = j["text"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(e.what(), line_no);
    }
    if (doc.doc_id.empty()) throw ParseError("empty doc_id", line_no);
    if (!unicode::is_valid(doc.text)) throw ParseError("document text is not valid UTF-8", line_no);
    if (!ids.insert(doc.doc_id).second)
      throw ValidationError("duplicate doc_id '" + doc.doc_id + "' on line " + std::to_string(line_no));
    if (filter && !filter->admits(doc.patient_id, doc.date)) {
      ++corpus.excluded;
      continue;
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus ingest_corpus(const std::filesystem::path& path, const CohortFilter* filter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_corpus(ss.str(), filter);
}

std::string serialize_corpus(std::span<const Document> documents) {
  std::string out;
  for (const auto& d : documents) out += to_json(d).dump() + "\n";
  return out;
}

}  // namespace comorbid::corpus
