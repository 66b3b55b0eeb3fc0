#include "comorbid/terminology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "comorbid/error.hpp"
#include "comorbid/textproc.hpp"
#include "embedded.hpp"
#include "httplib.h"
#include "json.hpp"
#include "text_util.hpp"

namespace comorbid::terminology {

namespace {

struct ChapterTable {
  std::string version;
  std::vector<Chapter> chapters;
};

ChapterTable parse_chapter_table(std::string_view text) {
  ChapterTable table;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (auto raw : detail::split_lines(text)) {
    ++line_no;
    auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (auto pos = line.find("version:"); pos != std::string_view::npos)
        table.version = std::string(detail::trim(line.substr(pos + 8)));
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto fields = detail::split_csv(line, line_no);
    if (fields.size() != 5) throw ParseError("chapter table row needs 5 fields", line_no);
    table.chapters.push_back(Chapter{ChapterId::parse(fields[0]), fields[4], IcdCode(fields[1]),
                                     IcdCode(fields[2]), IcdCode(fields[3])});
  }
  for (std::size_t i = 0; i < table.chapters.size(); ++i) {
    const auto& c = table.chapters[i];
    if (c.first > c.last || c.who_last > c.last || c.who_last < c.first)
      throw ValidationError("chapter " + c.id.roman() + " has an inverted range");
    if (i > 0 && table.chapters[i - 1].last.ordinal() + 1 != c.first.ordinal())
      throw ValidationError("chapter ranges are not contiguous at " + c.id.roman());
  }
  return table;
}

const ChapterTable& table() {
  static const ChapterTable t = parse_chapter_table(embedded::chapter_table);
  return t;
}

}  // namespace

std::span<const Chapter> chapters() { return table().chapters; }

std::string_view chapter_table_version() { return table().version; }

const Chapter& chapter_of(const IcdCode& code) {
  const auto& cs = table().chapters;
  auto it = std::upper_bound(cs.begin(), cs.end(), code,
                             [](const IcdCode& c, const Chapter& ch) { return c < ch.first; });
  if (it == cs.begin() || code > std::prev(it)->last)
    throw OutOfScopeError("ICD-10 code " + code.str() + " is outside the A00-N99 scope");
  return *std::prev(it);
}

const Chapter& chapter_by_id(ChapterId id) {
  for (const auto& c : table().chapters)
    if (c.id == id) return c;
  throw OutOfScopeError("chapter " + id.roman() + " is outside the pipeline scope");
}

IcdMapping::IcdMapping(std::vector<MappingEntry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const MappingEntry& a, const MappingEntry& b) { return a.icd_code < b.icd_code; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (i > 0 && entries_[i - 1].icd_code == e.icd_code)
      throw ValidationError("duplicate ICD code '" + e.icd_code.str() + "' in mapping");
    ChapterId expected;
    try {
      expected = chapter_of(e.icd_code).id;
    } catch (const OutOfScopeError& err) {
      throw ValidationError(err.what());
    }
    if (expected != e.chapter)
      throw ValidationError("ICD code " + e.icd_code.str() + " belongs to chapter " +
                            expected.roman() + ", not " + e.chapter.roman());
  }
}

const MappingEntry* IcdMapping::find(const IcdCode& code) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), code,
      [](const MappingEntry& e, const IcdCode& c) { return e.icd_code < c; });
  return it != entries_.end() && it->icd_code == code ? &*it : nullptr;
}

IcdMapping parse_mapping(std::string_view csv, std::vector<std::string>* warnings) {
  std::vector<MappingEntry> entries;
  std::map<IcdCode, std::size_t> seen;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (auto raw : detail::split_lines(csv)) {
    ++line_no;
    auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line == "icd_code,chapter,cui") continue;
      throw ParseError("expected header 'icd_code,chapter,cui'", line_no);
    }
    auto fields = detail::split_csv(line, line_no);
    if (fields.size() != 3)
      throw ParseError("expected 3 fields, found " + std::to_string(fields.size()), line_no);
    const auto code = std::string(detail::trim(fields[0]));
    const auto chapter = std::string(detail::trim(fields[1]));
    const auto cui = std::string(detail::trim(fields[2]));
    if (!IcdCode::is_valid(code)) throw ParseError("malformed ICD code '" + code + "'", line_no);
    if (!Cui::is_valid(cui))
      throw ValidationError("line " + std::to_string(line_no) + ": CUI '" + cui +
                            "' does not match C[0-9]{7}");
    ChapterId chapter_id;
    try {
      chapter_id = ChapterId::parse(chapter);
    } catch (const ValidationError&) {
      throw ParseError("malformed chapter '" + chapter + "'", line_no);
    }
    IcdCode icd(code);
    if (auto [it, inserted] = seen.emplace(icd, line_no); !inserted)
      throw ValidationError("duplicate ICD code '" + code + "' on lines " +
                            std::to_string(it->second) + " and " + std::to_string(line_no));
    entries.push_back(MappingEntry{icd, chapter_id, Cui(cui)});
  }
  if (entries.empty() && warnings) warnings->push_back("mapping file contains no entries");
  return IcdMapping(std::move(entries));
}

IcdMapping load_mapping(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mapping file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mapping(ss.str(), warnings);
}

std::string serialize_mapping(const IcdMapping& mapping) {
  std::string out = "icd_code,chapter,cui\n";
  for (const auto& e : mapping.entries())
    out += e.icd_code.str() + "," + e.chapter.roman() + "," + e.cui.str() + "\n";
  return out;
}

Lexicon::Lexicon(std::vector<LexiconEntry> entries, const IcdMapping& mapping)
    : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!by_cui_.emplace(e.cui, i).second)
      throw ValidationError("duplicate CUI '" + e.cui.str() + "' in lexicon");
    if (!mapping.contains(e.icd_code))
      throw ValidationError("lexicon entry " + e.cui.str() + " references ICD code " +
                            e.icd_code.str() + " which is not in the mapping");
    if (e.synonyms.empty())
      throw ValidationError("lexicon entry " + e.cui.str() + " has no synonyms");
    for (const auto& s : e.synonyms)
      if (s.empty()) throw ValidationError("lexicon entry " + e.cui.str() + " has an empty synonym");
  }
}

const LexiconEntry* Lexicon::find(const Cui& cui) const {
  auto it = by_cui_.find(cui);
  return it == by_cui_.end() ? nullptr : &entries_[it->second];
}

std::map<Cui, ChapterId> Lexicon::chapter_map() const {
  std::map<Cui, ChapterId> out;
  for (const auto& e : entries_) out.emplace(e.cui, chapter_of(e.icd_code).id);
  return out;
}

Lexicon parse_lexicon(std::string_view tsv, const IcdMapping& mapping) {
  std::vector<LexiconEntry> entries;
  std::size_t line_no = 0;
  bool first = true;
  for (auto line : detail::split_lines(tsv)) {
    ++line_no;
    if (detail::trim(line).empty() || line.front() == '#') continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 4)
      throw ParseError("expected 4 tab-separated fields, found " + std::to_string(fields.size()),
                       line_no);
    const bool header = first && fields[0] == "cui";
    first = false;
    if (header) continue;
    const auto cui = std::string(detail::trim(fields[0]));
    const auto icd = std::string(detail::trim(fields[3]));
    if (!Cui::is_valid(cui))
      throw ValidationError("line " + std::to_string(line_no) + ": invalid CUI '" + cui + "'");
    if (!IcdCode::is_valid(icd)) throw ParseError("malformed ICD code '" + icd + "'", line_no);

    LexiconEntry entry{Cui(cui), std::string(detail::trim(fields[1])), {}, IcdCode(icd)};
    std::set<std::string> seen;
    if (!detail::trim(fields[2]).empty()) {
      for (auto syn : detail::split(fields[2], '|')) {
        auto norm = textproc::normalize(syn);
        if (norm.empty())
          throw ValidationError("line " + std::to_string(line_no) + ": synonym '" +
                                std::string(syn) + "' is empty after normalization");
        if (seen.insert(norm).second) entry.synonyms.push_back(std::move(norm));
      }
    }
    if (entry.synonyms.empty())
      throw ValidationError("line " + std::to_string(line_no) + ": entry " + cui +
                            " has an empty synonym list");
    entries.push_back(std::move(entry));
  }
  return Lexicon(std::move(entries), mapping);
}

Lexicon load_lexicon(const std::filesystem::path& path, const IcdMapping& mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lexicon file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_lexicon(ss.str(), mapping);
}

std::string build_sparql_query(std::span<const IcdCode> codes, std::string_view graph) {
  if (codes.empty()) throw ArgumentError("build_sparql_query needs at least one ICD code");
  std::set<IcdCode> unique(codes.begin(), codes.end());
  std::string values;
  for (const auto& c : unique) values += " \"" + c.str() + "\"";

  std::string q;
  q += "PREFIX skos: <http://www.w3.org/2004/02/skos/core#>\n";
  q += "PREFIX umls: <http://bioportal.bioontology.org/ontologies/umls/>\n";
  q += "SELECT DISTINCT ?code ?cui\n";
  q += "FROM <" + std::string(graph) + ">\n";
  q += "WHERE {\n";
  q += "  VALUES ?code {" + values + " }\n";
  q += "  ?concept skos:notation ?code ;\n";
  q += "           umls:cui ?cui .\n";
  q += "}\n";
  q += "ORDER BY ?code ?cui\n";
  return q;
}

FetchResult fetch_mappings(const std::string& endpoint, std::span<const IcdCode> codes,
                           const Transport& transport, std::string_view graph) {
  const auto query = build_sparql_query(codes, graph);
  const std::string body = transport(endpoint, query);

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("endpoint response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_object() ||
      !doc["results"].contains("bindings") || !doc["results"]["bindings"].is_array())
    throw ParseError("endpoint response lacks results.bindings");

  const std::set<IcdCode> requested(codes.begin(), codes.end());
  std::map<IcdCode, std::set<std::string>> found;
  FetchResult result;
  for (const auto& binding : doc["results"]["bindings"]) {
    auto value_of = [&](const char* var) -> std::string {
      if (!binding.is_object() || !binding.contains(var) || !binding[var].is_object() ||
          !binding[var].contains("value") || !binding[var]["value"].is_string())
        throw ParseError(std::string("binding without string '") + var + "' value");
      return binding[var]["value"].get<std::string>();
    };
    auto code = value_of("code");
    auto cui = value_of("cui");
    if (!IcdCode::is_valid(code)) throw ParseError("binding has malformed ICD code '" + code + "'");
    if (!Cui::is_valid(cui)) throw ParseError("binding has malformed CUI '" + cui + "'");
    IcdCode icd(code);
    if (!requested.count(icd)) {
      result.warnings.push_back("ignoring unrequested code " + code);
      continue;
    }
    found[icd].insert(cui);
  }

  std::vector<MappingEntry> entries;
  for (const auto& code : requested) {
    auto it = found.find(code);
    if (it == found.end()) {
      result.misses.push_back(code);
      continue;
    }
    if (it->second.size() > 1)
      result.warnings.push_back(code.str() + " has " + std::to_string(it->second.size()) +
                                " CUIs; keeping " + *it->second.begin());
    ChapterId chapter;
    try {
      chapter = chapter_of(code).id;
    } catch (const OutOfScopeError&) {
      result.warnings.push_back("dropping out-of-scope code " + code.str());
      continue;
    }
    entries.push_back(MappingEntry{code, chapter, Cui(*it->second.begin())});
  }
  result.mapping = IcdMapping(std::move(entries));
  return result;
}

Transport http_transport() {
  return [](const std::string& endpoint, const std::string& query) -> std::string {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw NetworkError("endpoint URL lacks a scheme: " + endpoint);
    const auto path_start = endpoint.find('/', scheme_end + 3);
    const std::string origin = endpoint.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);

    httplib::Client client(origin);
    client.set_follow_location(true);
    httplib::Headers headers = {{"Accept", "application/sparql-results+json"}};
    httplib::Params params = {{"query", query}};
    auto res = client.Post(path, headers, params);
    if (!res) throw NetworkError("request to " + endpoint + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw NetworkError("endpoint " + endpoint + " returned HTTP " + std::to_string(res->status));
    return res->body;
  };
}

}  // namespace comorbid::terminology
