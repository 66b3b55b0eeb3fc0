#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comorbid/types.hpp"

namespace comorbid::terminology {

struct Chapter {
  ChapterId id;
  std::string name;
  /// Inclusive range used for resolution (covers unassigned gap codes).
  IcdCode first;
  IcdCode last;
  /// Last code WHO actually assigns to the chapter.
  IcdCode who_last;
};

/// The bundled chapter table, in chapter order. Parsed once from the
/// embedded `data/icd10_chapters.csv`.
std::span<const Chapter> chapters();
std::string_view chapter_table_version();

/// Chapter whose range contains `code`. Throws OutOfScopeError outside A00-N99.
const Chapter& chapter_of(const IcdCode& code);
/// Throws OutOfScopeError for chapters outside the bundled table.
const Chapter& chapter_by_id(ChapterId id);

struct MappingEntry {
  IcdCode icd_code;
  ChapterId chapter;
  Cui cui;
  bool operator==(const MappingEntry&) const = default;
};

/// ICD-10 three-character code to UMLS CUI, one CUI per code.
class IcdMapping {
 public:
  IcdMapping() = default;
  /// Validates uniqueness and chapter consistency. Throws ValidationError.
  explicit IcdMapping(std::vector<MappingEntry> entries);

  /// Entries ordered by ICD code.
  const std::vector<MappingEntry>& entries() const { return entries_; }
  const MappingEntry* find(const IcdCode& code) const;
  bool contains(const IcdCode& code) const { return find(code) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool operator==(const IcdMapping&) const = default;

 private:
  std::vector<MappingEntry> entries_;
};

/// Mapping CSV with header `icd_code,chapter,cui`.
/// Appends to `warnings` (when given) for an empty file.
IcdMapping parse_mapping(std::string_view csv, std::vector<std::string>* warnings = nullptr);
IcdMapping load_mapping(const std::filesystem::path& path,
                        std::vector<std::string>* warnings = nullptr);
std::string serialize_mapping(const IcdMapping& mapping);

struct LexiconEntry {
  Cui cui;
  std::string preferred_term;
  /// Normalized, non-empty, duplicates removed, in file order.
  std::vector<std::string> synonyms;
  IcdCode icd_code;
  bool operator==(const LexiconEntry&) const = default;
};

class Lexicon {
 public:
  Lexicon() = default;
  /// Checks CUI uniqueness and that every ICD code is in `mapping`.
  Lexicon(std::vector<LexiconEntry> entries, const IcdMapping& mapping);

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  const LexiconEntry* find(const Cui& cui) const;
  std::size_t size() const { return entries_.size(); }

  /// CUI to chapter lookup for every entry.
  std::map<Cui, ChapterId> chapter_map() const;

 private:
  std::vector<LexiconEntry> entries_;
  std::map<Cui, std::size_t> by_cui_;
};

/// Lexicon TSV: `cui<TAB>preferred_term<TAB>syn1|syn2<TAB>icd_code`.
/// Blank lines and lines starting with `#` are skipped.
Lexicon parse_lexicon(std::string_view tsv, const IcdMapping& mapping);
Lexicon load_lexicon(const std::filesystem::path& path, const IcdMapping& mapping);

inline constexpr std::string_view kDefaultGraph =
    "http://bioportal.bioontology.org/ontologies/ICD10";
inline constexpr std::string_view kEndpointEnvVar = "COMORBID_SPARQL_ENDPOINT";

/// SELECT query returning `?code ?cui` pairs for the given codes. Codes are
/// deduplicated and sorted so the text is deterministic.
std::string build_sparql_query(std::span<const IcdCode> codes,
                               std::string_view graph = kDefaultGraph);

/// Sends `query` to `endpoint` and returns the raw response body.
/// Implementations throw NetworkError on transport failure.
using Transport = std::function<std::string(const std::string& endpoint,
                                            const std::string& query)>;

struct FetchResult {
  IcdMapping mapping;
  /// Requested codes the endpoint had no CUI for.
  std::vector<IcdCode> misses;
  std::vector<std::string> warnings;
};

/// Queries the endpoint and parses a SPARQL JSON result set. No retries.
/// Where the endpoint returns several CUIs for one code the smallest is kept
/// and a warning recorded.
FetchResult fetch_mappings(const std::string& endpoint, std::span<const IcdCode> codes,
                           const Transport& transport,
                           std::string_view graph = kDefaultGraph);

/// HTTP(S) POST transport (form-encoded `query`, JSON result format).
Transport http_transport();

}  // namespace comorbid::terminology
