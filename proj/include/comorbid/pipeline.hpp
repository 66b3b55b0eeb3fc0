#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "comorbid/annotation.hpp"
#include "comorbid/context.hpp"
#include "comorbid/corpus.hpp"
#include "comorbid/evaluation.hpp"
#include "comorbid/filtermodel.hpp"
#include "comorbid/matcher.hpp"
#include "comorbid/terminology.hpp"
#include "comorbid/textproc.hpp"
#include "json.hpp"

namespace comorbid::pipeline {

/// Everything extraction needs, built once and shared read-only.
struct Extractor {
  matcher::MatchIndex index;
  context::TriggerMatcher triggers;
  textproc::AbbreviationList abbreviations;
};

/// segment, tokenize, match, attribute. Sorted by start.
std::vector<Mention> extract_document(const corpus::Document& doc, const Extractor& extractor);

/// Runs every document, optionally on several threads. The result is sorted
/// by (doc_id, start) and does not depend on `threads`.
std::vector<Mention> run_extract(const corpus::Corpus& corpus, const Extractor& extractor,
                                 unsigned threads = 1);

/// Mentions dump: one JSON object per line. See docs/formats.md.
nlohmann::json to_json(const Mention& mention);
Mention mention_from_json(const nlohmann::json& j);
std::string serialize_mentions(std::span<const Mention> mentions);
std::vector<Mention> parse_mentions(std::string_view jsonl);
std::vector<Mention> load_mentions(const std::filesystem::path& path);

enum class RelevanceMode { Exclude, Include };

/// Joins gold labels with extracted mentions and encodes context features.
/// In Exclude mode gold instances that are negated or historic are dropped;
/// the adjudicated attribute is used where present, the rule-based one
/// otherwise. Gold rows without a matching mention are counted in `unmatched`.
struct GoldFeatures {
  std::vector<filtermodel::TrainInstance> instances;
  std::vector<MentionRef> refs;
  std::size_t unmatched = 0;
  std::size_t excluded_irrelevant = 0;
};

GoldFeatures gold_features(std::span<const annotation::GoldInstance> gold,
                           std::span<const Mention> mentions, RelevanceMode mode);

/// Instances grouped by condition, in CUI order.
std::map<Cui, std::vector<filtermodel::TrainInstance>> by_condition(
    std::span<const filtermodel::TrainInstance> instances);

/// Sets `filter_score` on every mention whose CUI has a model.
void apply_models(std::span<Mention> mentions,
                  const std::map<Cui, filtermodel::ForestModel>& models);

struct PipelineConfig {
  std::filesystem::path lexicon;
  std::filesystem::path mapping;
  std::filesystem::path triggers;
  std::filesystem::path abbreviations;
  std::filesystem::path corpus;
  std::filesystem::path mentions;
  std::filesystem::path annotations;
  std::filesystem::path gold;
  std::filesystem::path model_dir;
  std::filesystem::path annotation_store;
  std::filesystem::path report_dir;
  std::filesystem::path index_dates;
  std::optional<corpus::Date> study_end;
  filtermodel::ForestParams forest;
  std::uint32_t k = 10;
  std::optional<std::uint64_t> seed;
  RelevanceMode relevance = RelevanceMode::Exclude;
  int port = 8080;
  unsigned threads = 1;
};

/// JSON config; relative paths resolve against the config file's directory.
/// Throws ParseError / ValidationError.
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Reads a whole file. Throws IoError.
std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename. Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace comorbid::pipeline
