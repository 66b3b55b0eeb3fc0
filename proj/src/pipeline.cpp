#include "comorbid/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "comorbid/error.hpp"
#include "text_util.hpp"

namespace comorbid::pipeline {

std::vector<Mention> extract_document(const corpus::Document& doc, const Extractor& extractor) {
  const auto text = textproc::analyze(doc.text, extractor.abbreviations);
  auto mentions = matcher::find_mentions(doc.doc_id, text, extractor.index);
  for (auto& m : mentions) context::attribute(m, text.tokens[m.sentence_index], extractor.triggers);
  return mentions;
}

std::vector<Mention> run_extract(const corpus::Corpus& corpus, const Extractor& extractor, unsigned threads) {
  const auto& docs = corpus.documents;
  std::vector<std::vector<Mention>> per_doc(docs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < docs.size(); i = next++) per_doc[i] = extract_document(docs[i], extractor);
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(docs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return docs[a].doc_id < docs[b].doc_id; });
  std::vector<Mention> out;
  for (auto i : order)
    for (auto& m : per_doc[i]) out.push_back(std::move(m));
  return out;
}

nlohmann::json to_json(const Mention& m) {
  nlohmann::json j;
  j["doc_id"] = m.doc_id;
  j["cui"] = m.cui.str();
  j["icd_code"] = m.icd_code.str();
  j["chapter"] = m.chapter.roman();
  j["start"] = m.start;
  j["end"] = m.end;
  j["matched_text"] = m.matched_text;
  j["sentence_index"] = m.sentence_index;
  j["negated"] = m.attributes.negated;
  j["temporality"] = to_string(m.attributes.temporality);
  j["relevant"] = context::is_relevant(m.attributes);
  auto& triggers = j["triggers"] = nlohmann::json::array();
  for (const auto& t : m.attributes.triggers)
    triggers.push_back({{"trigger", t.trigger}, {"start", t.start}, {"end", t.end}});
  j["filter_score"] = m.filter_score ? nlohmann::json(*m.filter_score) : nlohmann::json(nullptr);
  return j;
}

Mention mention_from_json(const nlohmann::json& j) {
  try {
    Mention m;
    m.doc_id = j.at("doc_id").get<std::string>();
    m.cui = Cui(j.at("cui").get<std::string>());
    m.icd_code = IcdCode(j.at("icd_code").get<std::string>());
    m.chapter = ChapterId::parse(j.at("chapter").get<std::string>());
    m.start = j.at("start").get<std::size_t>();
    m.end = j.at("end").get<std::size_t>();
    m.matched_text = j.at("matched_text").get<std::string>();
    m.sentence_index = j.at("sentence_index").get<std::size_t>();
    m.attributes.negated = j.at("negated").get<bool>();
    m.attributes.temporality = parse_temporality(j.at("temporality").get<std::string>());
    if (j.contains("triggers"))
      for (const auto& t : j["triggers"])
        m.attributes.triggers.push_back(
            TriggerHit{t.at("trigger").get<std::string>(), t.at("start").get<std::size_t>(), t.at("end").get<std::size_t>()});
    if (j.contains("filter_score") && !j["filter_score"].is_null()) m.filter_score = j["filter_score"].get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad mention record: ") + e.what());
  } catch (const ValidationError& e) {
    throw ParseError(std::string("bad mention record: ") + e.what());
  }
}

std::string serialize_mentions(std::span<const Mention> mentions) {
  std::string out;
  for (const auto& m : mentions) out += to_json(m).dump() + "\n";
  return out;
}

std::vector<Mention> parse_mentions(std::string_view jsonl) {
  std::vector<Mention> out;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(jsonl)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(mention_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::vector<Mention> load_mentions(const std::filesystem::path& path) { return parse_mentions(read_file(path)); }

GoldFeatures gold_features(std::span<const annotation::GoldInstance> gold, std::span<const Mention> mentions,
                           RelevanceMode mode) {
  std::map<std::string, std::vector<const Mention*>> by_doc;
  std::map<MentionRef, const Mention*> by_ref;
  for (const auto& m : mentions) {
    by_doc[m.doc_id].push_back(&m);
    by_ref.emplace(ref_of(m), &m);
  }
  GoldFeatures out;
  for (const auto& g : gold) {
    auto it = by_ref.find(g.mention);
    if (it == by_ref.end()) {
      ++out.unmatched;
      continue;
    }
    const Mention& m = *it->second;
    const bool negated = g.gold_negated.value_or(m.attributes.negated);
    const auto temporality = g.gold_temporality.value_or(m.attributes.temporality);
    if (mode == RelevanceMode::Exclude && (negated || temporality == Temporality::Historic)) {
      ++out.excluded_irrelevant;
      continue;
    }
    std::vector<Mention> doc_mentions;
    for (const auto* dm : by_doc[m.doc_id]) doc_mentions.push_back(*dm);
    out.instances.push_back(
        filtermodel::TrainInstance{filtermodel::encode_features(m, doc_mentions), g.label, m.cui, m.chapter});
    out.refs.push_back(g.mention);
  }
  return out;
}

std::map<Cui, std::vector<filtermodel::TrainInstance>> by_condition(
    std::span<const filtermodel::TrainInstance> instances) {
  std::map<Cui, std::vector<filtermodel::TrainInstance>> out;
  for (const auto& inst : instances) out[inst.cui].push_back(inst);
  return out;
}

void apply_models(std::span<Mention> mentions, const std::map<Cui, filtermodel::ForestModel>& models) {
  std::map<std::string, std::vector<Mention>> by_doc;
  for (const auto& m : mentions) by_doc[m.doc_id].push_back(m);
  for (auto& m : mentions) {
    auto it = models.find(m.cui);
    if (it == models.end()) continue;
    m.filter_score = filtermodel::predict(it->second, filtermodel::encode_features(m, by_doc[m.doc_id])).score;
  }
}

// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config must be a JSON object");

  static const std::set<std::string> known = {
      "lexicon",     "mapping", "triggers", "abbreviations", "corpus",         "mentions",  "annotations",
      "gold",        "model_dir", "annotation_store", "report_dir", "index_dates", "study_end", "forest",
      "k",           "seed",    "relevance", "port",        "threads"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ValidationError("unknown config key '" + key + "'");

  PipelineConfig c;
  auto path = [&](const char* key, std::filesystem::path& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) throw ValidationError(std::string("config '") + key + "' must be a string");
    std::filesystem::path p = j[key].get<std::string>();
    out = p.is_absolute() ? p : base_dir / p;
  };
  path("lexicon", c.lexicon);
  path("mapping", c.mapping);
  path("triggers", c.triggers);
  path("abbreviations", c.abbreviations);
  path("corpus", c.corpus);
  path("mentions", c.mentions);
  path("annotations", c.annotations);
  path("gold", c.gold);
  path("model_dir", c.model_dir);
  path("annotation_store", c.annotation_store);
  path("report_dir", c.report_dir);
  path("index_dates", c.index_dates);

  try {
    if (j.contains("study_end")) c.study_end = corpus::parse_date(j["study_end"].get<std::string>());
    if (j.contains("k")) c.k = j["k"].get<std::uint32_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("port")) c.port = j["port"].get<int>();
    if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
    if (j.contains("relevance")) {
      const auto mode = j["relevance"].get<std::string>();
      if (mode == "exclude") c.relevance = RelevanceMode::Exclude;
      else if (mode == "include") c.relevance = RelevanceMode::Include;
      else throw ValidationError("relevance must be 'exclude' or 'include'");
    }
    if (j.contains("forest")) {
      const auto& f = j["forest"];
      if (!f.is_object()) throw ValidationError("config 'forest' must be an object");
      static const std::set<std::string> forest_keys = {"n_trees", "max_features", "min_leaf", "max_depth",
                                                        "bootstrap"};
      for (const auto& [key, _] : f.items())
        if (!forest_keys.count(key)) throw ValidationError("unknown forest key '" + key + "'");
      if (f.contains("n_trees")) c.forest.n_trees = f["n_trees"].get<std::uint32_t>();
      if (f.contains("max_features") && !f["max_features"].is_null())
        c.forest.max_features = f["max_features"].get<std::uint32_t>();
      if (f.contains("min_leaf")) c.forest.min_leaf = f["min_leaf"].get<std::uint32_t>();
      if (f.contains("max_depth")) c.forest.max_depth = f["max_depth"].get<std::uint32_t>();
      if (f.contains("bootstrap")) c.forest.bootstrap = f["bootstrap"].get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config value has the wrong type: ") + e.what());
  }
  if (c.k < 2) throw ValidationError("config k must be at least 2");
  if (c.forest.n_trees < 1) throw ValidationError("forest.n_trees must be at least 1");
  if (c.forest.min_leaf < 1) throw ValidationError("forest.min_leaf must be at least 1");
  if (c.threads < 1) c.threads = 1;
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), std::filesystem::absolute(path).parent_path());
}

}  // namespace comorbid::pipeline
