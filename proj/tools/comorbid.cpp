// Command-line front end: index, extract, kappa, gold, train, eval, serve,
// plus synth (bundled synthetic corpus) and fetch-mapping (SPARQL lookup).

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "comorbid/error.hpp"
#include "comorbid/pipeline.hpp"
#include "comorbid/service.hpp"
#include "comorbid/synthetic.hpp"

namespace fs = std::filesystem;
using namespace comorbid;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string lexicon;
  std::string mapping;
  std::optional<unsigned> threads;
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

class Context {
 public:
  explicit Context(const Globals& g) {
    std::string path = g.config;
    if (path.empty())
      if (const char* env = std::getenv("COMORBID_CONFIG")) path = env;
    if (!path.empty()) cfg = pipeline::load_config(path);
    if (!g.lexicon.empty()) cfg.lexicon = g.lexicon;
    if (!g.mapping.empty()) cfg.mapping = g.mapping;
    if (g.seed) cfg.seed = g.seed;
    if (g.threads) cfg.threads = std::max(1u, *g.threads);
  }

  pipeline::PipelineConfig cfg;

  std::uint64_t seed() const {
    if (!cfg.seed) throw ValidationError("a seed is required (--seed or config 'seed')");
    return *cfg.seed;
  }

  static fs::path pick(const std::string& flag, const fs::path& configured, const char* what) {
    if (!flag.empty()) return flag;
    if (!configured.empty()) return configured;
    throw ValidationError(std::string("no ") + what + " path given");
  }

  const terminology::IcdMapping& mapping() {
    if (!mapping_) {
      std::vector<std::string> warnings;
      mapping_ = terminology::load_mapping(pick("", cfg.mapping, "mapping"), &warnings);
      for (const auto& w : warnings) warn(w);
    }
    return *mapping_;
  }

  const terminology::Lexicon& lexicon() {
    if (!lexicon_) lexicon_ = terminology::load_lexicon(pick("", cfg.lexicon, "lexicon"), mapping());
    return *lexicon_;
  }

 private:
  std::optional<terminology::IcdMapping> mapping_;
  std::optional<terminology::Lexicon> lexicon_;
};

fs::path model_path(const fs::path& dir, const Cui& cui) { return dir / (cui.str() + ".cmrf"); }

std::map<Cui, filtermodel::ForestModel> load_models(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("model directory not found: " + dir.string());
  std::map<Cui, filtermodel::ForestModel> models;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".cmrf") continue;
    auto model = filtermodel::deserialize_model(pipeline::read_file(entry.path()));
    models.emplace(model.condition_cui, std::move(model));
  }
  return models;
}

pipeline::GoldFeatures load_gold_features(Context& ctx, const std::string& gold_flag,
                                          const std::string& mentions_flag) {
  const auto gold = annotation::load_gold(Context::pick(gold_flag, ctx.cfg.gold, "gold"));
  const auto mentions = pipeline::load_mentions(Context::pick(mentions_flag, ctx.cfg.mentions, "mentions"));
  auto features = pipeline::gold_features(gold, mentions, ctx.cfg.relevance);
  if (features.unmatched > 0)
    warn(std::to_string(features.unmatched) + " gold rows have no extracted mention and were ignored");
  return features;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physical-health comorbidity extraction from clinical notes"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON config file (env COMORBID_CONFIG)");
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--lexicon", g.lexicon, "Lexicon TSV");
  app.add_option("--mapping", g.mapping, "ICD-10 to CUI mapping CSV");
  app.add_option("--threads", g.threads, "Worker threads");

  std::function<void()> action;
  std::string out, corpus_path, mentions_path, annotations_path, gold_path, model_dir, store_path;

  auto* index = app.add_subcommand("index", "Build and save the match index");
  index->add_option("--out", out, "Index file")->required();
  index->callback([&] {
    action = [&] {
      Context ctx(g);
      const auto idx = matcher::MatchIndex::build(ctx.lexicon());
      if (idx.ambiguous() > 0) warn(std::to_string(idx.ambiguous()) + " patterns map to more than one CUI; the smallest CUI was kept");
      pipeline::write_file(out, idx.serialize());
      std::cout << idx.size() << " patterns\n";
    };
  });

  auto* extract = app.add_subcommand("extract", "Extract mentions from a corpus");
  extract->add_option("--corpus", corpus_path, "Corpus JSONL");
  extract->add_option("--out", out, "Mentions JSONL");
  extract->add_option("--models", model_dir, "Directory of condition models to score mentions");
  extract->callback([&] {
    action = [&] {
      Context ctx(g);
      std::optional<corpus::CohortFilter> filter;
      if (!ctx.cfg.index_dates.empty()) {
        if (!ctx.cfg.study_end) throw ValidationError("index_dates needs study_end");
        filter.emplace(corpus::CohortFilter::load(ctx.cfg.index_dates, *ctx.cfg.study_end));
      }
      const auto corpus =
          corpus::ingest_corpus(Context::pick(corpus_path, ctx.cfg.corpus, "corpus"), filter ? &*filter : nullptr);
      pipeline::Extractor ex{
          matcher::MatchIndex::build(ctx.lexicon()),
          context::TriggerMatcher(ctx.cfg.triggers.empty() ? context::TriggerSet::defaults()
                                                           : context::TriggerSet::load(ctx.cfg.triggers)),
          ctx.cfg.abbreviations.empty() ? textproc::AbbreviationList::defaults()
                                        : textproc::AbbreviationList::load(ctx.cfg.abbreviations)};
      auto mentions = pipeline::run_extract(corpus, ex, ctx.cfg.threads);
      if (!model_dir.empty()) pipeline::apply_models(mentions, load_models(model_dir));
      pipeline::write_file(Context::pick(out, ctx.cfg.mentions, "mentions output"),
                           pipeline::serialize_mentions(mentions));
      std::cout << corpus.documents.size() << " documents (" << corpus.excluded << " excluded), "
                << mentions.size() << " mentions\n";
    };
  });

  auto* kappa = app.add_subcommand("kappa", "Inter-annotator agreement per chapter");
  kappa->add_option("--annotations", annotations_path, "Annotation JSONL");
  kappa->add_option("--out", out, "Report JSON (stdout when omitted)");
  kappa->callback([&] {
    action = [&] {
      Context ctx(g);
      const auto records =
          annotation::load_records(Context::pick(annotations_path, ctx.cfg.annotations, "annotations"));
      const auto pairs = annotation::annotator_pairs(records);
      const auto report = annotation::kappa_report(records, pairs, ctx.lexicon().chapter_map());
      const auto text = annotation::to_json(report).dump(2) + "\n";
      if (out.empty()) std::cout << text;
      else pipeline::write_file(out, text);
    };
  });

  auto* gold = app.add_subcommand("gold", "Adjudicate unanimous annotations into a gold file");
  gold->add_option("--annotations", annotations_path, "Annotation JSONL");
  gold->add_option("--out", out, "Gold JSONL");
  gold->callback([&] {
    action = [&] {
      Context ctx(g);
      const auto records =
          annotation::load_records(Context::pick(annotations_path, ctx.cfg.annotations, "annotations"));
      const auto result = annotation::build_gold(records);
      pipeline::write_file(Context::pick(out, ctx.cfg.gold, "gold output"), annotation::serialize_gold(result.gold));
      std::cout << result.gold.size() << " gold, " << result.discarded << " discarded, " << result.under_annotated
                << " under-annotated\n";
    };
  });

  auto* train = app.add_subcommand("train", "Train one filter model per condition");
  train->add_option("--gold", gold_path, "Gold JSONL");
  train->add_option("--mentions", mentions_path, "Mentions JSONL");
  train->add_option("--model-dir", model_dir, "Output directory");
  train->callback([&] {
    action = [&] {
      Context ctx(g);
      const auto seed = ctx.seed();
      const auto features = load_gold_features(ctx, gold_path, mentions_path);
      const auto dir = Context::pick(model_dir, ctx.cfg.model_dir, "model");
      std::size_t trained = 0;
      for (const auto& [cui, instances] : pipeline::by_condition(features.instances)) {
        try {
          // Fold index k is past every CV fold, so the final model never
          // shares a seed with a fold model.
          const auto model = filtermodel::train_forest(instances, ctx.cfg.forest,
                                                       evaluation::forest_seed(seed, cui, ctx.cfg.k), ctx.cfg.threads);
          pipeline::write_file(model_path(dir, cui), filtermodel::serialize_model(model));
          ++trained;
        } catch (const DegenerateDataError&) {
          warn("skipping " + cui.str() + ": single-class gold");
        }
      }
      std::cout << trained << " models written to " << dir.string() << "\n";
    };
  });

  auto* eval = app.add_subcommand("eval", "Cross-validate the filter models");
  eval->add_option("--gold", gold_path, "Gold JSONL");
  eval->add_option("--mentions", mentions_path, "Mentions JSONL");
  eval->add_option("--out-dir", out, "Report directory");
  eval->callback([&] {
    action = [&] {
      Context ctx(g);
      const auto seed = ctx.seed();
      const auto features = load_gold_features(ctx, gold_path, mentions_path);
      const auto report = evaluation::evaluate(features.instances, ctx.cfg.k, ctx.cfg.forest, seed, ctx.cfg.threads);
      for (const auto& s : report.skipped) warn("skipped " + s.cui.str() + " (" + s.reason + ")");
      const auto dir = Context::pick(out, ctx.cfg.report_dir, "report");
      pipeline::write_file(dir / "chapter_metrics.csv", evaluation::to_csv(report));
      pipeline::write_file(dir / "condition_metrics.csv", evaluation::conditions_csv(report));
      pipeline::write_file(dir / "chapter_metrics.txt", evaluation::to_text_table(report));
      std::cout << evaluation::to_text_table(report);
    };
  });

  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  std::string host = "127.0.0.1";
  std::optional<int> port;
  serve->add_option("--corpus", corpus_path, "Corpus JSONL");
  serve->add_option("--mentions", mentions_path, "Mentions JSONL");
  serve->add_option("--store", store_path, "Annotation log (JSONL, appended)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (env COMORBID_PORT)");
  serve->callback([&] {
    action = [&] {
      Context ctx(g);
      auto corpus = corpus::ingest_corpus(Context::pick(corpus_path, ctx.cfg.corpus, "corpus"));
      auto mentions = pipeline::load_mentions(Context::pick(mentions_path, ctx.cfg.mentions, "mentions"));
      std::set<MentionRef> refs;
      for (const auto& m : mentions) refs.insert(ref_of(m));
      const auto log = Context::pick(store_path, ctx.cfg.annotation_store, "annotation store");
      auto store = std::make_shared<annotation::AnnotationStore>(std::move(refs), log);
      annotation::ChapterMap chapters;
      for (const auto& m : mentions) chapters.emplace(m.cui, m.chapter);

      int p = ctx.cfg.port;
      if (const char* env = std::getenv(std::string(service::kPortEnvVar).c_str())) p = std::atoi(env);
      if (port) p = *port;
      service::AnnotationService svc(std::move(corpus), std::move(mentions), store, std::move(chapters));
      const int bound = svc.bind(host, p);
      if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(p));
      std::cout << "listening on " << host << ":" << bound << std::endl;
      svc.listen();
    };
  });

  auto* synth = app.add_subcommand("synth", "Write the bundled synthetic corpus and its annotations");
  std::size_t documents = synthetic::Options{}.documents;
  std::size_t target_bytes = 0;
  synth->add_option("--out-dir", out, "Output directory")->required();
  synth->add_option("--documents", documents, "Number of documents");
  synth->add_option("--bytes", target_bytes, "Generate until the text reaches this size instead");
  synth->callback([&] {
    action = [&] {
      Context ctx(g);
      synthetic::Options opts;
      opts.documents = documents;
      opts.target_bytes = target_bytes;
      const auto syn = synthetic::generate(ctx.seed(), opts);
      const fs::path dir = out;
      pipeline::write_file(dir / "corpus.jsonl", corpus::serialize_corpus(syn.documents));
      pipeline::write_file(dir / "annotations.jsonl", annotation::serialize_records(syn.annotations));
      std::cout << syn.documents.size() << " documents, " << syn.planted.size() << " planted mentions\n";
    };
  });

  auto* fetch = app.add_subcommand("fetch-mapping", "Look up CUIs for ICD-10 codes over SPARQL");
  std::vector<std::string> codes;
  std::string endpoint;
  fetch->add_option("codes", codes, "ICD-10 codes")->required();
  fetch->add_option("--endpoint", endpoint, "SPARQL endpoint (env COMORBID_SPARQL_ENDPOINT)");
  fetch->add_option("--out", out, "Mapping CSV")->required();
  fetch->callback([&] {
    action = [&] {
      if (endpoint.empty())
        if (const char* env = std::getenv(std::string(terminology::kEndpointEnvVar).c_str())) endpoint = env;
      if (endpoint.empty()) throw ValidationError("no SPARQL endpoint given");
      std::vector<IcdCode> parsed;
      for (const auto& c : codes) parsed.emplace_back(c);
      const auto result = terminology::fetch_mappings(endpoint, parsed, terminology::http_transport());
      for (const auto& w : result.warnings) warn(w);
      for (const auto& m : result.misses) warn("no CUI found for " + m.str());
      pipeline::write_file(out, terminology::serialize_mapping(result.mapping));
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    action();
    return 0;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NetworkError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
