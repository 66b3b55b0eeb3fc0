#include "comorbid/service.hpp"

#include <httplib.h>

#include "comorbid/error.hpp"
#include "comorbid/pipeline.hpp"
#include "comorbid/textproc.hpp"
#include "comorbid/unicode.hpp"

namespace comorbid::service {

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  res.status = status;
  nlohmann::json body = {{"error", {{"code", code}, {"message", message}}}};
  res.set_content(body.dump(), kJson);
}

void send_json(httplib::Response& res, const nlohmann::json& body) { res.set_content(body.dump(), kJson); }

}  // namespace

AnnotationService::AnnotationService(corpus::Corpus corpus, std::vector<Mention> mentions,
                                     std::shared_ptr<annotation::AnnotationStore> store,
                                     annotation::ChapterMap chapters)
    : corpus_(std::move(corpus)),
      mentions_(std::move(mentions)),
      store_(std::move(store)),
      chapters_(std::move(chapters)),
      server_(std::make_unique<httplib::Server>()) {
  if (!store_) throw ArgumentError("annotation service needs a store");
  for (std::size_t i = 0; i < corpus_.documents.size(); ++i) doc_index_.emplace(corpus_.documents[i].doc_id, i);
  for (std::size_t i = 0; i < mentions_.size(); ++i) {
    if (!doc_index_.count(mentions_[i].doc_id))
      throw ValidationError("mention refers to unknown document '" + mentions_[i].doc_id + "'");
    mentions_by_doc_[mentions_[i].doc_id].push_back(i);
  }
  install_routes();
}

AnnotationService::~AnnotationService() { stop(); }

int AnnotationService::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool AnnotationService::listen() { return server_->listen_after_bind(); }

void AnnotationService::stop() {
  if (server_) server_->stop();
}

nlohmann::json AnnotationService::next_task(const std::string& annotator) const {
  for (const auto& m : mentions_) {
    const auto ref = ref_of(m);
    if (!store_->has_mention(ref) || store_->version_of(ref, annotator) != 0) continue;

    const auto& doc = corpus_.documents[doc_index_.at(m.doc_id)];
    const auto text = unicode::decode(doc.text);
    const auto sentences = textproc::segment_sentences(std::u32string_view(text));
    std::size_t from = m.start, to = m.end;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      const bool near = s + 1 >= m.sentence_index && s <= m.sentence_index + 1;
      if (!near) continue;
      from = std::min(from, sentences[s].start);
      to = std::max(to, sentences[s].end);
    }
    nlohmann::json task;
    task["mention"] = pipeline::to_json(m);
    task["document"] = {{"doc_id", doc.doc_id}, {"patient_id", doc.patient_id}, {"date", corpus::format_date(doc.date)}};
    task["context"] = {{"text", unicode::encode(std::u32string_view(text).substr(from, to - from))},
                       {"start", from},
                       {"end", to}};
    task["version"] = 0;
    return {{"task", task}};
  }
  return {{"task", nullptr}};
}

nlohmann::json AnnotationService::progress(const std::string& annotator) const {
  std::size_t total = 0, done = 0;
  for (const auto& m : mentions_) {
    const auto ref = ref_of(m);
    if (!store_->has_mention(ref)) continue;
    ++total;
    if (store_->version_of(ref, annotator) != 0) ++done;
  }
  return {{"annotator", annotator}, {"done", done}, {"remaining", total - done}, {"total", total}};
}

nlohmann::json AnnotationService::agreement() const {
  const auto records = store_->records();
  const auto pairs = annotation::annotator_pairs(records);
  return annotation::to_json(annotation::kappa_report(records, pairs, chapters_));
}

nlohmann::json AnnotationService::document_mentions(const std::string& doc_id) const {
  auto it = doc_index_.find(doc_id);
  if (it == doc_index_.end()) throw ReferenceError("unknown document '" + doc_id + "'");
  nlohmann::json list = nlohmann::json::array();
  if (auto m = mentions_by_doc_.find(doc_id); m != mentions_by_doc_.end())
    for (auto i : m->second) list.push_back(pipeline::to_json(mentions_[i]));
  return {{"doc_id", doc_id}, {"text", corpus_.documents[it->second].text}, {"mentions", list}};
}

void AnnotationService::install_routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  auto annotator_param = [](const httplib::Request& req, httplib::Response& res) -> std::optional<std::string> {
    auto id = req.get_param_value("annotator");
    if (id.empty()) {
      send_error(res, 400, "missing_annotator", "query parameter 'annotator' is required");
      return std::nullopt;
    }
    return id;
  };

  srv.Get("/api/tasks/next", [this, annotator_param](const httplib::Request& req, httplib::Response& res) {
    if (auto id = annotator_param(req, res)) send_json(res, next_task(*id));
  });

  srv.Get("/api/progress", [this, annotator_param](const httplib::Request& req, httplib::Response& res) {
    if (auto id = annotator_param(req, res)) send_json(res, progress(*id));
  });

  srv.Get("/api/agreement", [this](const httplib::Request&, httplib::Response& res) { send_json(res, agreement()); });

  srv.Get(R"(/api/mentions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, document_mentions(req.matches[1].str()));
    } catch (const ReferenceError& e) {
      send_error(res, 404, "unknown_document", e.what());
    }
  });

  srv.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
    const auto records = store_->records();
    res.set_content(annotation::serialize_records(records), "application/x-ndjson");
  });

  srv.Post("/api/annotations", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      return send_error(res, 400, "bad_json", e.what());
    }
    annotation::AnnotationRecord record;
    std::optional<std::uint64_t> expected;
    try {
      record = annotation::record_from_json(body);
      if (body.contains("version") && !body["version"].is_null()) expected = body["version"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      return send_error(res, 400, "invalid_record", e.what());
    } catch (const Error& e) {
      return send_error(res, 400, "invalid_record", e.what());
    }
    if (record.annotator_id.empty()) return send_error(res, 400, "invalid_record", "annotator_id must not be empty");
    try {
      const auto version = store_->record(record, expected);
      send_json(res, {{"version", version}, {"record", annotation::to_json(record)}});
    } catch (const ReferenceError& e) {
      send_error(res, 404, "unknown_mention", e.what());
    } catch (const ConflictError& e) {
      send_error(res, 409, "version_conflict", e.what());
    } catch (const IoError& e) {
      send_error(res, 500, "store_write_failed", e.what());
    }
  });
}

}  // namespace comorbid::service
