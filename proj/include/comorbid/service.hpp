#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "comorbid/annotation.hpp"
#include "comorbid/corpus.hpp"
#include "comorbid/types.hpp"

namespace httplib {
class Server;
}

namespace comorbid::service {

inline constexpr std::string_view kPortEnvVar = "COMORBID_PORT";

/// HTTP/JSON annotation service backing the web annotator.
///
///   GET  /api/tasks/next?annotator=ID
///   POST /api/annotations
///   GET  /api/agreement
///   GET  /api/progress?annotator=ID
///   GET  /api/mentions/{doc_id}
///   GET  /api/export
///
/// Errors are `{"error": {"code": ..., "message": ...}}` with a 4xx status.
/// Schemas are in docs/api.md.
class AnnotationService {
 public:
  AnnotationService(corpus::Corpus corpus, std::vector<Mention> mentions,
                    std::shared_ptr<annotation::AnnotationStore> store,
                    annotation::ChapterMap chapters);
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Binds to `host:port`; port 0 picks a free port. Returns the bound port
  /// or -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves until `stop()`.
  bool listen();
  void stop();

  /// Next mention in extraction order that `annotator` has not judged, as a
  /// task payload, or null when the queue is exhausted.
  nlohmann::json next_task(const std::string& annotator) const;
  nlohmann::json progress(const std::string& annotator) const;
  nlohmann::json agreement() const;
  /// `{doc_id, text, mentions}`; throws ReferenceError for an unknown document.
  nlohmann::json document_mentions(const std::string& doc_id) const;

  const annotation::AnnotationStore& store() const { return *store_; }

 private:
  void install_routes();

  corpus::Corpus corpus_;
  std::vector<Mention> mentions_;
  std::map<std::string, std::size_t> doc_index_;
  std::map<std::string, std::vector<std::size_t>> mentions_by_doc_;
  std::shared_ptr<annotation::AnnotationStore> store_;
  annotation::ChapterMap chapters_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace comorbid::service
