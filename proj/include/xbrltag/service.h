#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "xbrltag/tagger.h"

namespace httplib {
class Server;
}

namespace xbrltag {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kSchemaHeader = "X-Schema-Version";

// Config file: one `key = value` per line, '#' starts a comment. Keys:
//   model, vocab, shapes, bind, port, default_k, max_sentence_words,
//   max_body_bytes
// XBRLTAG_BIND and XBRLTAG_PORT override bind and port.
struct ServiceConfig {
  std::string model_path;
  std::string vocab_path;   // required for subword models
  std::string shapes_path;  // required for shape-policy models
  std::string bind = "127.0.0.1";
  int port = 8080;
  int default_k = 10;
  std::size_t max_sentence_words = 512;
  std::size_t max_body_bytes = 1 << 20;

  void validate() const;
};

ServiceConfig load_service_config(const std::string& path);
void apply_env_overrides(ServiceConfig& config);

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

// Request handling over one immutable model. Handlers are const and safe to
// call concurrently.
class TaggingService {
 public:
  TaggingService(Tagger tagger, ServiceConfig config);

  // Loads model and vocabularies named by the config; throws when they are
  // missing or their fingerprints disagree.
  static TaggingService from_config(const ServiceConfig& config);

  const Tagger& tagger() const { return tagger_; }
  const ServiceConfig& config() const { return config_; }
  std::uint64_t model_fingerprint() const { return fingerprint_; }

  ApiResponse healthz() const;
  ApiResponse tags() const;
  ApiResponse tag(const std::string& body) const;
  ApiResponse recommend(const std::string& body) const;

  // Registers the routes, size limit and error handlers on `server`.
  void mount(httplib::Server& server) const;

 private:
  Tagger tagger_;
  ServiceConfig config_;
  std::uint64_t fingerprint_ = 0;
};

std::string error_body(const std::string& code, const std::string& message);

// Blocks serving `service` on config().bind / config().port.
int serve(const TaggingService& service);

}  // namespace xbrltag
