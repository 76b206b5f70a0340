#include "xbrltag/service.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "httplib.h"
#include "json.hpp"
#include "xbrltag/error.h"

namespace xbrltag {

using nlohmann::json;

void ServiceConfig::validate() const {
  if (model_path.empty()) throw ConfigError("service: model path is required");
  if (port < 0 || port > 65535) throw ConfigError("service: port must lie in [0, 65535]");
  if (default_k < 1) throw ConfigError("service: default_k must be >= 1");
  if (max_sentence_words < 1) throw ConfigError("service: max_sentence_words must be >= 1");
  if (max_body_bytes < 1) throw ConfigError("service: max_body_bytes must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parse_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' needs an integer, got '" + value + "'");
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ApiResponse json_response(const json& body) { return {200, body.dump()}; }

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
  return {status, error_body(code, message)};
}

struct BadRequest {
  int status;
  std::string code;
  std::string message;
};

json parse_body(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw BadRequest{400, "malformed_body", "request body is not valid JSON"};
  }
  if (!j.is_object()) throw BadRequest{400, "malformed_body", "request body must be a JSON object"};
  return j;
}

std::vector<std::string> request_tokens(const json& j, std::size_t max_words) {
  if (!j.contains("tokens") || !j["tokens"].is_array()) {
    throw BadRequest{400, "malformed_body", "'tokens' must be an array of strings"};
  }
  std::vector<std::string> tokens;
  for (const auto& t : j["tokens"]) {
    if (!t.is_string() || t.get_ref<const std::string&>().empty()) {
      throw BadRequest{400, "malformed_body", "'tokens' must hold nonempty strings"};
    }
    tokens.push_back(t.get<std::string>());
  }
  if (tokens.empty()) throw BadRequest{400, "empty_sentence", "'tokens' is empty"};
  if (tokens.size() > max_words) {
    throw BadRequest{422, "sentence_too_long",
                     "sentence has " + std::to_string(tokens.size()) + " words; the limit is " +
                         std::to_string(max_words)};
  }
  return tokens;
}

std::optional<long long> integer_field(const json& j, const char* name, bool required) {
  if (!j.contains(name) || j[name].is_null()) {
    if (required) throw BadRequest{400, "malformed_body", std::string("'") + name + "' is required"};
    return std::nullopt;
  }
  if (!j[name].is_number_integer()) {
    throw BadRequest{400, "malformed_body", std::string("'") + name + "' must be an integer"};
  }
  return j[name].get<long long>();
}

template <typename Fn>
ApiResponse guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const BadRequest& e) {
    return error_response(e.status, e.code, e.message);
  } catch (const std::exception& e) {
    std::cerr << "xbrltag serve: internal error: " << e.what() << '\n';
    return error_response(500, "internal", "internal error");
  }
}

}  // namespace

std::string error_body(const std::string& code, const std::string& message) {
  return json{{"error", {{"code", code}, {"message", message}}}}.dump();
}

ServiceConfig load_service_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open service config " + path);
  ServiceConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("service config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "model") {
      c.model_path = value;
    } else if (key == "vocab") {
      c.vocab_path = value;
    } else if (key == "shapes") {
      c.shapes_path = value;
    } else if (key == "bind") {
      c.bind = value;
    } else if (key == "port") {
      c.port = static_cast<int>(parse_integer(key, value));
    } else if (key == "default_k") {
      c.default_k = static_cast<int>(parse_integer(key, value));
    } else if (key == "max_sentence_words") {
      const auto v = parse_integer(key, value);
      if (v < 1) throw ConfigError("config: max_sentence_words must be >= 1");
      c.max_sentence_words = static_cast<std::size_t>(v);
    } else if (key == "max_body_bytes") {
      const auto v = parse_integer(key, value);
      if (v < 1) throw ConfigError("config: max_body_bytes must be >= 1");
      c.max_body_bytes = static_cast<std::size_t>(v);
    } else {
      throw ConfigError("service config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return c;
}

void apply_env_overrides(ServiceConfig& config) {
  if (const char* bind = std::getenv("XBRLTAG_BIND"); bind && *bind) config.bind = bind;
  if (const char* port = std::getenv("XBRLTAG_PORT"); port && *port) {
    config.port = static_cast<int>(parse_integer("XBRLTAG_PORT", port));
  }
}

TaggingService::TaggingService(Tagger tagger, ServiceConfig config)
    : tagger_(std::move(tagger)), config_(std::move(config)), fingerprint_(tagger_.model().fingerprint()) {
  if (config_.default_k < 1) throw ConfigError("service: default_k must be >= 1");
}

TaggingService TaggingService::from_config(const ServiceConfig& config) {
  config.validate();
  TaggerModel model = load_model(config.model_path);
  std::optional<SubwordVocab> vocab;
  std::optional<ShapeVocab> shapes;
  if (!config.vocab_path.empty()) vocab = SubwordVocab::load(config.vocab_path);
  if (!config.shapes_path.empty()) shapes = ShapeVocab::load(config.shapes_path);
  return TaggingService(Tagger(std::move(model), std::move(vocab), std::move(shapes)), config);
}

ApiResponse TaggingService::healthz() const {
  return json_response({{"status", "ok"}, {"model_fingerprint", hex64(fingerprint_)}});
}

ApiResponse TaggingService::tags() const { return json_response({{"tags", tagger_.labelset().tags()}}); }

ApiResponse TaggingService::tag(const std::string& body) const {
  return guarded([&] {
    const json j = parse_body(body);
    const auto tokens = request_tokens(j, config_.max_sentence_words);
    const auto labels = predict(tagger_, tokens);
    json spans = json::array();
    for (const auto& s : spans_from_labels_lenient(labels)) {
      spans.push_back({{"start", s.start}, {"end", s.end}, {"tag", s.tag}});
    }
    return json_response({{"labels", labels}, {"spans", spans}});
  });
}

ApiResponse TaggingService::recommend(const std::string& body) const {
  return guarded([&] {
    const json j = parse_body(body);
    const auto tokens = request_tokens(j, config_.max_sentence_words);
    const long long index = *integer_field(j, "index", true);
    const long long k = integer_field(j, "k", false).value_or(config_.default_k);
    if (index < 0 || static_cast<std::size_t>(index) >= tokens.size()) {
      throw BadRequest{400, "index_out_of_range",
                       "index must lie in [0, " + std::to_string(tokens.size() - 1) + "]"};
    }
    if (k < 1) throw BadRequest{400, "k_out_of_range", "k must be >= 1"};
    const std::size_t tag_count = tagger_.labelset().tag_count();
    const std::size_t effective_k = std::min(static_cast<std::size_t>(k), tag_count);
    const auto prepared = tagger_.prepare(tokens);
    const auto candidates = topk_tags(tagger_, tokens, static_cast<std::size_t>(index), effective_k);
    json list = json::array();
    for (const auto& c : candidates) list.push_back({{"tag", c.tag}, {"probability", c.probability}});
    return json_response({{"candidates", list}, {"policy_view", prepared.normalized[static_cast<std::size_t>(index)]}});
  });
}

void TaggingService::mount(httplib::Server& server) const {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_header(kSchemaHeader, std::to_string(kSchemaVersion));
    res.set_content(r.body, "application/json");
  };
  server.set_payload_max_length(config_.max_body_bytes);
  server.Get("/healthz", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, healthz()); });
  server.Get("/api/tags", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, tags()); });
  server.Post("/api/tag", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, tag(req.body));
  });
  server.Post("/api/recommend", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, recommend(req.body));
  });
  server.set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    reply(res, error_response(500, "internal", "internal error"));
  });
  server.set_error_handler([reply](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    switch (res.status) {
      case 413:
        reply(res, error_response(413, "body_too_large", "request body exceeds the configured limit"));
        break;
      case 404:
        reply(res, error_response(404, "not_found", "no such endpoint"));
        break;
      default:
        reply(res, error_response(res.status, "http_error", "request failed"));
    }
  });
}

int serve(const TaggingService& service) {
  httplib::Server server;
  service.mount(server);
  const auto& c = service.config();
  std::cerr << "xbrltag serve: listening on " << c.bind << ':' << c.port << " (model " << hex64(service.model_fingerprint())
            << ")\n";
  if (!server.listen(c.bind, c.port)) {
    std::cerr << "xbrltag serve: cannot bind " << c.bind << ':' << c.port << '\n';
    return 1;
  }
  return 0;
}

}  // namespace xbrltag
