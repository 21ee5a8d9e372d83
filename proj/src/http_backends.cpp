#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>

#include "iyow/error.hpp"
#include "iyow/providers.hpp"

namespace iyow {

using nlohmann::json;

std::string embedding_request_body(const std::string& model_id, const std::vector<std::string>& texts) {
  return json{{"model", model_id}, {"input", texts}}.dump();
}

std::vector<std::vector<double>> parse_embedding_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProviderError(std::string("embedding response is not JSON: ") + e.what());
  }
  if (!j.contains("data") || !j["data"].is_array()) throw ProviderError("embedding response lacks 'data'");
  std::vector<std::vector<double>> out;
  out.reserve(j["data"].size());
  for (const auto& item : j["data"]) {
    if (!item.contains("embedding") || !item["embedding"].is_array()) {
      throw ProviderError("embedding response item lacks 'embedding'");
    }
    out.push_back(item["embedding"].get<std::vector<double>>());
  }
  // Honor explicit indices when the service reorders items.
  bool indexed = !j["data"].empty();
  for (const auto& item : j["data"]) indexed = indexed && item.contains("index") && item["index"].is_number_integer();
  if (indexed) {
    std::vector<std::vector<double>> ordered(out.size());
    std::size_t i = 0;
    for (const auto& item : j["data"]) {
      const auto idx = item["index"].get<std::size_t>();
      if (idx >= ordered.size() || !ordered[idx].empty()) throw ProviderError("embedding response has bad indices");
      ordered[idx] = std::move(out[i++]);
    }
    return ordered;
  }
  return out;
}

std::string chat_request_body(const std::string& model_id, const std::string& prompt, double temperature, int n) {
  return json{{"model", model_id},
              {"temperature", temperature},
              {"n", n},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}}
      .dump();
}

std::vector<std::string> parse_chat_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProviderError(std::string("chat response is not JSON: ") + e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array()) throw ProviderError("chat response lacks 'choices'");
  std::vector<std::string> out;
  for (const auto& c : j["choices"]) {
    const auto& content = c.value("message", json::object()).value("content", json());
    out.push_back(content.is_string() ? content.get<std::string>() : std::string());
  }
  return out;
}

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  if (path_start == std::string::npos) {
    p.origin = url;
  } else {
    p.origin = url.substr(0, path_start);
    p.path = url.substr(path_start);
  }
  while (!p.path.empty() && p.path.back() == '/') p.path.pop_back();
  return p;
}

std::string read_credential(const std::string& env) {
  if (env.empty()) return {};
  const char* v = std::getenv(env.c_str());
  if (!v || !*v) throw AuthenticationError("credential environment variable '" + env + "' is not set");
  return v;
}

std::string post_json(const HttpEndpoint& endpoint, const std::string& suffix, const std::string& body) {
  const ParsedUrl url = parse_base_url(endpoint.base_url);
  const std::string token = read_credential(endpoint.credential_env);
  httplib::Client client(url.origin);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout));
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
  auto res = client.Post(url.path + suffix, headers, body, "application/json");
  if (!res) {
    throw TransientProviderError("request to " + endpoint.base_url + suffix + " failed: " +
                                 httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 401 || status == 403) {
    throw AuthenticationError("authentication failed (HTTP " + std::to_string(status) + ")");
  }
  if (status == 429 || status >= 500 || status == 408) {
    throw TransientProviderError("transient HTTP " + std::to_string(status));
  }
  if (status < 200 || status >= 300) {
    throw ProviderError("HTTP " + std::to_string(status) + ": " + res->body.substr(0, 500));
  }
  return res->body;
}

class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(HttpEndpoint e) : endpoint_(std::move(e)) {}
  std::string kind() const override { return "http-embedding"; }
  std::vector<std::vector<double>> fetch(const std::string& model_id, const std::vector<std::string>& texts) override {
    return parse_embedding_response(post_json(endpoint_, "/embeddings", embedding_request_body(model_id, texts)));
  }

 private:
  HttpEndpoint endpoint_;
};

class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpEndpoint e) : endpoint_(std::move(e)) {}
  std::string kind() const override { return "http-chat"; }
  std::vector<std::string> fetch(const std::string& model_id, const std::string& prompt, double temperature,
                                 int n) override {
    return parse_chat_response(
        post_json(endpoint_, "/chat/completions", chat_request_body(model_id, prompt, temperature, n)));
  }

 private:
  HttpEndpoint endpoint_;
};

}  // namespace

std::shared_ptr<EmbeddingBackend> make_http_embedding_backend(HttpEndpoint endpoint) {
  parse_base_url(endpoint.base_url);
  return std::make_shared<HttpEmbeddingBackend>(std::move(endpoint));
}

std::shared_ptr<ChatBackend> make_http_chat_backend(HttpEndpoint endpoint) {
  parse_base_url(endpoint.base_url);
  return std::make_shared<HttpChatBackend>(std::move(endpoint));
}

}  // namespace iyow
