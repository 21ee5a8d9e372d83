#pragma once

// Embedding and chat-completion clients. A backend performs one uncached
// request; the caching wrappers add content-addressed caching, batching,
// retries and the in-flight limit on top of any backend.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include "iyow/cache.hpp"

namespace iyow {

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;
};

struct CompletionRequest {
  std::string model_id;
  std::string prompt;
  double temperature = 0.7;
  int n_samples = 1;
  // Sample slots are [first_sample, first_sample + n_samples); each slot is
  // cached independently.
  int first_sample = 0;

  void validate() const;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  // Distinguishes cache namespaces, e.g. "http-embedding" or "mock-embedding/seed=1/dim=8".
  virtual std::string kind() const = 0;
  virtual std::vector<std::vector<double>> fetch(const std::string& model_id,
                                                 const std::vector<std::string>& texts) = 0;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string kind() const = 0;
  virtual std::vector<std::string> fetch(const std::string& model_id, const std::string& prompt,
                                         double temperature, int n) = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;
  virtual std::size_t dimension() const = 0;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::vector<std::string> complete(const CompletionRequest& request) = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};
};

struct EmbedderOptions {
  std::string model_id = "text-embedding-3-large";
  std::size_t dimension = 3072;
  std::size_t batch_size = 128;
  std::size_t max_in_flight = 8;
  RetryPolicy retry;
};

class CachingEmbedder final : public EmbeddingProvider {
 public:
  // cache may be null, in which case every call reaches the backend.
  CachingEmbedder(std::shared_ptr<EmbeddingBackend> backend, std::shared_ptr<Cache> cache,
                  EmbedderOptions options);

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
  std::size_t dimension() const override { return options_.dimension; }

  // Requests sent to the backend, retries included.
  std::size_t backend_calls() const { return backend_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }

 private:
  std::shared_ptr<EmbeddingBackend> backend_;
  std::shared_ptr<Cache> cache_;
  EmbedderOptions options_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

struct ChatOptions {
  std::size_t max_in_flight = 8;
  RetryPolicy retry;
};

class CachingChat final : public ChatProvider {
 public:
  CachingChat(std::shared_ptr<ChatBackend> backend, std::shared_ptr<Cache> cache,
              ChatOptions options = {});

  std::vector<std::string> complete(const CompletionRequest& request) override;

  std::size_t backend_calls() const { return backend_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }

 private:
  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<Cache> cache_;
  ChatOptions options_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

// Lossless payload encodings used by the cache.
std::string encode_embedding(const std::vector<double>& values);
std::vector<double> decode_embedding(std::string_view payload);

// --- HTTP backends --------------------------------------------------------

struct HttpEndpoint {
  // e.g. "https://api.openai.com/v1"; "/embeddings" or "/chat/completions" is appended.
  std::string base_url;
  // Name of the environment variable holding the bearer token. Read lazily,
  // so fully cached runs need no credential.
  std::string credential_env;
  std::chrono::seconds timeout{120};
};

std::shared_ptr<EmbeddingBackend> make_http_embedding_backend(HttpEndpoint endpoint);
std::shared_ptr<ChatBackend> make_http_chat_backend(HttpEndpoint endpoint);

std::string embedding_request_body(const std::string& model_id, const std::vector<std::string>& texts);
std::vector<std::vector<double>> parse_embedding_response(const std::string& body);
std::string chat_request_body(const std::string& model_id, const std::string& prompt, double temperature,
                              int n);
std::vector<std::string> parse_chat_response(const std::string& body);

// --- Mock backends --------------------------------------------------------

// Deterministic text -> vector map. Each lowercase alphanumeric token
// contributes a seeded Gaussian direction and the full text adds a small
// unique component; the sum is normalized to unit length. Equal texts give
// equal vectors and texts sharing words give correlated vectors.
std::shared_ptr<EmbeddingBackend> make_mock_embedding_backend(std::uint64_t seed, std::size_t dimension);
std::shared_ptr<CachingEmbedder> mock_embedder(std::uint64_t seed, std::size_t dimension,
                                               std::shared_ptr<Cache> cache = nullptr);

// Ordered theme -> keywords table.
using KeywordRules = std::vector<std::pair<std::string, std::vector<std::string>>>;

// Reply of the keyword oracle. Annotation prompts (PROPERTY/TEXT) get
// "Yes." iff a keyword of the property occurs in the text, case-insensitive.
// Interpretation prompts (POSITIVE/NEGATIVE SAMPLES) get the rule theme that
// best separates positives from negatives, formatted as `- "<theme>"`.
// Anything else throws ProviderError.
std::string keyword_reply(const KeywordRules& rules, const std::string& prompt);

std::shared_ptr<ChatBackend> make_keyword_chat_backend(KeywordRules rules);
std::shared_ptr<CachingChat> mock_annotator(KeywordRules rules, std::shared_ptr<Cache> cache = nullptr);

// Returns scripted replies in order; throws once the script is exhausted.
class ScriptedChatBackend final : public ChatBackend {
 public:
  explicit ScriptedChatBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string kind() const override { return "scripted-chat"; }
  std::vector<std::string> fetch(const std::string& model_id, const std::string& prompt,
                                 double temperature, int n) override;
  std::vector<std::string> prompts() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  std::vector<std::string> prompts_;
};

}  // namespace iyow
