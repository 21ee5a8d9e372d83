#include "iyow/providers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <optional>
#include <thread>

#include "iyow/error.hpp"
#include "iyow/util.hpp"

namespace iyow {

void CompletionRequest::validate() const {
  if (prompt.empty()) throw ProviderError("completion request has an empty prompt");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ProviderError("completion temperature must lie in [0, 2]");
  }
  if (n_samples < 1) throw ProviderError("completion request needs n_samples >= 1");
  if (first_sample < 0) throw ProviderError("completion request has a negative sample index");
}

std::string encode_embedding(const std::vector<double>& values) {
  static_assert(sizeof(double) == 8);
  std::string out(values.size() * sizeof(double), '\0');
  if (!values.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

std::vector<double> decode_embedding(std::string_view payload) {
  if (payload.size() % sizeof(double) != 0) throw ProviderError("corrupt cached embedding payload");
  std::vector<double> out(payload.size() / sizeof(double));
  if (!out.empty()) std::memcpy(out.data(), payload.data(), payload.size());
  return out;
}

namespace {

// Runs attempt() until it succeeds, a non-transient error is thrown, or the
// policy's attempt budget is spent. Backoff doubles per attempt with jitter.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, std::string_view what, Fn&& attempt) {
  thread_local Rng jitter(derive_seed(std::hash<std::thread::id>{}(std::this_thread::get_id()), "retry-jitter"));
  std::string last_error;
  const int attempts = std::max(1, policy.max_attempts);
  for (int i = 0; i < attempts; ++i) {
    try {
      return attempt();
    } catch (const TransientProviderError& e) {
      last_error = e.what();
    }
    if (i + 1 < attempts) {
      const double scale = std::ldexp(1.0, i) * (0.5 + 0.5 * jitter.uniform());
      auto delay = std::chrono::duration<double, std::milli>(policy.base_delay.count() * scale);
      delay = std::min(delay, std::chrono::duration<double, std::milli>(policy.max_delay));
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }
  }
  throw RetriesExhaustedError(std::string(what) + ": giving up after " + std::to_string(attempts) +
                              " attempts: " + last_error);
}

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

std::ptrdiff_t clamp_in_flight(std::size_t n) {
  return static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(n, 1, 1024));
}

}  // namespace

// ---------------------------------------------------------------------------

CachingEmbedder::CachingEmbedder(std::shared_ptr<EmbeddingBackend> backend, std::shared_ptr<Cache> cache,
                                 EmbedderOptions options)
    : backend_(std::move(backend)),
      cache_(std::move(cache)),
      options_(std::move(options)),
      in_flight_(clamp_in_flight(options_.max_in_flight)) {
  if (!backend_) throw ProviderError("embedding provider needs a backend");
  if (options_.dimension == 0) throw ProviderError("embedding dimension must be positive");
  if (options_.batch_size == 0) options_.batch_size = 1;
}

std::vector<EmbeddingVector> CachingEmbedder::embed_batch(const std::vector<std::string>& texts) {
  const std::string kind = backend_->kind();
  std::vector<std::optional<std::vector<double>>> found(texts.size());
  std::vector<std::string> keys(texts.size());
  // Unique uncached texts -> positions that need them.
  std::map<std::string, std::vector<std::size_t>> missing;
  std::vector<std::string> missing_order;

  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) throw ProviderError("cannot embed an empty text (position " + std::to_string(i) + ")");
    keys[i] = cache_key(kind, options_.model_id, texts[i], 0.0, 0);
    if (cache_) {
      if (auto hit = cache_->get(keys[i])) {
        found[i] = decode_embedding(hit->payload);
        ++cache_hits_;
        continue;
      }
    }
    auto [it, inserted] = missing.try_emplace(texts[i]);
    if (inserted) missing_order.push_back(texts[i]);
    it->second.push_back(i);
  }

  std::vector<std::vector<std::string>> chunks;
  for (std::size_t i = 0; i < missing_order.size(); i += options_.batch_size) {
    const auto end = std::min(missing_order.size(), i + options_.batch_size);
    chunks.emplace_back(missing_order.begin() + static_cast<std::ptrdiff_t>(i),
                        missing_order.begin() + static_cast<std::ptrdiff_t>(end));
  }

  std::mutex found_mutex;
  parallel_for(chunks.size(), options_.max_in_flight, [&](std::size_t c) {
    const auto& chunk = chunks[c];
    auto vectors = with_retry(options_.retry, "embedding request", [&] {
      SemaphoreGuard guard(in_flight_);
      ++backend_calls_;
      return backend_->fetch(options_.model_id, chunk);
    });
    if (vectors.size() != chunk.size()) {
      throw ProviderError("embedding response has " + std::to_string(vectors.size()) + " vectors for " +
                          std::to_string(chunk.size()) + " inputs");
    }
    for (std::size_t j = 0; j < chunk.size(); ++j) {
      if (vectors[j].size() != options_.dimension) {
        throw DimensionMismatchError("embedding has " + std::to_string(vectors[j].size()) +
                                     " values, configured dimension is " + std::to_string(options_.dimension));
      }
      for (double v : vectors[j]) {
        if (!std::isfinite(v)) throw ProviderError("embedding contains a non-finite value");
      }
      if (cache_) cache_->put(cache_key(kind, options_.model_id, chunk[j], 0.0, 0), encode_embedding(vectors[j]));
      std::lock_guard lock(found_mutex);
      for (std::size_t pos : missing.at(chunk[j])) found[pos] = vectors[j];
    }
  });

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (found[i]->size() != options_.dimension) {
      throw DimensionMismatchError("cached embedding has " + std::to_string(found[i]->size()) +
                                   " values, configured dimension is " + std::to_string(options_.dimension));
    }
    out.push_back({std::move(*found[i]), options_.model_id});
  }
  return out;
}

// ---------------------------------------------------------------------------

CachingChat::CachingChat(std::shared_ptr<ChatBackend> backend, std::shared_ptr<Cache> cache, ChatOptions options)
    : backend_(std::move(backend)),
      cache_(std::move(cache)),
      options_(options),
      in_flight_(clamp_in_flight(options_.max_in_flight)) {
  if (!backend_) throw ProviderError("chat provider needs a backend");
}

std::vector<std::string> CachingChat::complete(const CompletionRequest& request) {
  request.validate();
  const std::string kind = backend_->kind();
  std::vector<std::optional<std::string>> out(static_cast<std::size_t>(request.n_samples));
  std::vector<std::size_t> missing;
  for (int s = 0; s < request.n_samples; ++s) {
    const auto slot = static_cast<std::size_t>(s);
    if (cache_) {
      const auto key = cache_key(kind, request.model_id, request.prompt, request.temperature,
                                 request.first_sample + s);
      if (auto hit = cache_->get(key)) {
        out[slot] = std::move(hit->payload);
        ++cache_hits_;
        continue;
      }
    }
    missing.push_back(slot);
  }

  if (!missing.empty()) {
    auto replies = with_retry(options_.retry, "chat completion", [&] {
      std::vector<std::string> r;
      {
        SemaphoreGuard guard(in_flight_);
        ++backend_calls_;
        r = backend_->fetch(request.model_id, request.prompt, request.temperature,
                            static_cast<int>(missing.size()));
      }
      if (r.size() < missing.size()) {
        throw TransientProviderError("chat response has " + std::to_string(r.size()) + " choices, expected " +
                                     std::to_string(missing.size()));
      }
      for (const auto& text : r) {
        if (trim(text).empty()) throw TransientProviderError("empty completion");
      }
      return r;
    });
    for (std::size_t j = 0; j < missing.size(); ++j) {
      const std::size_t slot = missing[j];
      if (cache_) {
        cache_->put(cache_key(kind, request.model_id, request.prompt, request.temperature,
                              request.first_sample + static_cast<int>(slot)),
                    replies[j]);
      }
      out[slot] = std::move(replies[j]);
    }
  }

  std::vector<std::string> result;
  result.reserve(out.size());
  for (auto& s : out) result.push_back(std::move(*s));
  return result;
}

}  // namespace iyow
