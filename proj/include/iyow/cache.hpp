#pragma once

// Content-addressed response cache for provider calls.

#include <array>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

namespace iyow {

struct CacheEntry {
  std::string key;
  std::string payload;
  std::filesystem::file_time_type created_at;
};

// SHA-256 over a canonical JSON encoding of the request identity. The input
// is hashed byte-for-byte; no whitespace normalization.
std::string cache_key(std::string_view provider_kind, std::string_view model_id,
                      std::string_view input, double temperature, int sample_index);

class Cache {
 public:
  virtual ~Cache() = default;
  virtual std::optional<CacheEntry> get(const std::string& key) const = 0;
  virtual void put(const std::string& key, std::string_view payload) = 0;
};

// One file per entry under <root>/<key[0:2]>/<key>. Writes are atomic
// renames, serialized per key stripe; readers never take a write lock.
class DirectoryCache : public Cache {
 public:
  explicit DirectoryCache(std::filesystem::path root);
  std::optional<CacheEntry> get(const std::string& key) const override;
  void put(const std::string& key, std::string_view payload) override;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;
  std::filesystem::path root_;
  mutable std::array<std::mutex, 64> stripes_;
};

class MemoryCache : public Cache {
 public:
  std::optional<CacheEntry> get(const std::string& key) const override;
  void put(const std::string& key, std::string_view payload) override;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, CacheEntry> entries_;
};

}  // namespace iyow
