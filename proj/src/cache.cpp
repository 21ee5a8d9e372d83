#include "iyow/cache.hpp"

#include <nlohmann/json.hpp>

#include <functional>

#include "iyow/error.hpp"
#include "iyow/util.hpp"

namespace iyow {

std::string cache_key(std::string_view provider_kind, std::string_view model_id,
                      std::string_view input, double temperature, int sample_index) {
  nlohmann::json canonical = nlohmann::json::array(
      {std::string(provider_kind), std::string(model_id), std::string(input),
       format_double(temperature), sample_index});
  return sha256_hex(canonical.dump());
}

DirectoryCache::DirectoryCache(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::filesystem::path DirectoryCache::path_for(const std::string& key) const {
  if (key.size() < 3) throw Error("cache key too short");
  return root_ / key.substr(0, 2) / key;
}

std::optional<CacheEntry> DirectoryCache::get(const std::string& key) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  CacheEntry e;
  e.key = key;
  e.payload = read_file(path);
  e.created_at = std::filesystem::last_write_time(path, ec);
  return e;
}

void DirectoryCache::put(const std::string& key, std::string_view payload) {
  const auto path = path_for(key);
  std::lock_guard lock(stripes_[std::hash<std::string>{}(key) % stripes_.size()]);
  write_file_atomic(path, payload);
}

std::optional<CacheEntry> MemoryCache::get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void MemoryCache::put(const std::string& key, std::string_view payload) {
  std::unique_lock lock(mutex_);
  entries_[key] = CacheEntry{key, std::string(payload), std::filesystem::file_time_type::clock::now()};
}

std::size_t MemoryCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace iyow
