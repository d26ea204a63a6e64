#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace qax::cache {

std::string sha256_hex(std::string_view bytes);

// Digest of the (kind, provider, source, target, text) tuple. Fields are
// length-prefixed so no two tuples share an encoding.
std::string cache_key(std::string_view kind, std::string_view provider_id,
                      std::string_view source_lang, std::string_view target_lang,
                      std::string_view text);

struct CacheEntry {
  std::string key;
  std::string kind;
  nlohmann::json payload;
  std::int64_t created_at = 0;  // unix seconds
};

// One file per entry, named by key. Writes go through a temp file and a
// rename so readers never see a partial entry. An empty directory path
// disables the cache.
class DiskCache {
 public:
  DiskCache() = default;
  explicit DiskCache(std::filesystem::path dir);

  bool enabled() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  std::optional<CacheEntry> get(const std::string& key) const;
  void put(const CacheEntry& entry) const;

 private:
  std::filesystem::path dir_;
};

struct CacheSummary {
  std::size_t entries = 0;
  std::size_t translations = 0;
  std::size_t embeddings = 0;
  std::size_t unreadable = 0;
  std::uintmax_t bytes = 0;
};

CacheSummary inspect_cache(const std::filesystem::path& dir);
// Returns the number of entries removed.
std::size_t clear_cache(const std::filesystem::path& dir);

}  // namespace qax::cache
