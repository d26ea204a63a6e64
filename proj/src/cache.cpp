#include "qax/cache.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "qax/error.hpp"

namespace qax::cache {
namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

std::string cache_key(std::string_view kind, std::string_view provider_id,
                      std::string_view source_lang, std::string_view target_lang,
                      std::string_view text) {
  std::string buf;
  for (std::string_view field : {kind, provider_id, source_lang, target_lang, text}) {
    buf += std::to_string(field.size());
    buf.push_back(':');
    buf.append(field);
  }
  return sha256_hex(buf);
}

namespace {

bool is_key_name(const std::string& name) {
  if (name.size() != 64) return false;
  for (char c : name) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

std::optional<CacheEntry> read_entry(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::json j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("payload") || !j.contains("kind")) {
    return std::nullopt;
  }
  CacheEntry e;
  e.key = j.value("key", file.filename().string());
  e.kind = j["kind"].get<std::string>();
  e.payload = j["payload"];
  e.created_at = j.value("created_at", std::int64_t{0});
  return e;
}

}  // namespace

DiskCache::DiskCache(fs::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) fs::create_directories(dir_);
}

std::optional<CacheEntry> DiskCache::get(const std::string& key) const {
  if (!enabled()) return std::nullopt;
  auto e = read_entry(dir_ / key);
  if (e && e->key != key) return std::nullopt;
  return e;
}

void DiskCache::put(const CacheEntry& entry) const {
  if (!enabled()) return;
  static std::atomic<std::uint64_t> counter{0};
  const nlohmann::json j = {{"key", entry.key},
                            {"kind", entry.kind},
                            {"created_at", entry.created_at},
                            {"payload", entry.payload}};
  std::ostringstream tmp_name;
  tmp_name << entry.key << ".tmp." << std::this_thread::get_id() << "." << counter++;
  const fs::path tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache entry", tmp.string());
    out << j.dump();
  }
  std::error_code ec;
  fs::rename(tmp, dir_ / entry.key, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot commit cache entry: " + ec.message(), (dir_ / entry.key).string());
  }
}

CacheSummary inspect_cache(const fs::path& dir) {
  CacheSummary s;
  if (!fs::exists(dir)) return s;
  for (const auto& de : fs::directory_iterator(dir)) {
    if (!de.is_regular_file() || !is_key_name(de.path().filename().string())) continue;
    ++s.entries;
    s.bytes += de.file_size();
    auto e = read_entry(de.path());
    if (!e) {
      ++s.unreadable;
    } else if (e->kind == "translate") {
      ++s.translations;
    } else if (e->kind == "embed") {
      ++s.embeddings;
    }
  }
  return s;
}

std::size_t clear_cache(const fs::path& dir) {
  std::size_t removed = 0;
  if (!fs::exists(dir)) return removed;
  for (const auto& de : fs::directory_iterator(dir)) {
    const std::string name = de.path().filename().string();
    if (!de.is_regular_file()) continue;
    if (is_key_name(name) || name.find(".tmp.") != std::string::npos) {
      fs::remove(de.path());
      if (is_key_name(name)) ++removed;
    }
  }
  return removed;
}

}  // namespace qax::cache
