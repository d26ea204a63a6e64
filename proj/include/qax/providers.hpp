#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qax/cache.hpp"

namespace qax::providers {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

// dot(u, v) / (|u| |v|). Throws DimensionMismatch or ZeroVector.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

// Offline stand-in for a sentence encoder: counts of character 1-, 2- and
// 3-grams of the normalized text, hashed into kTestEmbedderDim buckets by
// 64-bit FNV-1a whose offset basis is xor-ed with kTestEmbedderSeed, then
// L2-normalized. Empty text maps to e_0.
inline constexpr std::size_t kTestEmbedderDim = 256;
inline constexpr std::uint64_t kTestEmbedderSeed = 0x5141584e4752414dULL;  // "QAXNGRAM"
EmbeddingVector test_embedder(std::string_view text);

enum class TranslatorKind { Identity, Http };
enum class EmbedderKind { Test, Http };

struct ProviderConfig {
  std::string translate_endpoint;
  std::string embed_endpoint;
  std::string source_lang = "en";
  std::string target_lang = "am";
  int max_in_flight = 8;
  int retry_max = 5;
  int retry_base_ms = 250;
  std::string cache_dir;
  TranslatorKind translator = TranslatorKind::Identity;
  EmbedderKind embedder = EmbedderKind::Test;
  // Expected vector length from the embed endpoint; 0 adopts the first
  // response's length and enforces it afterwards.
  std::size_t embed_dim = 0;
  std::string api_key;

  // Throws InvalidArgument on max_in_flight < 1, retry_base_ms <= 0 or
  // retry_max < 0.
  void validate() const;
};

// Fills endpoints and the API key from QAX_TRANSLATE_URL, QAX_EMBED_URL and
// QAX_API_KEY where the config leaves them empty.
void apply_environment(ProviderConfig& cfg);

// A backend performs exactly one attempt per call. It signals retryable
// failures with ProviderTransient and permanent ones with ProviderRejected.
class TranslationBackend {
 public:
  virtual ~TranslationBackend() = default;
  virtual std::string id() const = 0;
  virtual std::string translate(std::string_view text, std::string_view source,
                                std::string_view target) = 0;
  // Local deterministic backends skip the disk cache.
  virtual bool persist_results() const { return true; }
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> embed(std::string_view text) = 0;
  virtual bool persist_results() const { return true; }
};

class IdentityTranslator final : public TranslationBackend {
 public:
  std::string id() const override { return "identity"; }
  std::string translate(std::string_view text, std::string_view, std::string_view) override {
    return std::string(text);
  }
  bool persist_results() const override { return false; }
};

class TestEmbedder final : public EmbeddingBackend {
 public:
  std::string id() const override { return "test-ngram-256"; }
  std::vector<double> embed(std::string_view text) override {
    return test_embedder(text).values;
  }
  bool persist_results() const override { return false; }
};

// Wire protocol:
//   POST translate_endpoint {"text","source","target"} -> {"translation"}
//   POST embed_endpoint     {"text"}                   -> {"vector","dim"}
// 429 and 5xx are transient, other 4xx permanent. The API key, when set,
// travels as a bearer token.
class HttpTranslator final : public TranslationBackend {
 public:
  HttpTranslator(std::string endpoint, std::string api_key);
  std::string id() const override { return "http:" + endpoint_; }
  std::string translate(std::string_view text, std::string_view source,
                        std::string_view target) override;

 private:
  std::string endpoint_;
  std::string api_key_;
};

class HttpEmbedder final : public EmbeddingBackend {
 public:
  HttpEmbedder(std::string endpoint, std::string api_key);
  std::string id() const override { return "http:" + endpoint_; }
  std::vector<double> embed(std::string_view text) override;

 private:
  std::string endpoint_;
  std::string api_key_;
};

// Caps concurrent requests. Shared process-wide per provider through
// limiter_for().
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int max_in_flight) : max_(max_in_flight) {}

  void acquire();
  void release();
  int in_flight() const;

 private:
  const int max_;
  int active_ = 0;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

std::shared_ptr<ConcurrencyLimiter> limiter_for(const std::string& provider_id,
                                                int max_in_flight);

struct ProviderStats {
  std::uint64_t translate_requests = 0;  // backend attempts, retries included
  std::uint64_t embed_requests = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

// Retry, backoff, bounded concurrency, single-flight de-duplication and
// caching in front of a translation backend and an embedding backend.
// Safe to share between threads.
class ProviderClient {
 public:
  ProviderClient(ProviderConfig cfg, std::shared_ptr<TranslationBackend> translator,
                 std::shared_ptr<EmbeddingBackend> embedder, SleepFn sleep = {});

  // Builds backends from cfg.translator / cfg.embedder.
  static std::shared_ptr<ProviderClient> from_config(const ProviderConfig& cfg);

  // Throws EmptyInput, ProviderRejected, or ProviderUnavailable after
  // retry_max + 1 failed attempts.
  std::string translate_text(std::string_view text);
  // Also throws DimensionMismatch.
  EmbeddingVector embed_text(std::string_view text);

  const ProviderConfig& config() const { return cfg_; }
  std::string translator_id() const { return translator_->id(); }
  std::string embedder_id() const { return embedder_->id(); }
  ProviderStats stats() const;

  // Delay before retry number `attempt` (0-based): base * 2^attempt,
  // scaled by a jitter factor in [0.5, 1.5).
  std::chrono::milliseconds backoff_delay(int attempt);

 private:
  template <typename T>
  struct Slot {
    std::unordered_map<std::string, std::shared_future<std::shared_ptr<const T>>> entries;
    std::mutex mu;
  };

  template <typename T, typename Fetch>
  std::shared_ptr<const T> cached(Slot<T>& slot, const std::string& key, Fetch&& fetch);

  template <typename Call>
  auto with_retry(ConcurrencyLimiter& limiter, std::atomic<std::uint64_t>& counter,
                  Call&& call);

  ProviderConfig cfg_;
  std::shared_ptr<TranslationBackend> translator_;
  std::shared_ptr<EmbeddingBackend> embedder_;
  std::shared_ptr<ConcurrencyLimiter> translate_limiter_;
  std::shared_ptr<ConcurrencyLimiter> embed_limiter_;
  cache::DiskCache disk_;
  SleepFn sleep_;

  Slot<std::string> translations_;
  Slot<EmbeddingVector> embeddings_;
  std::atomic<std::size_t> embed_dim_{0};

  std::atomic<std::uint64_t> translate_requests_{0};
  std::atomic<std::uint64_t> embed_requests_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> retries_{0};
  std::mutex rng_mu_;
  std::uint64_t rng_state_;
};

}  // namespace qax::providers
