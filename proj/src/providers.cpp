#include "qax/providers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "qax/error.hpp"
#include "qax/text.hpp"

namespace qax::providers {

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw DimensionMismatch("cosine of vectors with dims " + std::to_string(u.dim()) +
                            " and " + std::to_string(v.dim()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    dot += u.values[i] * v.values[i];
    uu += u.values[i] * u.values[i];
    vv += v.values[i] * v.values[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ZeroVector("cosine of a zero vector");
  const double c = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, -1.0, 1.0);
}

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ kTestEmbedderSeed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

EmbeddingVector test_embedder(std::string_view text) {
  EmbeddingVector v{std::vector<double>(kTestEmbedderDim, 0.0)};
  const std::u32string s = text::normalize_utf32(text);
  if (s.empty()) {
    v.values[0] = 1.0;
    return v;
  }
  for (std::size_t n = 1; n <= 3; ++n) {
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
      const std::string gram = text::to_utf8(std::u32string_view(s).substr(i, n));
      v.values[fnv1a(gram) % kTestEmbedderDim] += 1.0;
    }
  }
  double norm = 0.0;
  for (double x : v.values) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v.values) x /= norm;
  return v;
}

void ProviderConfig::validate() const {
  if (max_in_flight < 1) throw InvalidArgument("max_in_flight must be >= 1");
  if (retry_base_ms <= 0) throw InvalidArgument("retry_base_ms must be > 0");
  if (retry_max < 0) throw InvalidArgument("retry_max must be >= 0");
}

void apply_environment(ProviderConfig& cfg) {
  auto fill = [](std::string& field, const char* var) {
    if (!field.empty()) return;
    if (const char* v = std::getenv(var); v != nullptr) field = v;
  };
  fill(cfg.translate_endpoint, "QAX_TRANSLATE_URL");
  fill(cfg.embed_endpoint, "QAX_EMBED_URL");
  fill(cfg.api_key, "QAX_API_KEY");
}

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("endpoint is not a URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json post_json(const std::string& endpoint, const std::string& api_key,
                         const nlohmann::json& body) {
  const Url url = split_url(endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderTransient("transport error: " + httplib::to_string(res.error()), endpoint);
  }
  auto error_text = [&] {
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) {
      return j["error"].get<std::string>();
    }
    return res->body;
  };
  if (res->status == 429 || res->status >= 500) {
    throw ProviderTransient("HTTP " + std::to_string(res->status) + ": " + error_text(),
                            endpoint);
  }
  if (res->status != 200) {
    throw ProviderRejected("HTTP " + std::to_string(res->status) + ": " + error_text(),
                           endpoint);
  }
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ProviderTransient("unparseable response body", endpoint);
  }
  return j;
}

}  // namespace

HttpTranslator::HttpTranslator(std::string endpoint, std::string api_key)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {
  split_url(endpoint_);
}

std::string HttpTranslator::translate(std::string_view text, std::string_view source,
                                      std::string_view target) {
  const auto j = post_json(endpoint_, api_key_,
                           {{"text", text}, {"source", source}, {"target", target}});
  auto it = j.find("translation");
  if (it == j.end() || !it->is_string()) {
    throw ProviderTransient("response lacks 'translation'", endpoint_);
  }
  return it->get<std::string>();
}

HttpEmbedder::HttpEmbedder(std::string endpoint, std::string api_key)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {
  split_url(endpoint_);
}

std::vector<double> HttpEmbedder::embed(std::string_view text) {
  const auto j = post_json(endpoint_, api_key_, {{"text", text}});
  auto it = j.find("vector");
  if (it == j.end() || !it->is_array()) {
    throw ProviderTransient("response lacks 'vector'", endpoint_);
  }
  std::vector<double> values;
  values.reserve(it->size());
  for (const auto& x : *it) {
    if (!x.is_number()) throw ProviderTransient("non-numeric vector entry", endpoint_);
    values.push_back(x.get<double>());
  }
  if (auto d = j.find("dim"); d != j.end() && d->is_number_integer() &&
                              d->get<std::size_t>() != values.size()) {
    throw DimensionMismatch("response declares dim " + std::to_string(d->get<std::size_t>()) +
                                " but carries " + std::to_string(values.size()) + " values",
                            endpoint_);
  }
  return values;
}

void ConcurrencyLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return active_ < max_; });
  ++active_;
}

void ConcurrencyLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --active_;
  }
  cv_.notify_one();
}

int ConcurrencyLimiter::in_flight() const {
  std::lock_guard lock(mu_);
  return active_;
}

std::shared_ptr<ConcurrencyLimiter> limiter_for(const std::string& provider_id,
                                                int max_in_flight) {
  static std::mutex mu;
  static std::unordered_map<std::string, std::shared_ptr<ConcurrencyLimiter>> registry;
  std::lock_guard lock(mu);
  auto& slot = registry[provider_id + "#" + std::to_string(max_in_flight)];
  if (!slot) slot = std::make_shared<ConcurrencyLimiter>(max_in_flight);
  return slot;
}

namespace {

class SlotGuard {
 public:
  explicit SlotGuard(ConcurrencyLimiter& l) : l_(l) { l_.acquire(); }
  ~SlotGuard() { l_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  ConcurrencyLimiter& l_;
};

std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

ProviderClient::ProviderClient(ProviderConfig cfg, std::shared_ptr<TranslationBackend> translator,
                               std::shared_ptr<EmbeddingBackend> embedder, SleepFn sleep)
    : cfg_(std::move(cfg)),
      translator_(std::move(translator)),
      embedder_(std::move(embedder)),
      disk_(cfg_.cache_dir),
      sleep_(std::move(sleep)),
      rng_state_(std::random_device{}()) {
  cfg_.validate();
  if (!translator_ || !embedder_) throw InvalidArgument("provider backends must be non-null");
  translate_limiter_ = limiter_for(translator_->id(), cfg_.max_in_flight);
  embed_limiter_ = limiter_for(embedder_->id(), cfg_.max_in_flight);
  embed_dim_ = cfg_.embed_dim;
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::shared_ptr<ProviderClient> ProviderClient::from_config(const ProviderConfig& cfg) {
  std::shared_ptr<TranslationBackend> translator;
  std::shared_ptr<EmbeddingBackend> embedder;
  if (cfg.translator == TranslatorKind::Http) {
    if (cfg.translate_endpoint.empty()) throw InvalidArgument("http translator needs an endpoint");
    translator = std::make_shared<HttpTranslator>(cfg.translate_endpoint, cfg.api_key);
  } else {
    translator = std::make_shared<IdentityTranslator>();
  }
  if (cfg.embedder == EmbedderKind::Http) {
    if (cfg.embed_endpoint.empty()) throw InvalidArgument("http embedder needs an endpoint");
    embedder = std::make_shared<HttpEmbedder>(cfg.embed_endpoint, cfg.api_key);
  } else {
    embedder = std::make_shared<TestEmbedder>();
  }
  return std::make_shared<ProviderClient>(cfg, std::move(translator), std::move(embedder));
}

std::chrono::milliseconds ProviderClient::backoff_delay(int attempt) {
  double jitter;
  {
    std::lock_guard lock(rng_mu_);
    // splitmix64
    std::uint64_t z = (rng_state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    jitter = 0.5 + static_cast<double>(z >> 11) * 0x1.0p-53;
  }
  const double base = static_cast<double>(cfg_.retry_base_ms) * std::ldexp(1.0, attempt);
  return std::chrono::milliseconds(static_cast<std::int64_t>(base * jitter));
}

template <typename Call>
auto ProviderClient::with_retry(ConcurrencyLimiter& limiter,
                                std::atomic<std::uint64_t>& counter, Call&& call) {
  for (int attempt = 0;; ++attempt) {
    try {
      SlotGuard guard(limiter);
      ++counter;
      return call();
    } catch (const ProviderTransient& e) {
      if (attempt >= cfg_.retry_max) {
        throw ProviderUnavailable("gave up after " + std::to_string(attempt + 1) +
                                  " attempts: " + e.what());
      }
    }
    ++retries_;
    sleep_(backoff_delay(attempt));
  }
}

template <typename T, typename Fetch>
std::shared_ptr<const T> ProviderClient::cached(Slot<T>& slot, const std::string& key,
                                                Fetch&& fetch) {
  std::promise<std::shared_ptr<const T>> promise;
  std::shared_future<std::shared_ptr<const T>> pending;
  {
    std::lock_guard lock(slot.mu);
    if (auto it = slot.entries.find(key); it != slot.entries.end()) {
      pending = it->second;
    } else {
      slot.entries.emplace(key, promise.get_future().share());
    }
  }
  if (pending.valid()) {
    ++cache_hits_;
    return pending.get();
  }
  try {
    auto value = fetch();
    promise.set_value(value);
    return value;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(slot.mu);
    slot.entries.erase(key);
    throw;
  }
}

std::string ProviderClient::translate_text(std::string_view text) {
  if (text::normalize_utf32(text).empty()) throw EmptyInput("nothing to translate");
  if (!translator_->persist_results()) {
    return with_retry(*translate_limiter_, translate_requests_, [&] {
      return translator_->translate(text, cfg_.source_lang, cfg_.target_lang);
    });
  }
  const std::string key = cache::cache_key("translate", translator_->id(), cfg_.source_lang,
                                           cfg_.target_lang, text);
  return *cached(translations_, key, [&]() -> std::shared_ptr<const std::string> {
    if (auto hit = disk_.get(key); hit && hit->payload.is_string()) {
      ++cache_hits_;
      return std::make_shared<const std::string>(hit->payload.get<std::string>());
    }
    auto out = std::make_shared<const std::string>(
        with_retry(*translate_limiter_, translate_requests_, [&] {
          return translator_->translate(text, cfg_.source_lang, cfg_.target_lang);
        }));
    disk_.put({key, "translate", *out, unix_now()});
    return out;
  });
}

EmbeddingVector ProviderClient::embed_text(std::string_view text) {
  if (text::normalize_utf32(text).empty()) throw EmptyInput("nothing to embed");
  auto check_dim = [&](const EmbeddingVector& v) {
    std::size_t expected = 0;
    if (embed_dim_.compare_exchange_strong(expected, v.dim())) return;
    if (expected != v.dim()) {
      throw DimensionMismatch("provider returned " + std::to_string(v.dim()) +
                              " values, expected " + std::to_string(expected));
    }
  };
  auto fetch = [&] {
    EmbeddingVector v{with_retry(*embed_limiter_, embed_requests_,
                                 [&] { return embedder_->embed(text); })};
    check_dim(v);
    return v;
  };
  if (!embedder_->persist_results()) return fetch();

  const std::string key = cache::cache_key("embed", embedder_->id(), "", "", text);
  auto result = cached(embeddings_, key, [&]() -> std::shared_ptr<const EmbeddingVector> {
    if (auto hit = disk_.get(key); hit && hit->payload.is_array()) {
      EmbeddingVector v{hit->payload.get<std::vector<double>>()};
      check_dim(v);
      ++cache_hits_;
      return std::make_shared<const EmbeddingVector>(std::move(v));
    }
    auto v = std::make_shared<const EmbeddingVector>(fetch());
    disk_.put({key, "embed", v->values, unix_now()});
    return v;
  });
  // Embeddings are only de-duplicated while in flight; repeats are served
  // from disk so memory stays bounded on long runs.
  if (disk_.enabled()) {
    std::lock_guard lock(embeddings_.mu);
    embeddings_.entries.erase(key);
  }
  return *result;
}

ProviderStats ProviderClient::stats() const {
  return {translate_requests_.load(), embed_requests_.load(), cache_hits_.load(),
          retries_.load()};
}

}  // namespace qax::providers
