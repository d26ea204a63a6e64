#pragma once

// In-process HTTP service speaking the provider wire protocol, with
// switchable failure modes.

#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "qax/providers.hpp"

namespace qax::testing {

class FakeProviderService {
 public:
  // Texts for which /translate answers with the given status.
  std::set<std::string> reject_400;
  std::set<std::string> fail_503;
  int flaky_failures = 0;  // first N /translate calls answer 503
  std::size_t embed_dim = 8;
  std::size_t embed_reply_len = 0;  // 0 = embed_dim
  std::string translate_prefix;
  std::atomic<int> translate_calls{0};
  std::atomic<int> embed_calls{0};
  std::string last_auth;

  FakeProviderService() {
    server_.Post("/translate", [this](const httplib::Request& req, httplib::Response& res) {
      ++translate_calls;
      {
        std::lock_guard lock(mu_);
        last_auth = req.get_header_value("Authorization");
      }
      const auto body = nlohmann::json::parse(req.body);
      const std::string text = body.at("text");
      if (flaky_failures > 0) {
        --flaky_failures;
        return reply(res, 503, {{"error", "warming up"}});
      }
      if (reject_400.count(text)) return reply(res, 400, {{"error", "bad text"}});
      if (fail_503.count(text)) return reply(res, 503, {{"error", "down"}});
      reply(res, 200, {{"translation", translate_prefix + text},
                       {"echo_source", body.at("source")},
                       {"echo_target", body.at("target")}});
    });
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++embed_calls;
      const std::string text = nlohmann::json::parse(req.body).at("text");
      if (text.empty()) return reply(res, 400, {{"error", "empty text"}});
      auto v = providers::test_embedder(text).values;
      v.resize(embed_reply_len ? embed_reply_len : embed_dim);
      double n = 0;
      for (double x : v) n += x * x;
      if (n == 0) v[0] = 1;
      reply(res, 200, {{"vector", v}, {"dim", v.size()}});
    });
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeProviderService() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
};

}  // namespace qax::testing
