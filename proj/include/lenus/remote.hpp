#pragma once

#include <chrono>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "detection.hpp"
#include "embedding.hpp"

namespace lenus {

class RemoteError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RemoteConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string auth_token;  // optional bearer token, typically from env
  int timeout_seconds = 30;
  int retries = 3;
  int backoff_ms = 100;  // doubles per attempt
};

namespace detail {

inline nlohmann::json post_with_retries(const RemoteConfig& cfg, const std::string& path,
                                        const nlohmann::json& body) {
  int backoff = cfg.backoff_ms;
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < cfg.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
    httplib::Client client(cfg.host, cfg.port);
    client.set_read_timeout(cfg.timeout_seconds, 0);
    client.set_connection_timeout(cfg.timeout_seconds, 0);
    httplib::Headers headers;
    if (!cfg.auth_token.empty())
      headers.emplace("Authorization", "Bearer " + cfg.auth_token);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "connection failure to " + cfg.host + ":" + std::to_string(cfg.port);
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + " from " + path;
      continue;
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const std::exception& e) {
      last_error = std::string("bad JSON response: ") + e.what();
    }
  }
  throw RemoteError("remote call " + path + " failed after " + std::to_string(cfg.retries) +
                    " attempts: " + last_error);
}

}  // namespace detail

/// HTTP embedding provider. Frame payloads are opaque references resolved
/// by the service; vectors come back in request order and are normalized
/// on receipt.
class RemoteEmbeddingProvider : public EmbeddingProvider {
public:
  explicit RemoteEmbeddingProvider(RemoteConfig cfg, double per_item_cost = 0.0)
      : cfg_(std::move(cfg)), cost_(per_item_cost) {}

  std::vector<std::vector<double>> encode_frames(const std::vector<int>& frame_refs) override {
    nlohmann::json body = {{"kind", "frames"}, {"items", frame_refs}};
    return parse_vectors(detail::post_with_retries(cfg_, "/embed", body));
  }

  std::vector<std::vector<double>> encode_text(const std::vector<std::string>& texts) override {
    nlohmann::json body = {{"kind", "text"}, {"items", texts}};
    return parse_vectors(detail::post_with_retries(cfg_, "/embed", body));
  }

  double per_item_cost() const override { return cost_; }

private:
  static std::vector<std::vector<double>> parse_vectors(const nlohmann::json& j) {
    std::vector<std::vector<double>> out;
    for (const auto& row : j.at("vectors")) {
      std::vector<double> raw = row.get<std::vector<double>>();
      out.push_back(normalize(raw));
    }
    return out;
  }

  RemoteConfig cfg_;
  double cost_;
};

/// HTTP proposition detector:
/// POST /detect {window_id, frame_payload_refs, propositions} -> {confidences}.
class RemoteDetector : public DetectorBackend {
public:
  RemoteDetector(RemoteConfig cfg, int max_batch = 8, double pass_cost = 0.0)
      : cfg_(std::move(cfg)), max_batch_(max_batch), pass_cost_(pass_cost) {}

  std::vector<double> evaluate_batch(const WindowSpan& window,
                                     const std::vector<std::string>& propositions) override {
    std::vector<int> refs;
    for (int t = window.begin_frame; t < window.end_frame; ++t) refs.push_back(t);
    nlohmann::json body = {{"window_id", window.index},
                           {"anchor_frame", window.anchor_frame},
                           {"frame_payload_refs", refs},
                           {"propositions", propositions}};
    auto j = detail::post_with_retries(cfg_, "/detect", body);
    auto conf = j.at("confidences").get<std::vector<double>>();
    if (conf.size() != propositions.size())
      throw RemoteError("detector returned " + std::to_string(conf.size()) + " confidences for " +
                        std::to_string(propositions.size()) + " propositions");
    return conf;
  }

  int max_batch() const override { return max_batch_; }
  double pass_cost() const override { return pass_cost_; }

private:
  RemoteConfig cfg_;
  int max_batch_;
  double pass_cost_;
};

/// Query-to-TL translation service: POST /translate {query} -> {tl}.
class RemoteTranslator {
public:
  explicit RemoteTranslator(RemoteConfig cfg) : cfg_(std::move(cfg)) {}

  std::string translate(const std::string& query) {
    auto j = detail::post_with_retries(cfg_, "/translate", {{"query", query}});
    return j.at("tl").get<std::string>();
  }

private:
  RemoteConfig cfg_;
};

/// Final answering service: POST /answer {query, frames} -> arbitrary JSON.
class RemoteAnswerer {
public:
  explicit RemoteAnswerer(RemoteConfig cfg) : cfg_(std::move(cfg)) {}

  nlohmann::json answer(const std::string& query, const std::vector<int>& frames) {
    return detail::post_with_retries(cfg_, "/answer", {{"query", query}, {"frames", frames}});
  }

private:
  RemoteConfig cfg_;
};

}  // namespace lenus
