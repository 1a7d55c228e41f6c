#pragma once

#include <chrono>
#include <cstdlib>
#include <string>

#include <nlohmann/json.hpp>

#include "agora/agent/engine.hpp"
#include "agora/http.hpp"

namespace agora::agent {

struct RemoteEngineConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8000/v1
  std::string model;
  std::string api_key;
  double timeout_s = 120.0;
  std::string restart_hook;  // shell command run on reset; empty = none
  double temperature = 0.0;
};

// Fills connection fields from AGORA_LLM_* environment variables when set.
inline RemoteEngineConfig apply_env_overrides(RemoteEngineConfig cfg) {
  if (const char* v = std::getenv("AGORA_LLM_BASE_URL"); v && *v) cfg.base_url = v;
  if (const char* v = std::getenv("AGORA_LLM_API_KEY"); v && *v) cfg.api_key = v;
  if (const char* v = std::getenv("AGORA_LLM_MODEL"); v && *v) cfg.model = v;
  return cfg;
}

inline nlohmann::json build_chat_request(const std::string& model, const std::vector<ChatMessage>& messages,
                                         const nlohmann::json& tools, double temperature) {
  nlohmann::json wire = nlohmann::json::array();
  for (const auto& m : messages) wire.push_back(to_wire(m));
  return {{"model", model},
          {"messages", wire},
          {"tools", tools},
          {"tool_choice", "auto"},
          {"temperature", temperature}};
}

inline EngineReply parse_chat_response(const std::string& body) {
  auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(errc::engine_http_error, "response is not JSON");
  try {
    const auto& message = doc.at("choices").at(0).at("message");
    EngineReply reply;
    if (message.contains("content") && message.at("content").is_string()) {
      reply.content = message.at("content").get<std::string>();
    }
    if (message.contains("tool_calls") && message.at("tool_calls").is_array()) {
      std::size_t n = 0;
      for (const auto& c : message.at("tool_calls")) {
        ++n;
        const auto& fn = c.at("function");
        const auto& args = fn.contains("arguments") ? fn.at("arguments") : nlohmann::json("{}");
        reply.tool_calls.push_back({c.value("id", "call_" + std::to_string(n)), fn.at("name").get<std::string>(),
                                    args.is_string() ? args.get<std::string>() : args.dump()});
      }
    }
    if (doc.contains("usage") && doc.at("usage").is_object()) {
      reply.usage = Usage{doc.at("usage").value("prompt_tokens", std::int64_t{0}),
                          doc.at("usage").value("completion_tokens", std::int64_t{0})};
    }
    return reply;
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::engine_http_error, std::string("unexpected response shape: ") + e.what());
  }
}

// Chat-completions client for an OpenAI-compatible server with tool calling.
// Each request carries the full conversation, so the engine itself keeps no
// conversation state between decisions.
class RemoteChatEngine final : public DecisionEngine {
public:
  RemoteChatEngine(std::string id, RemoteEngineConfig config)
      : id_(std::move(id)), config_(std::move(config)), base_(http::split_base_url(config_.base_url)) {
    if (config_.model.empty()) throw Error(errc::config_error, "engine '" + id_ + "': model is not set");
  }

  const std::string& id() const override { return id_; }
  bool simulated() const override { return false; }
  const RemoteEngineConfig& config() const noexcept { return config_; }

  EngineReply complete(const EngineRequest& request) override {
    auto client = http::make_client(base_, config_.timeout_s);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    const auto body = build_chat_request(config_.model, request.messages, request.tools, config_.temperature).dump();

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(base_.path_prefix + "/chat/completions", headers, body, "application/json");
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!res) {
      throw Error(errc::endpoint_unreachable, config_.base_url + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(errc::engine_http_error, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    EngineReply reply = parse_chat_response(res->body);
    reply.inference_s = elapsed;
    return reply;
  }

  void reset() override {
    if (config_.restart_hook.empty()) return;
    const int rc = std::system(config_.restart_hook.c_str());
    if (rc != 0) {
      throw Error(errc::restart_hook_failed, "restart hook exited with status " + std::to_string(rc));
    }
  }

  bool health_check() override {
    try {
      auto client = http::make_client(base_, std::min(config_.timeout_s, 5.0));
      httplib::Headers headers;
      if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
      auto res = client.Get(base_.path_prefix + "/models", headers);
      return res && res->status >= 200 && res->status < 300;
    } catch (const Error&) {
      return false;
    }
  }

private:
  std::string id_;
  RemoteEngineConfig config_;
  http::BaseUrl base_;
};

}  // namespace agora::agent
