#pragma once

#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "agora/agent/engine.hpp"

namespace agora::agent {

// Chat-completions stub that replays a scripted sequence of replies. The
// script restarts whenever a request opens a new conversation (no assistant
// messages yet). Every request body is kept for inspection.
//
//   POST {/v1,}/chat/completions   next scripted reply
//   GET  {/v1,}/models             health check
//   GET  /_stub/requests           received request bodies (JSON array)
//   POST /_stub/reset              clear recorded requests
class StubLlmServer {
public:
  explicit StubLlmServer(std::vector<ScriptStep> script, std::string model = "stub-model")
      : script_(std::move(script)), model_(std::move(model)) {
    if (script_.empty()) throw Error(errc::config_error, "stub script has no steps");
    auto chat = [this](const httplib::Request& req, httplib::Response& res) { handle_chat(req, res); };
    auto models = [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json body = {{"object", "list"}, {"data", {{{"id", model_}, {"object", "model"}}}}};
      res.set_content(body.dump(), "application/json");
    };
    server_.Post("/v1/chat/completions", chat);
    server_.Post("/chat/completions", chat);
    server_.Get("/v1/models", models);
    server_.Get("/models", models);
    server_.Get("/_stub/requests", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      res.set_content(nlohmann::json(requests_).dump(), "application/json");
    });
    server_.Post("/_stub/reset", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      requests_.clear();
      cursor_ = 0;
      res.set_content("{}", "application/json");
    });
  }

  ~StubLlmServer() { stop(); }
  StubLlmServer(const StubLlmServer&) = delete;
  StubLlmServer& operator=(const StubLlmServer&) = delete;

  // Binds to `port` (0 picks a free one) and serves on a background thread.
  int start(int port = 0, const std::string& host = "127.0.0.1") {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ <= 0) throw Error(errc::io_error, "stub server could not bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  // Serves on the calling thread until stop() is called elsewhere.
  void run(int port, const std::string& host = "127.0.0.1") {
    if (!server_.bind_to_port(host, port)) {
      throw Error(errc::io_error, "stub server could not bind " + host + ":" + std::to_string(port));
    }
    port_ = port;
    server_.listen_after_bind();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::vector<nlohmann::json> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

private:
  void handle_chat(const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("messages")) {
      res.status = 400;
      res.set_content(R"({"error":{"message":"invalid request"}})", "application/json");
      return;
    }
    std::lock_guard lock(mutex_);
    requests_.push_back(body);
    bool fresh = true;
    for (const auto& m : body.at("messages")) {
      if (m.value("role", "") == "assistant") fresh = false;
    }
    if (fresh) cursor_ = 0;
    const ScriptStep& step = script_[std::min(cursor_, script_.size() - 1)];
    ++cursor_;
    ++served_;

    if (step.http_status != 200) {
      res.status = step.http_status;
      res.set_content(R"({"error":{"message":"scripted failure"}})", "application/json");
      return;
    }
    std::size_t prior_calls = 0;
    for (const auto& m : body.at("messages")) {
      if (m.contains("tool_calls") && m.at("tool_calls").is_array()) prior_calls += m.at("tool_calls").size();
    }
    nlohmann::json message = {{"role", "assistant"}};
    message["content"] = step.content.empty() && !step.tool_calls.empty() ? nlohmann::json() : nlohmann::json(step.content);
    if (!step.tool_calls.empty()) {
      nlohmann::json calls = nlohmann::json::array();
      for (const auto& [name, args] : step.tool_calls) {
        calls.push_back({{"id", "call_" + std::to_string(++prior_calls)},
                         {"type", "function"},
                         {"function", {{"name", name}, {"arguments", args}}}});
      }
      message["tool_calls"] = calls;
    }
    nlohmann::json out = {{"id", "stub-" + std::to_string(served_)},
                          {"object", "chat.completion"},
                          {"model", body.value("model", model_)},
                          {"choices", {{{"index", 0},
                                        {"message", message},
                                        {"finish_reason", step.tool_calls.empty() ? "stop" : "tool_calls"}}}}};
    if (step.usage) {
      out["usage"] = {{"prompt_tokens", step.usage->prompt_tokens},
                      {"completion_tokens", step.usage->completion_tokens},
                      {"total_tokens", step.usage->prompt_tokens + step.usage->completion_tokens}};
    }
    res.set_content(out.dump(), "application/json");
  }

  std::vector<ScriptStep> script_;
  std::string model_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> requests_;
  std::size_t cursor_ = 0;
  std::size_t served_ = 0;
};

}  // namespace agora::agent
