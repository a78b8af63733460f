// SPDX-License-Identifier: Apache-2.0
#pragma once

// Client for chat-completion style model endpoints (OpenAI-compatible wire
// format: POST {base_url}/chat/completions, images as data: URLs).

#include <panosearch/agent.hpp>
#include <panosearch/policies.hpp>

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

namespace panosearch
{

struct EndpointConfig
{
    std::string base_url;          ///< e.g. "http://127.0.0.1:8000/v1"
    std::string auth_token_env_var; ///< empty = no Authorization header
    std::string model_name;
    double temperature = 0.0;
    double timeout_s = 60.0;
    int max_retries = 3;           ///< retries after the first attempt
    int backoff_initial_ms = 500;  ///< doubled after each failed attempt
    int max_concurrency = 4;

    /// Throws ConfigError on bad values or when the token variable is unset.
    void validate() const;
};

/// Request body for a conversation.
nlohmann::json build_chat_request(const EndpointConfig& endpoint, std::span<const ChatMessage> messages);

/// Thread-safe; shared by all episodes of a run. At most max_concurrency requests are in flight.
class RemoteChatClient
{
  public:
    explicit RemoteChatClient(EndpointConfig endpoint);
    ~RemoteChatClient();

    RemoteChatClient(const RemoteChatClient&) = delete;
    RemoteChatClient& operator=(const RemoteChatClient&) = delete;

    /// Verbatim assistant text. Throws TransportError once retries are exhausted.
    std::string complete(std::span<const ChatMessage> messages);

    [[nodiscard]] const EndpointConfig& endpoint() const noexcept { return endpoint_; }
    [[nodiscard]] int attempts_made() const noexcept { return attempts_.load(); }

  private:
    EndpointConfig endpoint_;
    std::string token_;
    std::string scheme_host_;
    std::string path_;
    std::counting_semaphore<1024> slots_;
    std::atomic<int> attempts_ {0};
};

class RemoteAgent final: public Agent
{
  public:
    explicit RemoteAgent(std::shared_ptr<RemoteChatClient> client) noexcept: client_(std::move(client)) {}

    std::string respond(const EpisodeState& state, std::span<const ChatMessage> prompt) override;
    [[nodiscard]] bool wants_prompt() const noexcept override { return true; }

  private:
    std::shared_ptr<RemoteChatClient> client_;
};

} // namespace panosearch
