// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/image.hpp>
#include <panosearch/remote_agent.hpp>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <thread>

namespace panosearch
{

namespace
{

bool transient_status(int status)
{
    return status == 408 || status == 429 || status >= 500;
}

} // namespace

void EndpointConfig::validate() const
{
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
        throw ConfigError("endpoint base_url must start with http:// or https://");
    if (model_name.empty())
        throw ConfigError("endpoint model_name is empty");
    if (!(temperature >= 0.0))
        throw ConfigError("temperature must be non-negative");
    if (!(timeout_s > 0.0))
        throw ConfigError("timeout_s must be positive");
    if (max_retries < 0)
        throw ConfigError("max_retries must be non-negative");
    if (backoff_initial_ms < 0)
        throw ConfigError("backoff_initial_ms must be non-negative");
    if (max_concurrency < 1 || max_concurrency > 1024)
        throw ConfigError("max_concurrency must be in [1, 1024]");
    if (!auth_token_env_var.empty() && std::getenv(auth_token_env_var.c_str()) == nullptr)
        throw ConfigError("auth token variable '" + auth_token_env_var + "' is not set");
}

nlohmann::json build_chat_request(const EndpointConfig& endpoint, std::span<const ChatMessage> messages)
{
    auto out = nlohmann::json::array();
    for (auto const& m: messages)
    {
        auto content = nlohmann::json::array();
        for (auto const& p: m.parts)
        {
            if (p.kind == ContentPart::Kind::Text)
            {
                content.push_back({{"type", "text"}, {"text", p.text}});
                continue;
            }
            if (!p.image.png)
                throw InvalidArgument("image part without inline bytes: " + p.image.path);
            content.push_back(
                {{"type", "image_url"},
                 {"image_url", {{"url", "data:image/png;base64," + base64_encode(*p.image.png)}}}});
        }
        out.push_back({{"role", std::string(to_string(m.role))}, {"content", std::move(content)}});
    }
    return {
        {"model", endpoint.model_name},
        {"temperature", endpoint.temperature},
        {"messages", std::move(out)},
    };
}

RemoteChatClient::RemoteChatClient(EndpointConfig endpoint):
    endpoint_(std::move(endpoint)), slots_(std::max(1, endpoint_.max_concurrency))
{
    endpoint_.validate();
    if (!endpoint_.auth_token_env_var.empty())
        token_ = std::getenv(endpoint_.auth_token_env_var.c_str());

    auto const schemeEnd = endpoint_.base_url.find("://") + 3;
    auto const slash = endpoint_.base_url.find('/', schemeEnd);
    scheme_host_ = endpoint_.base_url.substr(0, slash);
    path_ = slash == std::string::npos ? std::string() : endpoint_.base_url.substr(slash);
    while (!path_.empty() && path_.back() == '/')
        path_.pop_back();
    path_ += "/chat/completions";
}

RemoteChatClient::~RemoteChatClient() = default;

std::string RemoteChatClient::complete(std::span<const ChatMessage> messages)
{
    auto const body = build_chat_request(endpoint_, messages).dump();

    slots_.acquire();
    struct Release
    {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release {slots_};

    httplib::Client client(scheme_host_);
    auto const timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(endpoint_.timeout_s));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!token_.empty())
        headers.emplace("Authorization", "Bearer " + token_);

    std::string lastError;
    auto delay = std::chrono::milliseconds(endpoint_.backoff_initial_ms);
    for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt)
    {
        if (attempt > 0)
        {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        ++attempts_;
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res)
        {
            lastError = "request failed: " + httplib::to_string(res.error());
            spdlog::warn("endpoint attempt {} failed: {}", attempt + 1, lastError);
            continue;
        }
        if (res->status != 200)
        {
            lastError = "HTTP " + std::to_string(res->status);
            spdlog::warn("endpoint attempt {} failed: {}", attempt + 1, lastError);
            if (!transient_status(res->status))
                break;
            continue;
        }
        try
        {
            auto const j = nlohmann::json::parse(res->body);
            auto const& content = j.at("choices").at(0).at("message").at("content");
            if (content.is_string())
                return content.get<std::string>();
            // some servers answer with a list of content parts
            std::string text;
            for (auto const& part: content)
                if (part.value("type", "") == "text")
                    text += part.value("text", "");
            return text;
        }
        catch (const nlohmann::json::exception& e)
        {
            throw TransportError(std::string("malformed completion payload: ") + e.what());
        }
    }
    throw TransportError("endpoint " + endpoint_.base_url + " unavailable: " + lastError);
}

std::string RemoteAgent::respond(const EpisodeState&, std::span<const ChatMessage> prompt)
{
    return client_->complete(prompt);
}

} // namespace panosearch
