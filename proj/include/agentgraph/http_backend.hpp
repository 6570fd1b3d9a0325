#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "agentgraph/backend.hpp"
#include "agentgraph/core.hpp"

namespace agentgraph {

/// Chat-completions HTTP backend (the de-facto JSON protocol: messages
/// array in, choices[0].message.content out). Transient failures retry
/// with exponential backoff up to max_retries.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config) : config_(std::move(config)) {
        config_.validate();
        split_url(config_.endpoint_url, base_, path_);
        if (!config_.api_key_env_var.empty()) {
            const char* key = std::getenv(config_.api_key_env_var.c_str());
            if (key == nullptr || *key == '\0')
                throw ConfigError("api key env var '" + config_.api_key_env_var +
                                  "' is not set");
            api_key_ = key;
        }
    }

    Completion complete(const std::vector<ChatMessage>& messages,
                        const SamplingParams& params) override {
        if (messages.empty()) throw ConfigError("complete requires a non-empty message list");

        nlohmann::json body;
        body["model"] = config_.model_name;
        body["temperature"] = params.temperature;
        body["top_p"] = params.top_p;
        body["max_tokens"] = params.max_tokens;
        nlohmann::json msgs = nlohmann::json::array();
        for (const auto& m : messages)
            msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
        body["messages"] = msgs;
        const std::string payload = body.dump();

        const int attempts = config_.max_retries + 1;
        std::string last_failure;
        for (int attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0) {
                auto delay = config_.initial_backoff * (1 << (attempt - 1));
                std::this_thread::sleep_for(delay);
            }
            httplib::Client client(base_);
            client.set_connection_timeout(config_.request_timeout);
            client.set_read_timeout(config_.request_timeout);
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

            auto res = client.Post(path_, headers, payload, "application/json");
            if (!res) {
                last_failure = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_failure = "http status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw ProtocolError("chat endpoint returned status " +
                                    std::to_string(res->status) + ": " + res->body);
            return parse_response(res->body, messages);
        }
        throw BackendUnavailableError("backend unavailable after " + std::to_string(attempts) +
                                      " attempts (" + last_failure + ")");
    }

    std::string name() const override { return "http:" + config_.model_name; }

private:
    Completion parse_response(const std::string& body,
                              const std::vector<ChatMessage>& messages) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception&) {
            throw ProtocolError("backend response is not JSON: " + body.substr(0, 160));
        }
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty() ||
            !j["choices"][0].contains("message") ||
            !j["choices"][0]["message"].contains("content"))
            throw ProtocolError("backend response missing choices[0].message.content");
        Completion c;
        c.text = j["choices"][0]["message"]["content"].get<std::string>();
        if (j.contains("usage") && j["usage"].contains("prompt_tokens") &&
            j["usage"].contains("completion_tokens")) {
            c.prompt_tokens = j["usage"]["prompt_tokens"].get<std::int64_t>();
            c.completion_tokens = j["usage"]["completion_tokens"].get<std::int64_t>();
            c.estimated = false;
        } else {
            c.prompt_tokens = estimate_prompt_tokens(messages);
            c.completion_tokens = estimate_tokens(c.text);
            c.estimated = true;
        }
        return c;
    }

    static void split_url(const std::string& url, std::string& base, std::string& path) {
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw ConfigError("endpoint_url must include a scheme: " + url);
        auto path_start = url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base = url;
            path = "/v1/chat/completions";
        } else {
            base = url.substr(0, path_start);
            path = url.substr(path_start);
        }
    }

    BackendConfig config_;
    std::string base_;
    std::string path_;
    std::string api_key_;
};

}  // namespace agentgraph
