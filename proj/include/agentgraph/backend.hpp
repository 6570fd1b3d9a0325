#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentgraph/core.hpp"
#include "agentgraph/rng.hpp"

namespace agentgraph {

enum class Role { System, User, Assistant };

inline const char* to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

struct SamplingParams {
    double temperature = 0.5;
    double top_p = 1.0;
    int max_tokens = 1024;
};

struct Completion {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    /// True when token counts are estimated rather than backend-reported.
    bool estimated = false;
};

/// Running prompt/completion token tally.
struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    bool estimated = false;

    void add(const Completion& c) {
        prompt_tokens += c.prompt_tokens;
        completion_tokens += c.completion_tokens;
        estimated = estimated || c.estimated;
    }
    void add_usage(const TokenUsage& u) {
        prompt_tokens += u.prompt_tokens;
        completion_tokens += u.completion_tokens;
        estimated = estimated || u.estimated;
    }
    std::int64_t total() const { return prompt_tokens + completion_tokens; }
};

/// One conversation rendered to a stable text form. Scripted matching and
/// hashing key on this exact rendering.
inline std::string render_messages(const std::vector<ChatMessage>& messages) {
    std::string out;
    for (const auto& m : messages) {
        out += to_string(m.role);
        out += ": ";
        out += m.content;
        out += "\n";
    }
    return out;
}

/// Whitespace-token estimate used when a backend reports no usage.
inline std::int64_t estimate_tokens(std::string_view text) {
    std::int64_t count = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

inline std::int64_t estimate_prompt_tokens(const std::vector<ChatMessage>& messages) {
    std::int64_t count = 0;
    for (const auto& m : messages) count += estimate_tokens(m.content);
    return count;
}

/// Uniform chat-completion interface. Implementations must be safe for
/// concurrent calls and must never inspect graph state.
class Backend {
public:
    virtual ~Backend() = default;

    virtual Completion complete(const std::vector<ChatMessage>& messages,
                                const SamplingParams& params) = 0;

    virtual std::string name() const = 0;
};

/// Forced decoding: k independent completions at the given temperature,
/// one chosen uniformly at random. Usage aggregates all k calls.
inline Completion forced_generate(Backend& backend, const std::vector<ChatMessage>& messages,
                                  const SamplingParams& params, int k, std::mt19937_64& rng) {
    if (k < 1) throw ConfigError("forced_generate requires k >= 1");
    if (messages.empty()) throw ConfigError("complete requires a non-empty message list");
    std::vector<Completion> outputs;
    outputs.reserve(static_cast<std::size_t>(k));
    std::int64_t prompt_total = 0, completion_total = 0;
    bool estimated = false;
    for (int i = 0; i < k; ++i) {
        Completion c = backend.complete(messages, params);
        prompt_total += c.prompt_tokens;
        completion_total += c.completion_tokens;
        estimated = estimated || c.estimated;
        outputs.push_back(std::move(c));
    }
    std::size_t pick = k == 1 ? 0 : static_cast<std::size_t>(next_bounded(rng, static_cast<std::uint64_t>(k)));
    Completion chosen = std::move(outputs[pick]);
    chosen.prompt_tokens = prompt_total;
    chosen.completion_tokens = completion_total;
    chosen.estimated = estimated;
    return chosen;
}

enum class BackendKind { Http, Scripted };

struct BackendConfig {
    BackendKind kind = BackendKind::Scripted;
    // http
    std::string endpoint_url;
    std::string model_name;
    std::string api_key_env_var;
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 2;
    std::chrono::milliseconds initial_backoff{250};
    // scripted
    std::string script_path;

    void validate() const {
        if (kind == BackendKind::Http) {
            if (endpoint_url.empty()) throw ConfigError("http backend requires endpoint_url");
            if (!script_path.empty())
                throw ConfigError("http backend must not set script_path");
            if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
        } else {
            if (script_path.empty()) throw ConfigError("scripted backend requires script_path");
            if (!endpoint_url.empty() || !api_key_env_var.empty())
                throw ConfigError("scripted backend must not set http fields");
        }
    }
};

}  // namespace agentgraph
