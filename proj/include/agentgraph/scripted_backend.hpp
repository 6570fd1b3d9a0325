#pragma once

#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentgraph/backend.hpp"
#include "agentgraph/core.hpp"

namespace agentgraph {

/// One line of a JSONL script: {match, reply, usage?, error?, max_uses?}.
///
/// match forms:
///   - absent/null/""      wildcard (pair with max_uses:1 for an ordered
///                         next-unconsumed-reply script)
///   - "substring"         must appear in the rendered conversation
///   - ["a", "b"]          every element must appear
///   - "hash:<16 hex>"     FNV-1a-64 of the rendered message list
///
/// error, when set, makes the entry throw instead of replying:
/// "unavailable" -> BackendUnavailableError, anything else -> ProtocolError.
struct ScriptEntry {
    std::vector<std::string> match;
    std::string reply;
    std::int64_t prompt_tokens = -1;      // -1: estimate
    std::int64_t completion_tokens = -1;  // -1: estimate
    std::string error;
    int max_uses = 0;  // 0: unlimited
    int uses = 0;

    static ScriptEntry from_json(const nlohmann::json& j, int line_no) {
        ScriptEntry e;
        if (j.contains("match") && !j.at("match").is_null()) {
            const auto& m = j.at("match");
            if (m.is_string()) {
                if (!m.get<std::string>().empty()) e.match.push_back(m.get<std::string>());
            } else if (m.is_array()) {
                for (const auto& part : m) e.match.push_back(part.get<std::string>());
            } else {
                throw DataError("script line " + std::to_string(line_no) +
                                ": match must be a string or array");
            }
        }
        if (j.contains("reply")) e.reply = j.at("reply").get<std::string>();
        if (j.contains("error")) e.error = j.at("error").get<std::string>();
        if (e.reply.empty() && e.error.empty())
            throw DataError("script line " + std::to_string(line_no) +
                            ": needs a reply or an error");
        if (j.contains("usage")) {
            const auto& u = j.at("usage");
            e.prompt_tokens = u.at("prompt_tokens").get<std::int64_t>();
            e.completion_tokens = u.at("completion_tokens").get<std::int64_t>();
        }
        if (j.contains("max_uses")) e.max_uses = j.at("max_uses").get<int>();
        return e;
    }
};

/// Deterministic scripted backend: a pure function of (messages, script
/// state). Matched entries are consulted in file order; the first live one
/// wins.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::vector<ScriptEntry> entries, std::string name = "scripted")
        : entries_(std::move(entries)), name_(std::move(name)) {}

    static std::vector<ScriptEntry> load_entries(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open script file: " + path);
        std::vector<ScriptEntry> entries;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string trimmed = line;
            while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' '))
                trimmed.pop_back();
            if (trimmed.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(trimmed);
            } catch (const nlohmann::json::exception& e) {
                throw DataError("script " + path + " line " + std::to_string(line_no) +
                                ": " + e.what());
            }
            entries.push_back(ScriptEntry::from_json(j, line_no));
        }
        return entries;
    }

    static ScriptedBackend from_file(const std::string& path, std::string name = "scripted") {
        return ScriptedBackend(load_entries(path), std::move(name));
    }

    Completion complete(const std::vector<ChatMessage>& messages,
                        const SamplingParams&) override {
        if (messages.empty()) throw ConfigError("complete requires a non-empty message list");
        const std::string rendered = render_messages(messages);
        const std::string hash = hex64(fnv1a64(rendered));

        std::lock_guard<std::mutex> lock(mutex_);
        for (auto& entry : entries_) {
            if (entry.max_uses > 0 && entry.uses >= entry.max_uses) continue;
            if (!matches(entry, rendered, hash)) continue;
            ++entry.uses;
            if (!entry.error.empty()) {
                if (entry.error == "unavailable")
                    throw BackendUnavailableError("scripted failure: " + entry.error);
                throw ProtocolError("scripted failure: " + entry.error);
            }
            Completion c;
            c.text = entry.reply;
            if (entry.prompt_tokens >= 0) {
                c.prompt_tokens = entry.prompt_tokens;
                c.completion_tokens = entry.completion_tokens;
                c.estimated = false;
            } else {
                c.prompt_tokens = estimate_prompt_tokens(messages);
                c.completion_tokens = estimate_tokens(entry.reply);
                c.estimated = true;
            }
            return c;
        }
        throw ProtocolError("scripted backend '" + name_ + "' has no reply for hash:" + hash +
                            " text: " + rendered.substr(0, 160));
    }

    std::string name() const override { return name_; }

private:
    static bool matches(const ScriptEntry& entry, const std::string& rendered,
                        const std::string& hash) {
        for (const auto& needle : entry.match) {
            if (needle.rfind("hash:", 0) == 0) {
                if (needle.substr(5) != hash) return false;
            } else if (rendered.find(needle) == std::string::npos) {
                return false;
            }
        }
        return true;
    }

    std::vector<ScriptEntry> entries_;
    std::string name_;
    std::mutex mutex_;
};

}  // namespace agentgraph
