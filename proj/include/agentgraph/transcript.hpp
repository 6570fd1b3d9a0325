#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentgraph/backend.hpp"
#include "agentgraph/core.hpp"
#include "agentgraph/ledger.hpp"

namespace agentgraph {

/// Ordered JSONL event log. Events carry no timestamps or absolute paths
/// so identical runs produce byte-identical transcripts; nlohmann::json
/// objects serialize with sorted keys, which keeps lines stable.
class Transcript {
public:
    void event(nlohmann::json j) { lines_.push_back(std::move(j)); }

    void header(const std::string& command, std::uint64_t seed,
                const std::string& config_hash) {
        event({{"type", "header"},
               {"schema", kTranscriptSchemaVersion},
               {"command", command},
               {"seed", seed},
               {"config_hash", config_hash}});
    }

    void warning(const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
        extra["type"] = "warning";
        extra["message"] = message;
        event(std::move(extra));
    }

    /// Appends another transcript's events after this one's.
    void append(Transcript&& other) {
        for (auto& line : other.lines_) lines_.push_back(std::move(line));
        other.lines_.clear();
    }

    const std::vector<nlohmann::json>& events() const { return lines_; }

    void write_jsonl(std::ostream& os) const {
        for (const auto& line : lines_) os << line.dump() << "\n";
    }

    std::string to_jsonl() const {
        std::string out;
        for (const auto& line : lines_) {
            out += line.dump();
            out += "\n";
        }
        return out;
    }

private:
    std::vector<nlohmann::json> lines_;
};

/// Backend decorator that logs every completion (conversation hash, full
/// reply, usage) to a transcript and ledger. The hash/reply pairs make a
/// transcript replayable: feeding them back as a script reproduces the
/// run.
class RecordingBackend : public Backend {
public:
    RecordingBackend(Backend* inner, LedgerRole role, std::string label, RunLedger* ledger,
                     Transcript* transcript)
        : inner_(inner),
          role_(role),
          label_(std::move(label)),
          ledger_(ledger),
          transcript_(transcript) {
        if (inner_ == nullptr) throw InvariantError("recording backend needs an inner backend");
    }

    /// Static fields merged into every llm_call event (epoch, datapoint,
    /// question id, ...). Caller updates as the run progresses.
    void set_context(nlohmann::json context) { context_ = std::move(context); }

    Completion complete(const std::vector<ChatMessage>& messages,
                        const SamplingParams& params) override {
        std::string rendered = render_messages(messages);
        Completion c = inner_->complete(messages, params);
        if (ledger_) ledger_->record(c, role_);
        if (transcript_) {
            nlohmann::json j = context_;
            j["type"] = "llm_call";
            j["role"] = to_string(role_);
            j["agent"] = label_;
            j["hash"] = hex64(fnv1a64(rendered));
            j["reply"] = c.text;
            j["prompt_tokens"] = c.prompt_tokens;
            j["completion_tokens"] = c.completion_tokens;
            j["estimated"] = c.estimated;
            transcript_->event(std::move(j));
        }
        return c;
    }

    std::string name() const override { return inner_->name(); }

private:
    Backend* inner_;
    LedgerRole role_;
    std::string label_;
    RunLedger* ledger_;
    Transcript* transcript_;
    nlohmann::json context_ = nlohmann::json::object();
};

}  // namespace agentgraph
