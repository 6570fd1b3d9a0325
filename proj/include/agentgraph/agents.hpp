#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agentgraph/answer.hpp"
#include "agentgraph/backend.hpp"
#include "agentgraph/core.hpp"
#include "agentgraph/graph.hpp"
#include "agentgraph/profiles.hpp"
#include "agentgraph/prompts.hpp"
#include "agentgraph/rng.hpp"
#include "agentgraph/task.hpp"

namespace agentgraph {

struct AgentAnswer {
    AgentId agent = -1;
    std::string raw;        // full completion text
    std::string reasoning;  // text preceding the final answer span (or raw)
    NormalizedAnswer extracted;
    bool extraction_failed = true;
    std::optional<double> confidence;
    TokenUsage usage;
};

/// The user prompt that poses the task to a worker agent.
inline std::string task_user_prompt(const PromptSet& prompts, TaskKind kind,
                                    const std::string& question) {
    switch (kind) {
        case TaskKind::Math:
        case TaskKind::ScienceMc:
            return render_template(prompts.question, {{"question", question}});
        case TaskKind::Sorting:
            return render_template(prompts.sorting, {{"question", question}});
        case TaskKind::CreativeWriting:
            return render_template(prompts.creative_task, {{"input", question}});
    }
    throw InvariantError("unknown TaskKind");
}

namespace detail {

/// Everything before the last answer span, so transcripts can show the
/// chain of thought separately from the verdict.
inline std::string reasoning_prefix(const std::string& raw) {
    auto spans = find_marker_positions(raw);
    if (spans.size() < 2) return detail::trim(raw);
    std::size_t last_open = spans[spans.size() - 2];
    return detail::trim(raw.substr(0, last_open));
}

/// Content of the last line that carries the given marker, or nullopt.
inline std::optional<std::string> after_last_marker(const std::string& text,
                                                    const std::string& marker) {
    auto pos = text.rfind(marker);
    if (pos == std::string::npos) return std::nullopt;
    return text.substr(pos + marker.size());
}

}  // namespace detail

/// Task-aware answer extraction: the last ###…### span wins; sorting
/// falls back to the trailing "Output:" line and creative writing to the
/// text after the last "Passage:" marker (or the whole reply).
inline std::pair<NormalizedAnswer, bool> extract_final_answer(const std::string& raw,
                                                              TaskKind kind) {
    AnswerKind akind = answer_kind_for(kind);
    auto span = last_marker_span(raw);
    if (span) {
        auto parsed = parse_answer_text(*span, akind);
        if (parsed) return {*parsed, false};
    }
    if (kind == TaskKind::Sorting) {
        auto tail = detail::after_last_marker(raw, "Output:");
        if (tail) {
            auto line_end = tail->find('\n');
            std::string line = line_end == std::string::npos ? *tail : tail->substr(0, line_end);
            auto parsed = parse_answer_text(line, akind);
            if (parsed) return {*parsed, false};
        }
    }
    if (kind == TaskKind::CreativeWriting) {
        auto tail = detail::after_last_marker(raw, "Passage:");
        std::string passage = tail ? *tail : raw;
        auto parsed = parse_answer_text(passage, akind);
        if (parsed) return {*parsed, false};
    }
    return {NormalizedAnswer{}, true};
}

/// One profiled worker agent bound to a backend and task family.
class Agent {
public:
    Agent(AgentId id, AgentProfile profile, Backend* backend, TaskKind kind,
          const PromptSet* prompts, SamplingParams params = {})
        : id_(id),
          profile_(std::move(profile)),
          backend_(backend),
          kind_(kind),
          prompts_(prompts),
          params_(params) {
        if (backend_ == nullptr) throw InvariantError("agent needs a backend");
        if (prompts_ == nullptr) throw InvariantError("agent needs prompts");
    }

    AgentId id() const { return id_; }
    const AgentProfile& profile() const { return profile_; }
    TaskKind task_kind() const { return kind_; }

    std::string system_prompt() const { return profile_.system_prompt(kind_); }

    /// Fresh solve with forced decoding over k completions.
    AgentAnswer solve(const std::string& question, int k, std::mt19937_64& rng) const {
        if (question.empty()) throw InvariantError("solve needs a non-empty question");
        std::vector<ChatMessage> messages = {
            {Role::System, system_prompt()},
            {Role::User, task_user_prompt(*prompts_, kind_, question)},
        };
        Completion c = forced_generate(*backend_, messages, params_, k, rng);
        return make_answer(c);
    }

    /// Revises this agent's answer after seeing another agent's response.
    /// The exchange continues the solve conversation: question, own prior
    /// reply, then the debate prompt quoting the other side.
    AgentAnswer debate_reply(const std::string& question, const AgentAnswer& own,
                             const std::string& other_raw) const {
        std::vector<ChatMessage> messages = {
            {Role::System, system_prompt()},
            {Role::User, task_user_prompt(*prompts_, kind_, question)},
            {Role::Assistant, own.raw},
            {Role::User, render_template(prompts_->debate, {{"response1", other_raw}})},
        };
        Completion c = backend_->complete(messages, params_);
        return make_answer(c);
    }

    /// One confidence rating in [0,1] for one sample question, nullopt if
    /// the reply does not parse.
    std::optional<double> rate_confidence(const std::string& question,
                                          TokenUsage* usage) const {
        std::vector<ChatMessage> messages = {
            {Role::System, system_prompt()},
            {Role::User, render_template(prompts_->confidence,
                                         {{"task", task_label(kind_)},
                                          {"question", question}})},
        };
        Completion c = backend_->complete(messages, params_);
        if (usage) usage->add(c);
        return parse_confidence(c.text);
    }

private:
    AgentAnswer make_answer(const Completion& c) const {
        AgentAnswer a;
        a.agent = id_;
        a.raw = c.text;
        a.reasoning = detail::reasoning_prefix(c.text);
        auto [extracted, failed] = extract_final_answer(c.text, kind_);
        a.extracted = extracted;
        a.extraction_failed = failed;
        a.usage.add(c);
        return a;
    }

    AgentId id_;
    AgentProfile profile_;
    Backend* backend_;
    TaskKind kind_;
    const PromptSet* prompts_;
    SamplingParams params_;
};

struct ConfidenceResult {
    double utility = 0.5;
    int parsed = 0;
    int total = 0;
    bool fallback_used = false;
    TokenUsage usage;
};

/// Averages per-question self-ratings; unparseable replies are skipped
/// and a full wipe-out falls back to the default utility 0.5.
inline ConfidenceResult elicit_confidence(const Agent& agent,
                                          const std::vector<std::string>& sample_questions) {
    if (sample_questions.empty())
        throw InvariantError("confidence elicitation needs at least one sample question");
    ConfidenceResult r;
    r.total = static_cast<int>(sample_questions.size());
    double sum = 0.0;
    for (const auto& q : sample_questions) {
        auto v = agent.rate_confidence(q, &r.usage);
        if (v) {
            sum += *v;
            ++r.parsed;
        }
    }
    if (r.parsed == 0) {
        r.fallback_used = true;
        r.utility = 0.5;
    } else {
        r.utility = sum / r.parsed;
    }
    return r;
}

struct DebateOutcome {
    AgentAnswer revised_i;
    AgentAnswer revised_j;
    bool kept_i = false;  // i's revision failed extraction; prior answer kept
    bool kept_j = false;
    TokenUsage usage;
};

/// One exchange round on an edge. Both sides respond to the PRE-debate
/// answers (lo speaks first but j never sees i's revision), and a side
/// whose revision fails extraction keeps its previous answer.
inline DebateOutcome debate(const Agent& agent_i, const Agent& agent_j,
                            const std::string& question, const AgentAnswer& answer_i,
                            const AgentAnswer& answer_j) {
    DebateOutcome out;
    AgentAnswer ri = agent_i.debate_reply(question, answer_i, answer_j.raw);
    AgentAnswer rj = agent_j.debate_reply(question, answer_j, answer_i.raw);
    out.usage.add_usage(ri.usage);
    out.usage.add_usage(rj.usage);
    if (ri.extraction_failed) {
        out.revised_i = answer_i;
        out.kept_i = true;
    } else {
        out.revised_i = std::move(ri);
    }
    if (rj.extraction_failed) {
        out.revised_j = answer_j;
        out.kept_j = true;
    } else {
        out.revised_j = std::move(rj);
    }
    return out;
}

}  // namespace agentgraph
