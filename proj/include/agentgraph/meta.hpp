#pragma once

#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "agentgraph/agents.hpp"
#include "agentgraph/answer.hpp"
#include "agentgraph/backend.hpp"
#include "agentgraph/core.hpp"
#include "agentgraph/graph.hpp"
#include "agentgraph/prompts.hpp"
#include "agentgraph/rng.hpp"

namespace agentgraph {

struct MetaDecision {
    EdgeId edge{0, 1};
    Decision verdict = Decision::Keep;
    std::string raw_text;
    bool fallback_used = false;
    int attempts = 0;
    TokenUsage usage;
};

struct MetaAction {
    EdgeId chosen_edge{0, 1};
    std::string raw_text;
    bool fallback_used = false;
    int attempts = 0;
    TokenUsage usage;
};

struct ReflectOutcome {
    ReflectionRecord record;
    bool backend_failed = false;
    TokenUsage usage;
};

/// Span content must be exactly the word keep or delete (quotes and a
/// trailing period tolerated); anything else fails the parse, including
/// the verbatim placeholder "your_decision".
inline std::optional<Decision> parse_decision(const std::string& raw) {
    auto span = last_marker_span(raw);
    if (!span) return std::nullopt;
    std::string word = detail::normalize_text(*span);
    while (word.size() >= 2 && (word.front() == '\'' || word.front() == '"') &&
           word.back() == word.front())
        word = detail::normalize_text(word.substr(1, word.size() - 2));
    if (word == "keep") return Decision::Keep;
    if (word == "delete") return Decision::Delete;
    return std::nullopt;
}

/// Finds the last "make connection (i, j)" anywhere in the reply and
/// canonicalizes the pair. The ### wrapper is optional: replies that
/// skip the ACTION scaffolding still parse.
inline std::optional<EdgeId> parse_action(const std::string& raw) {
    static const std::regex kPattern(R"(make connection\s*\(\s*(\d{1,9})\s*,\s*(\d{1,9})\s*\))",
                                     std::regex::icase);
    auto begin = std::sregex_iterator(raw.begin(), raw.end(), kPattern);
    auto end = std::sregex_iterator();
    std::optional<EdgeId> found;
    for (auto it = begin; it != end; ++it) {
        int a = std::stoi((*it)[1].str());
        int b = std::stoi((*it)[2].str());
        if (a == b) continue;  // self-loops never name a real connection
        found = EdgeId(a, b);
    }
    return found;
}

/// The reflect/decide/propose side of the loop. Holds the meta backend,
/// prompt set, and the shared parse-retry budget.
class MetaAgents {
public:
    MetaAgents(Backend* backend, const PromptSet* prompts, SamplingParams params = {},
               int parse_attempts = 3)
        : backend_(backend), prompts_(prompts), params_(params), attempts_(parse_attempts) {
        if (backend_ == nullptr) throw InvariantError("meta agents need a backend");
        if (prompts_ == nullptr) throw InvariantError("meta agents need prompts");
        if (attempts_ < 1) throw ConfigError("parse_attempts must be >= 1");
    }

    /// Feedback on one debated edge. both_correct is computed locally from
    /// the gold answer and never trusts the feedback text; a backend
    /// failure yields an empty-feedback record with backend_failed set.
    ReflectOutcome reflect(const std::string& question, const NormalizedAnswer& gold,
                           const AgentAnswer& before_i, const AgentAnswer& before_j,
                           const AgentAnswer& after_i, const AgentAnswer& after_j,
                           EdgeId edge, int epoch, const std::string& datapoint_id) const {
        ReflectOutcome out;
        out.record.edge = edge;
        out.record.epoch = epoch;
        out.record.datapoint_id = datapoint_id;
        out.record.both_correct = answer_matches(after_i, gold) && answer_matches(after_j, gold);
        std::string prompt = render_template(
            prompts_->reflect,
            {{"question", question},
             {"answer", gold.canonical()},
             {"agent1_num", std::to_string(edge.lo)},
             {"agent2_num", std::to_string(edge.hi)},
             {"response1", before_i.raw},
             {"response2", before_j.raw},
             {"response1_after", after_i.raw},
             {"response2_after", after_j.raw}});
        try {
            Completion c = backend_->complete({{Role::User, prompt}}, params_);
            out.record.feedback_text = c.text;
            out.usage.add(c);
        } catch (const BackendError&) {
            out.record.feedback_text.clear();
            out.backend_failed = true;
        }
        return out;
    }

    /// Keep-or-delete verdict for the edge just debated. Unparseable
    /// replies burn retries; when the budget is spent the fallback keeps
    /// the edge iff both agents were correct.
    MetaDecision decide(const ReflectionRecord& record,
                        const std::vector<ReflectionRecord>& history,
                        const std::string& after_i_raw, const std::string& after_j_raw) const {
        std::string prompt = render_template(
            prompts_->decide, {{"agent1_num", std::to_string(record.edge.lo)},
                               {"agent2_num", std::to_string(record.edge.hi)},
                               {"response1", after_i_raw},
                               {"response2", after_j_raw},
                               {"feedback", record.feedback_text}});
        if (!history.empty()) {
            std::ostringstream h;
            h << "\nFeedback history for this connection:";
            for (const auto& r : history)
                h << "\n[epoch " << r.epoch << ", datapoint " << r.datapoint_id
                  << "] " << r.feedback_text;
            prompt += h.str();
        }
        MetaDecision d;
        d.edge = record.edge;
        for (int attempt = 0; attempt < attempts_; ++attempt) {
            Completion c = backend_->complete({{Role::User, prompt}}, params_);
            d.usage.add(c);
            ++d.attempts;
            d.raw_text = c.text;
            if (auto v = parse_decision(c.text)) {
                d.verdict = *v;
                return d;
            }
        }
        d.fallback_used = true;
        d.verdict = record.both_correct ? Decision::Keep : Decision::Delete;
        return d;
    }

    /// Picks the next edge to explore this epoch. A single remaining edge
    /// is a forced choice (no backend call); parse failures and explored
    /// picks burn retries, then a weighted sample over the unexplored
    /// edges decides.
    MetaAction propose_next(const std::set<EdgeId>& unexplored, const ScoreMatrix& scores,
                            const std::vector<std::string>& conversation_history,
                            std::mt19937_64& rng) const {
        if (unexplored.empty())
            throw InvariantError("propose_next requires at least one unexplored edge");
        MetaAction a;
        if (unexplored.size() == 1) {
            a.chosen_edge = *unexplored.begin();
            return a;
        }
        std::ostringstream listing;
        bool first = true;
        for (const auto& e : unexplored) {
            if (!first) listing << "; ";
            first = false;
            listing << "(" << e.lo << ", " << e.hi << "): " << format_score(scores.at(e));
        }
        std::string prompt =
            render_template(prompts_->propose, {{"matrix_connect", listing.str()}});
        if (!conversation_history.empty()) {
            std::ostringstream h;
            h << "\nConversation history:";
            for (const auto& line : conversation_history) h << "\n" << line;
            prompt += h.str();
        }
        for (int attempt = 0; attempt < attempts_; ++attempt) {
            Completion c = backend_->complete({{Role::User, prompt}}, params_);
            a.usage.add(c);
            ++a.attempts;
            a.raw_text = c.text;
            auto edge = parse_action(c.text);
            if (edge && unexplored.count(*edge)) {
                a.chosen_edge = *edge;
                return a;
            }
        }
        a.fallback_used = true;
        std::set<EdgeId> exclude;
        for (const auto& [e, s] : scores.scores())
            if (!unexplored.count(e)) exclude.insert(e);
        auto probs = edge_probabilities(scores);
        a.chosen_edge = weighted_sample_edge(probs, exclude, rng);
        return a;
    }

private:
    static bool answer_matches(const AgentAnswer& a, const NormalizedAnswer& gold) {
        return !a.extraction_failed && answers_equal(a.extracted, gold);
    }

    static std::string format_score(double s) {
        std::ostringstream os;
        os.precision(6);
        os << s;
        return os.str();
    }

    Backend* backend_;
    const PromptSet* prompts_;
    SamplingParams params_;
    int attempts_;
};

}  // namespace agentgraph
