#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentgraph/agents.hpp"
#include "agentgraph/answer.hpp"
#include "agentgraph/core.hpp"
#include "agentgraph/dataset.hpp"
#include "agentgraph/graph.hpp"
#include "agentgraph/rng.hpp"
#include "agentgraph/transcript.hpp"

namespace agentgraph {

/// The minimal prefix of score-descending edges that gives every agent
/// degree >= 1, executed in order at inference time.
struct InferencePlan {
    std::vector<EdgeId> ordered_edges;
    std::set<AgentId> covered_agents;
};

/// Sorts edges by descending score (ties: ascending (lo,hi)) and takes
/// the shortest covering prefix.
inline InferencePlan build_inference_plan(const ScoreMatrix& scores, int n_agents) {
    if (n_agents < 2) throw ConfigError("inference needs at least 2 agents");
    std::vector<std::pair<EdgeId, double>> sorted;
    for (const auto& e : all_edges(n_agents)) {
        if (!scores.contains(e))
            throw InvariantError("score matrix is missing edge " + e.str());
        sorted.emplace_back(e, scores.at(e));
    }
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    InferencePlan plan;
    for (const auto& [edge, score] : sorted) {
        plan.ordered_edges.push_back(edge);
        plan.covered_agents.insert(edge.lo);
        plan.covered_agents.insert(edge.hi);
        if (static_cast<int>(plan.covered_agents.size()) == n_agents) break;
    }
    return plan;
}

struct VoteResult {
    NormalizedAnswer final;
    std::map<std::string, int> tally;  // canonical answer -> count
    bool tie_broken = false;
    bool abstained = false;
};

/// Mode of the answer multiset; numeric answers bucket by tolerance
/// equality. Ties are broken uniformly at random among the canonical-
/// sorted argmax answers; an empty list abstains.
inline VoteResult majority_vote(const std::vector<NormalizedAnswer>& answers,
                                std::mt19937_64& rng) {
    VoteResult result;
    if (answers.empty()) {
        result.abstained = true;
        return result;
    }
    std::vector<std::pair<NormalizedAnswer, int>> buckets;
    for (const auto& a : answers) {
        bool found = false;
        for (auto& [rep, count] : buckets) {
            if (answers_equal(rep, a)) {
                ++count;
                found = true;
                break;
            }
        }
        if (!found) buckets.emplace_back(a, 1);
    }
    int best = 0;
    for (const auto& [rep, count] : buckets) {
        result.tally[rep.canonical()] = count;
        best = std::max(best, count);
    }
    std::vector<const NormalizedAnswer*> winners;
    for (const auto& [rep, count] : buckets)
        if (count == best) winners.push_back(&rep);
    std::sort(winners.begin(), winners.end(),
              [](const NormalizedAnswer* a, const NormalizedAnswer* b) {
                  return a->canonical() < b->canonical();
              });
    if (winners.size() > 1) {
        result.tie_broken = true;
        result.final =
            *winners[next_bounded(rng, static_cast<std::uint64_t>(winners.size()))];
    } else {
        result.final = *winners.front();
    }
    return result;
}

/// Index of the lone dissenter when exactly one answer is unique and all
/// remaining answers agree; nullopt otherwise. Needs >= 3 answers (a 1v1
/// split has no majority).
inline std::optional<std::size_t> find_unique_dissenter(
    const std::vector<NormalizedAnswer>& answers) {
    if (answers.size() < 3) return std::nullopt;
    std::vector<std::pair<NormalizedAnswer, std::vector<std::size_t>>> buckets;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        bool found = false;
        for (auto& [rep, members] : buckets) {
            if (answers_equal(rep, answers[i])) {
                members.push_back(i);
                found = true;
                break;
            }
        }
        if (!found) buckets.push_back({answers[i], {i}});
    }
    if (buckets.size() != 2) return std::nullopt;
    if (buckets[0].second.size() == 1 && buckets[1].second.size() >= 2)
        return buckets[0].second.front();
    if (buckets[1].second.size() == 1 && buckets[0].second.size() >= 2)
        return buckets[1].second.front();
    return std::nullopt;
}

struct InferenceConfig {
    int forced_k = 3;
    bool reconsider_minority = false;
};

struct QuestionResult {
    std::string question_id;
    VoteResult vote;
    std::map<AgentId, AgentAnswer> final_answers;
    bool reconsider_triggered = false;
    AgentId dissenter = -1;
};

namespace detail {

inline nlohmann::json infer_answer_fields(const AgentAnswer& a) {
    return {{"agent", a.agent},
            {"extracted",
             a.extraction_failed ? nlohmann::json() : nlohmann::json(a.extracted.canonical())},
            {"failed", a.extraction_failed}};
}

}  // namespace detail

/// Algorithm-2 execution for one question: walk the plan, solving each
/// agent on first appearance and debating with current answers (revisions
/// carry forward), optionally reconsider a lone dissenter, then vote.
/// RNG streams are derived per question so independent questions can run
/// concurrently and deterministically.
inline QuestionResult run_inference(const InferencePlan& plan, const TaskInstance& inst,
                                    std::vector<Agent>& workers, const InferenceConfig& cfg,
                                    const RngPool& pool, Transcript* transcript) {
    if (plan.ordered_edges.empty()) throw InvariantError("empty inference plan");
    if (cfg.forced_k < 1) throw ConfigError("forced_k must be >= 1");
    std::mt19937_64 forced_rng(pool.seed_for("forced_pick:" + inst.id));
    std::mt19937_64 tie_rng(pool.seed_for("tie_break:" + inst.id));

    auto emit = [&](nlohmann::json j) {
        if (transcript) transcript->event(std::move(j));
    };

    QuestionResult result;
    result.question_id = inst.id;
    std::map<AgentId, AgentAnswer>& current = result.final_answers;

    for (const EdgeId& edge : plan.ordered_edges) {
        for (AgentId id : {edge.lo, edge.hi}) {
            if (current.count(id)) continue;
            Agent& agent = workers[static_cast<std::size_t>(id)];
            AgentAnswer a = agent.solve(inst.question, cfg.forced_k, forced_rng);
            nlohmann::json ev = detail::infer_answer_fields(a);
            ev["type"] = "solve";
            ev["question"] = inst.id;
            emit(std::move(ev));
            current.emplace(id, std::move(a));
        }
        Agent& agent_i = workers[static_cast<std::size_t>(edge.lo)];
        Agent& agent_j = workers[static_cast<std::size_t>(edge.hi)];
        DebateOutcome outcome = debate(agent_i, agent_j, inst.question, current.at(edge.lo),
                                       current.at(edge.hi));
        emit({{"type", "debate"},
              {"edge", edge.str()},
              {"question", inst.id},
              {"i", detail::infer_answer_fields(outcome.revised_i)},
              {"j", detail::infer_answer_fields(outcome.revised_j)},
              {"kept_i", outcome.kept_i},
              {"kept_j", outcome.kept_j}});
        current.at(edge.lo) = std::move(outcome.revised_i);
        current.at(edge.hi) = std::move(outcome.revised_j);
    }

    if (cfg.reconsider_minority) {
        // Trigger only on a clean state: every agent parsed, exactly one
        // dissenter against an otherwise-unanimous answer.
        std::vector<NormalizedAnswer> state;
        std::vector<AgentId> order;
        for (const auto& [id, a] : current) {
            if (a.extraction_failed) break;
            state.push_back(a.extracted);
            order.push_back(id);
        }
        std::optional<std::size_t> dissent_idx;
        if (state.size() == current.size()) dissent_idx = find_unique_dissenter(state);
        if (dissent_idx) {
            AgentId dissenter = order[*dissent_idx];
            result.reconsider_triggered = true;
            result.dissenter = dissenter;
            const std::string dissent_raw = current.at(dissenter).raw;
            for (auto& [id, answer] : current) {
                if (id == dissenter) continue;
                Agent& agent = workers[static_cast<std::size_t>(id)];
                AgentAnswer revised = agent.debate_reply(inst.question, answer, dissent_raw);
                if (!revised.extraction_failed) answer = std::move(revised);
            }
        }
        emit({{"type", "reconsider"},
              {"question", inst.id},
              {"triggered", result.reconsider_triggered},
              {"dissenter",
               result.reconsider_triggered ? nlohmann::json(result.dissenter)
                                           : nlohmann::json()}});
    }

    std::vector<NormalizedAnswer> votes;
    for (const auto& [id, a] : current)
        if (!a.extraction_failed) votes.push_back(a.extracted);
    result.vote = majority_vote(votes, tie_rng);

    nlohmann::json tally = nlohmann::json::object();
    for (const auto& [key, count] : result.vote.tally) tally[key] = count;
    emit({{"type", "vote"},
          {"question", inst.id},
          {"tally", tally},
          {"final",
           result.vote.abstained ? nlohmann::json() : nlohmann::json(result.vote.final.canonical())},
          {"tie_broken", result.vote.tie_broken},
          {"abstained", result.vote.abstained}});
    return result;
}

}  // namespace agentgraph
