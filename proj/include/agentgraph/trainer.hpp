#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentgraph/agents.hpp"
#include "agentgraph/core.hpp"
#include "agentgraph/dataset.hpp"
#include "agentgraph/graph.hpp"
#include "agentgraph/ledger.hpp"
#include "agentgraph/meta.hpp"
#include "agentgraph/rng.hpp"
#include "agentgraph/transcript.hpp"

namespace agentgraph {

struct TrainConfig {
    int epochs = 3;
    double alpha = 0.1;
    int train_sample_count = 3;
    int forced_k = 3;
    bool carry_answers = false;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (alpha <= 0.0 || alpha >= 1.0) throw ConfigError("alpha must be in (0,1)");
        if (train_sample_count < 1) throw ConfigError("train_sample_count must be >= 1");
        if (forced_k < 1) throw ConfigError("forced_k must be >= 1");
    }
};

/// One score update: the atomic unit of the training log.
struct UpdateEntry {
    int epoch = 1;  // 1-based
    std::string datapoint_id;
    EdgeId edge{0, 1};
    Decision decision = Decision::Keep;
    double score_before = 0.0;
    double score_after = 0.0;
    bool decide_fallback = false;
    bool propose_fallback = false;

    nlohmann::json to_json() const {
        return {{"epoch", epoch},
                {"datapoint", datapoint_id},
                {"edge", edge.str()},
                {"decision", decision == Decision::Keep ? "keep" : "delete"},
                {"score_before", score_before},
                {"score_after", score_after},
                {"decide_fallback", decide_fallback},
                {"propose_fallback", propose_fallback}};
    }

    static UpdateEntry from_json(const nlohmann::json& j) {
        UpdateEntry u;
        u.epoch = j.at("epoch").get<int>();
        u.datapoint_id = j.at("datapoint").get<std::string>();
        u.edge = EdgeId::parse(j.at("edge").get<std::string>());
        u.decision = j.at("decision").get<std::string>() == "keep" ? Decision::Keep
                                                                   : Decision::Delete;
        u.score_before = j.at("score_before").get<double>();
        u.score_after = j.at("score_after").get<double>();
        u.decide_fallback = j.at("decide_fallback").get<bool>();
        u.propose_fallback = j.at("propose_fallback").get<bool>();
        return u;
    }
};

struct EpochSnapshot {
    int epoch = 1;
    std::map<EdgeId, double> scores;

    nlohmann::json to_json() const {
        nlohmann::json s = nlohmann::json::object();
        for (const auto& [e, v] : scores) s[e.str()] = v;
        return {{"epoch", epoch}, {"scores", s}};
    }

    static EpochSnapshot from_json(const nlohmann::json& j) {
        EpochSnapshot snap;
        snap.epoch = j.at("epoch").get<int>();
        for (const auto& [key, value] : j.at("scores").items())
            snap.scores[EdgeId::parse(key)] = value.get<double>();
        return snap;
    }
};

struct TrainReport {
    std::vector<UpdateEntry> updates;
    std::vector<EpochSnapshot> epoch_snapshots;
    std::int64_t ledger_prompt_tokens = 0;
    std::int64_t ledger_completion_tokens = 0;

    nlohmann::json to_json() const {
        nlohmann::json ups = nlohmann::json::array();
        for (const auto& u : updates) ups.push_back(u.to_json());
        nlohmann::json snaps = nlohmann::json::array();
        for (const auto& s : epoch_snapshots) snaps.push_back(s.to_json());
        return {{"updates", ups},
                {"epoch_snapshots", snaps},
                {"ledger_delta",
                 {{"prompt_tokens", ledger_prompt_tokens},
                  {"completion_tokens", ledger_completion_tokens}}}};
    }

    static TrainReport from_json(const nlohmann::json& j) {
        TrainReport r;
        for (const auto& u : j.at("updates")) r.updates.push_back(UpdateEntry::from_json(u));
        for (const auto& s : j.at("epoch_snapshots"))
            r.epoch_snapshots.push_back(EpochSnapshot::from_json(s));
        r.ledger_prompt_tokens = j.at("ledger_delta").at("prompt_tokens").get<std::int64_t>();
        r.ledger_completion_tokens =
            j.at("ledger_delta").at("completion_tokens").get<std::int64_t>();
        return r;
    }
};

/// Where a (possibly interrupted) training run stands: the epoch and
/// datapoint index the next update belongs to.
struct TrainProgress {
    int epoch = 1;          // 1-based
    int datapoint = 0;      // 0-based index into the training sample
    bool completed = false;

    nlohmann::json to_json() const {
        return {{"epoch", epoch}, {"datapoint", datapoint}, {"completed", completed}};
    }

    static TrainProgress from_json(const nlohmann::json& j) {
        TrainProgress p;
        p.epoch = j.at("epoch").get<int>();
        p.datapoint = j.at("datapoint").get<int>();
        p.completed = j.at("completed").get<bool>();
        return p;
    }
};

/// Collaborators and sinks for one training run. Transcript, ledger,
/// context and checkpoint hooks are optional.
struct TrainContext {
    std::vector<Agent>* workers = nullptr;
    MetaAgents* meta = nullptr;
    RngPool* rng = nullptr;
    Transcript* transcript = nullptr;
    std::function<void(const nlohmann::json&)> set_llm_context;
    std::function<void(const CollabGraph&, const TrainReport&, const TrainProgress&)>
        checkpoint;
};

namespace detail {

inline nlohmann::json answer_event_fields(const AgentAnswer& a) {
    return {{"agent", a.agent},
            {"extracted", a.extraction_failed ? nlohmann::json() : nlohmann::json(a.extracted.canonical())},
            {"failed", a.extraction_failed}};
}

}  // namespace detail

/// The verbal-RL training loop: per epoch, per datapoint, visit every
/// edge once — solve both endpoints, debate, reflect, decide, update the
/// score, mark the edge. Epoch 1 picks edges by weighted sampling; later
/// epochs ask the meta-agent. `report` accumulates across resumes; pass
/// `start` to continue from a checkpointed position.
inline TrainProgress train(CollabGraph& graph, const std::vector<TaskInstance>& train_set,
                           const TrainConfig& cfg, TrainContext ctx, TrainReport& report,
                           std::optional<TrainProgress> start = std::nullopt) {
    cfg.validate();
    if (train_set.empty()) throw ConfigError("training set is empty");
    for (const auto& inst : train_set)
        if (!inst.gold)
            throw ConfigError("training requires gold answers; datapoint " + inst.id +
                              " has none");
    if (ctx.workers == nullptr || ctx.meta == nullptr || ctx.rng == nullptr)
        throw InvariantError("train needs workers, meta agents, and an rng pool");
    if (static_cast<int>(ctx.workers->size()) != graph.n_agents)
        throw InvariantError("worker count does not match graph");
    if (graph.n_agents < 2) throw ConfigError("training needs at least 2 agents");

    auto add_usage = [&report](const TokenUsage& u) {
        report.ledger_prompt_tokens += u.prompt_tokens;
        report.ledger_completion_tokens += u.completion_tokens;
    };

    TrainProgress progress;
    if (start) {
        progress = *start;
        if (progress.completed) return progress;
        if (progress.epoch < 1 || progress.epoch > cfg.epochs ||
            progress.datapoint < 0 ||
            progress.datapoint >= static_cast<int>(train_set.size()))
            throw ConfigError("checkpoint progress is out of range for this config");
    }

    auto emit = [&](nlohmann::json j) {
        if (ctx.transcript) ctx.transcript->event(std::move(j));
    };

    for (int epoch = progress.epoch; epoch <= cfg.epochs; ++epoch) {
        int d0 = (epoch == progress.epoch) ? progress.datapoint : 0;
        for (int d = d0; d < static_cast<int>(train_set.size()); ++d) {
            const TaskInstance& inst = train_set[static_cast<std::size_t>(d)];
            bool resuming_here = start && epoch == start->epoch && d == start->datapoint;
            if (!resuming_here) graph.clear_marks();
            if (ctx.set_llm_context)
                ctx.set_llm_context({{"epoch", epoch}, {"datapoint", inst.id}});

            std::vector<std::string> walk_history;
            std::map<AgentId, AgentAnswer> carried;
            try {
                while (true) {
                    std::set<EdgeId> todo = graph.unmarked();
                    if (todo.empty()) break;

                    EdgeId edge(0, 1);
                    bool propose_fallback = false;
                    if (epoch == 1) {
                        auto probs = edge_probabilities(graph.scores);
                        edge = weighted_sample_edge(probs, graph.marked,
                                                    ctx.rng->stream("edge_select"));
                        emit({{"type", "select"},
                              {"policy", "weighted"},
                              {"edge", edge.str()},
                              {"epoch", epoch},
                              {"datapoint", inst.id}});
                    } else {
                        MetaAction action = ctx.meta->propose_next(
                            todo, graph.scores, walk_history,
                            ctx.rng->stream("propose_fallback"));
                        add_usage(action.usage);
                        edge = action.chosen_edge;
                        propose_fallback = action.fallback_used;
                        emit({{"type", "select"},
                              {"policy", "propose"},
                              {"edge", edge.str()},
                              {"fallback", action.fallback_used},
                              {"attempts", action.attempts},
                              {"epoch", epoch},
                              {"datapoint", inst.id}});
                    }

                    Agent& agent_i = (*ctx.workers)[static_cast<std::size_t>(edge.lo)];
                    Agent& agent_j = (*ctx.workers)[static_cast<std::size_t>(edge.hi)];

                    auto solve_for = [&](Agent& agent) -> AgentAnswer {
                        if (cfg.carry_answers) {
                            auto it = carried.find(agent.id());
                            if (it != carried.end()) return it->second;
                        }
                        AgentAnswer a = agent.solve(inst.question, cfg.forced_k,
                                                    ctx.rng->stream("forced_pick"));
                        add_usage(a.usage);
                        nlohmann::json ev = detail::answer_event_fields(a);
                        ev["type"] = "solve";
                        ev["epoch"] = epoch;
                        ev["datapoint"] = inst.id;
                        emit(std::move(ev));
                        return a;
                    };
                    AgentAnswer before_i = solve_for(agent_i);
                    AgentAnswer before_j = solve_for(agent_j);

                    DebateOutcome outcome =
                        debate(agent_i, agent_j, inst.question, before_i, before_j);
                    add_usage(outcome.usage);
                    emit({{"type", "debate"},
                          {"edge", edge.str()},
                          {"epoch", epoch},
                          {"datapoint", inst.id},
                          {"i", detail::answer_event_fields(outcome.revised_i)},
                          {"j", detail::answer_event_fields(outcome.revised_j)},
                          {"kept_i", outcome.kept_i},
                          {"kept_j", outcome.kept_j}});
                    if (cfg.carry_answers) {
                        carried[agent_i.id()] = outcome.revised_i;
                        carried[agent_j.id()] = outcome.revised_j;
                    }

                    ReflectOutcome reflection = ctx.meta->reflect(
                        inst.question, *inst.gold, before_i, before_j, outcome.revised_i,
                        outcome.revised_j, edge, epoch, inst.id);
                    add_usage(reflection.usage);
                    if (reflection.backend_failed && ctx.transcript)
                        ctx.transcript->warning("reflect backend failed; empty feedback",
                                                {{"edge", edge.str()},
                                                 {"epoch", epoch},
                                                 {"datapoint", inst.id}});
                    emit({{"type", "reflect"},
                          {"edge", edge.str()},
                          {"epoch", epoch},
                          {"datapoint", inst.id},
                          {"both_correct", reflection.record.both_correct},
                          {"backend_failed", reflection.backend_failed}});

                    const std::vector<ReflectionRecord>& history =
                        graph.feedback_history[edge];
                    MetaDecision decision = ctx.meta->decide(
                        reflection.record, history, outcome.revised_i.raw,
                        outcome.revised_j.raw);
                    add_usage(decision.usage);
                    graph.feedback_history[edge].push_back(reflection.record);
                    emit({{"type", "decision"},
                          {"edge", edge.str()},
                          {"epoch", epoch},
                          {"datapoint", inst.id},
                          {"verdict", decision.verdict == Decision::Keep ? "keep" : "delete"},
                          {"fallback", decision.fallback_used},
                          {"attempts", decision.attempts}});

                    UpdateEntry entry;
                    entry.epoch = epoch;
                    entry.datapoint_id = inst.id;
                    entry.edge = edge;
                    entry.decision = decision.verdict;
                    entry.score_before = graph.scores.at(edge);
                    entry.score_after = graph.scores.update(edge, decision.verdict);
                    entry.decide_fallback = decision.fallback_used;
                    entry.propose_fallback = propose_fallback;
                    graph.marked.insert(edge);
                    report.updates.push_back(entry);
                    emit({{"type", "update"},
                          {"edge", edge.str()},
                          {"epoch", epoch},
                          {"datapoint", inst.id},
                          {"decision",
                           decision.verdict == Decision::Keep ? "keep" : "delete"},
                          {"score_before", entry.score_before},
                          {"score_after", entry.score_after}});

                    walk_history.push_back(
                        "Explored (" + std::to_string(edge.lo) + ", " +
                        std::to_string(edge.hi) + "): " +
                        (decision.verdict == Decision::Keep ? "kept" : "deleted"));

                    progress = TrainProgress{epoch, d, false};
                    if (ctx.checkpoint) ctx.checkpoint(graph, report, progress);
                }
            } catch (const BackendUnavailableError& e) {
                // Current state is already checkpointed after the last
                // completed update; surface a resumable abort.
                if (ctx.transcript)
                    ctx.transcript->warning(
                        "backend unavailable; training aborted, resume from checkpoint",
                        {{"epoch", epoch}, {"datapoint", inst.id}});
                if (ctx.checkpoint) ctx.checkpoint(graph, report, TrainProgress{epoch, d, false});
                throw BackendUnavailableError(std::string(e.what()) +
                                              " (training checkpointed; resumable)");
            }
        }
        EpochSnapshot snap;
        snap.epoch = epoch;
        snap.scores = graph.scores.scores();
        report.epoch_snapshots.push_back(std::move(snap));
    }

    progress = TrainProgress{cfg.epochs, static_cast<int>(train_set.size()) - 1, true};
    if (ctx.checkpoint) ctx.checkpoint(graph, report, progress);
    return progress;
}

}  // namespace agentgraph
