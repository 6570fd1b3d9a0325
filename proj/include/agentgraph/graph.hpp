#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentgraph/core.hpp"
#include "agentgraph/rng.hpp"

namespace agentgraph {

/// Undirected agent pair, canonicalized so lo < hi. No self-loops.
struct EdgeId {
    AgentId lo = 0;
    AgentId hi = 1;

    EdgeId() = default;
    EdgeId(AgentId a, AgentId b) {
        if (a == b) throw InvariantError("edge may not be a self-loop");
        if (a < 0 || b < 0) throw InvariantError("agent indices must be >= 0");
        lo = a < b ? a : b;
        hi = a < b ? b : a;
    }

    auto operator<=>(const EdgeId&) const = default;

    std::string str() const { return std::to_string(lo) + "-" + std::to_string(hi); }

    static EdgeId parse(const std::string& key) {
        auto dash = key.find('-');
        if (dash == std::string::npos) throw DataError("bad edge key: " + key);
        return EdgeId(std::stoi(key.substr(0, dash)), std::stoi(key.substr(dash + 1)));
    }
};

/// Per-agent utility scores in [0,1] (average self-reported confidence).
using UtilityVector = std::vector<double>;

enum class Decision { Keep, Delete };

inline const char* to_string(Decision d) { return d == Decision::Keep ? "keep" : "delete"; }

/// All C(N,2) candidate edges in index order.
inline std::vector<EdgeId> all_edges(int n_agents) {
    std::vector<EdgeId> out;
    for (AgentId i = 0; i < n_agents; ++i)
        for (AgentId j = i + 1; j < n_agents; ++j) out.emplace_back(i, j);
    return out;
}

/// Connection scores for every unordered agent pair. Strictly positive,
/// clamped at kScoreFloor so edge probabilities stay well-defined.
class ScoreMatrix {
public:
    static constexpr double kScoreFloor = 1e-6;

    ScoreMatrix() = default;
    ScoreMatrix(std::map<EdgeId, double> scores, double alpha)
        : scores_(std::move(scores)), alpha_(alpha) {
        validate();
    }

    const std::map<EdgeId, double>& scores() const { return scores_; }
    double alpha() const { return alpha_; }

    double at(EdgeId e) const {
        auto it = scores_.find(e);
        if (it == scores_.end()) throw InvariantError("unknown edge " + e.str());
        return it->second;
    }

    bool contains(EdgeId e) const { return scores_.count(e) > 0; }
    std::size_t size() const { return scores_.size(); }

    /// Multiplicative update: keep -> s*(1+alpha), delete -> s*(1-alpha),
    /// floored. Returns the new score.
    double update(EdgeId e, Decision d) {
        auto it = scores_.find(e);
        if (it == scores_.end()) throw InvariantError("update on unknown edge " + e.str());
        double next = d == Decision::Keep ? it->second * (1.0 + alpha_)
                                          : it->second * (1.0 - alpha_);
        if (next < kScoreFloor) next = kScoreFloor;
        it->second = next;
        return next;
    }

    nlohmann::json to_json() const {
        nlohmann::json edges = nlohmann::json::object();
        for (const auto& [e, s] : scores_) edges[e.str()] = s;
        return {{"alpha", alpha_}, {"edges", edges}};
    }

    static ScoreMatrix from_json(const nlohmann::json& j) {
        std::map<EdgeId, double> scores;
        for (auto it = j.at("edges").begin(); it != j.at("edges").end(); ++it)
            scores[EdgeId::parse(it.key())] = it.value().get<double>();
        return ScoreMatrix(std::move(scores), j.at("alpha").get<double>());
    }

private:
    void validate() const {
        if (alpha_ <= 0.0 || alpha_ >= 1.0)
            throw ConfigError("alpha must lie in (0,1)");
        for (const auto& [e, s] : scores_)
            if (s < kScoreFloor)
                throw InvariantError("score below floor on edge " + e.str());
    }

    std::map<EdgeId, double> scores_;
    double alpha_ = 0.1;
};

/// Selection distribution over edges; values sum to 1.
using EdgeProbabilities = std::map<EdgeId, double>;

/// s(e_ij) = u(A_i) * u(A_j), floored.
inline ScoreMatrix init_connection_scores(const UtilityVector& utilities, double alpha = 0.1) {
    if (utilities.size() < 2) throw ConfigError("need at least 2 agents");
    for (double u : utilities)
        if (u < 0.0 || u > 1.0) throw ConfigError("utilities must lie in [0,1]");
    std::map<EdgeId, double> scores;
    for (EdgeId e : all_edges(static_cast<int>(utilities.size()))) {
        double s = utilities[static_cast<std::size_t>(e.lo)] *
                   utilities[static_cast<std::size_t>(e.hi)];
        scores[e] = s < ScoreMatrix::kScoreFloor ? ScoreMatrix::kScoreFloor : s;
    }
    return ScoreMatrix(std::move(scores), alpha);
}

/// p(e_ij) = s(e_ij) / sum of all scores.
inline EdgeProbabilities edge_probabilities(const ScoreMatrix& scores) {
    double total = 0.0;
    for (const auto& [e, s] : scores.scores()) total += s;
    EdgeProbabilities probs;
    for (const auto& [e, s] : scores.scores()) probs[e] = s / total;
    return probs;
}

/// Weighted draw over the non-excluded edges, proportional to their
/// probability mass. Deterministic given the engine state.
inline EdgeId weighted_sample_edge(const EdgeProbabilities& probs,
                                   const std::set<EdgeId>& exclude,
                                   std::mt19937_64& rng) {
    std::vector<EdgeId> candidates;
    std::vector<double> cumulative;
    double total = 0.0;
    for (const auto& [e, p] : probs) {
        if (exclude.count(e)) continue;
        total += p;
        candidates.push_back(e);
        cumulative.push_back(total);
    }
    if (candidates.empty())
        throw InvariantError("weighted_sample_edge: every edge is excluded");
    double u = next_unit(rng) * total;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (u < cumulative[i]) return candidates[i];
    return candidates.back();
}

/// Meta-feedback for one debated edge. both_correct is computed from the
/// gold answer, never from the feedback text.
struct ReflectionRecord {
    EdgeId edge;
    std::string feedback_text;
    bool both_correct = false;
    int epoch = 0;
    std::string datapoint_id;

    nlohmann::json to_json() const {
        return {{"edge", edge.str()},
                {"feedback_text", feedback_text},
                {"both_correct", both_correct},
                {"epoch", epoch},
                {"datapoint_id", datapoint_id}};
    }

    static ReflectionRecord from_json(const nlohmann::json& j) {
        ReflectionRecord r;
        r.edge = EdgeId::parse(j.at("edge").get<std::string>());
        r.feedback_text = j.at("feedback_text").get<std::string>();
        r.both_correct = j.at("both_correct").get<bool>();
        r.epoch = j.at("epoch").get<int>();
        r.datapoint_id = j.at("datapoint_id").get<std::string>();
        return r;
    }
};

/// The collaboration graph: agents, scored candidate edges, per-edge
/// feedback history, and the per-epoch visitation marks.
struct CollabGraph {
    int n_agents = 0;
    ScoreMatrix scores;
    std::map<EdgeId, std::vector<ReflectionRecord>> feedback_history;
    std::set<EdgeId> marked;
    std::vector<std::string> agent_names;
    std::optional<UtilityVector> utilities;

    static CollabGraph from_utilities(const UtilityVector& utilities,
                                      std::vector<std::string> names, double alpha) {
        CollabGraph g;
        g.n_agents = static_cast<int>(utilities.size());
        g.scores = init_connection_scores(utilities, alpha);
        g.agent_names = std::move(names);
        g.utilities = utilities;
        return g;
    }

    std::set<EdgeId> unmarked() const {
        std::set<EdgeId> out;
        for (const auto& [e, s] : scores.scores())
            if (!marked.count(e)) out.insert(e);
        return out;
    }

    void clear_marks() { marked.clear(); }

    nlohmann::json to_json() const {
        nlohmann::json history = nlohmann::json::object();
        for (const auto& [e, records] : feedback_history) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& r : records) arr.push_back(r.to_json());
            history[e.str()] = arr;
        }
        nlohmann::json marks = nlohmann::json::array();
        for (const auto& e : marked) marks.push_back(e.str());
        nlohmann::json j = {{"version", kGraphSchemaVersion},
                            {"n_agents", n_agents},
                            {"scores", scores.to_json()},
                            {"feedback_history", history},
                            {"marked", marks},
                            {"agent_names", agent_names}};
        if (utilities) j["utilities"] = *utilities;
        return j;
    }

    static CollabGraph from_json(const nlohmann::json& j) {
        if (j.at("version").get<int>() != kGraphSchemaVersion)
            throw DataError("unsupported graph schema version");
        CollabGraph g;
        g.n_agents = j.at("n_agents").get<int>();
        g.scores = ScoreMatrix::from_json(j.at("scores"));
        for (auto it = j.at("feedback_history").begin(); it != j.at("feedback_history").end(); ++it) {
            std::vector<ReflectionRecord> records;
            for (const auto& rj : it.value()) records.push_back(ReflectionRecord::from_json(rj));
            g.feedback_history[EdgeId::parse(it.key())] = std::move(records);
        }
        for (const auto& m : j.at("marked")) g.marked.insert(EdgeId::parse(m.get<std::string>()));
        g.agent_names = j.at("agent_names").get<std::vector<std::string>>();
        if (j.contains("utilities")) g.utilities = j.at("utilities").get<UtilityVector>();
        g.validate();
        return g;
    }

    void validate() const {
        if (n_agents < 2) throw ConfigError("graph needs at least 2 agents");
        if (scores.size() != static_cast<std::size_t>(n_agents) * (n_agents - 1) / 2)
            throw InvariantError("score matrix must cover all agent pairs");
        for (const auto& e : marked)
            if (!scores.contains(e)) throw InvariantError("marked edge not in score matrix");
        for (const auto& [e, records] : feedback_history)
            if (!scores.contains(e)) throw InvariantError("history edge not in score matrix");
    }
};

}  // namespace agentgraph
