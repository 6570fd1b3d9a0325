#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentgraph/core.hpp"
#include "agentgraph/prompts.hpp"
#include "agentgraph/task.hpp"

namespace agentgraph {

/// A persona template. The {task} slot is filled with the task label
/// when the profile is bound to a concrete run.
struct AgentProfile {
    std::string name;
    std::string system_template;

    std::string system_prompt(TaskKind kind) const {
        return render_template(system_template, {{"task", task_label(kind)}});
    }
};

namespace profiles {

inline const std::vector<AgentProfile>& builtin() {
    static const std::vector<AgentProfile> kProfiles = {
        {"Explainer",
         "You are a {task} explainer focused on breaking down complex questions/tasks into "
         "simple, understandable steps. Your goal is to answer the question/solve the task "
         "by providing clear, step-by-step explanations."},
        {"Expert",
         "You are a {task} expert with extensive knowledge in the {task}. Your role is to "
         "provide accurate and detailed solutions. Ensure your explanations are thorough "
         "and precise."},
        {"Logical Thinker",
         "You are a logical thinker who excels at breaking down complex problems into "
         "logical steps. Your role is to approach {task} methodically, ensuring each step "
         "follows logically from the previous one. Focus on clear, logical reasoning and "
         "consistency."},
        {"Robust Reasoner",
         "You are a robust reasoner who excels at tackling complex {task} with thorough and "
         "resilient reasoning. Your role is to ensure that every step of the problem-solving "
         "process is meticulously verified and logically sound. Focus on providing precise "
         "justifications for each step. Your goal is to develop solutions that are not only "
         "correct but also robust and reliable."},
        {"Deductive Reasoner",
         "You are a deductive reasoner who uses deductive logic to derive conclusions from "
         "given premises. Your task is to apply logical rules and principles to reach sound "
         "conclusions, ensuring each step is justified by the previous one."},
        {"Analytical Reasoner",
         "You are an analytical reasoner who excels at breaking down complex problems into "
         "smaller, more manageable parts. Provide precise, step-by-step reasoning for each "
         "part of the problem, clearly explaining the logic and methodology behind each "
         "step."},
        {"Intuitive Reasoner",
         "You are an intuitive reasoner who relies on intuition and insight to solve "
         "problems. Your role is to trust your instincts and use your natural understanding "
         "of {task} to find solutions. Provide precise, step-by-step reasoning for each "
         "part of the problem, clearly explaining how your intuition guides you through "
         "each step."},
    };
    return kProfiles;
}

}  // namespace profiles

/// Picks the first n built-in profiles, cycling with a numeric suffix
/// when more agents than profiles are requested.
inline std::vector<AgentProfile> default_profiles(int n_agents) {
    if (n_agents < 2) throw ConfigError("need at least 2 agents");
    const auto& base = profiles::builtin();
    std::vector<AgentProfile> out;
    out.reserve(static_cast<std::size_t>(n_agents));
    for (int i = 0; i < n_agents; ++i) {
        AgentProfile p = base[static_cast<std::size_t>(i) % base.size()];
        int round = i / static_cast<int>(base.size());
        if (round > 0) p.name += " " + std::to_string(round + 1);
        out.push_back(std::move(p));
    }
    return out;
}

/// Loads profiles from a JSON array of {"name", "system_template"}.
inline std::vector<AgentProfile> load_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open profile file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in profile file " + path + ": " + e.what());
    }
    if (!j.is_array() || j.empty())
        throw ConfigError("profile file must be a non-empty JSON array: " + path);
    std::vector<AgentProfile> out;
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("name") || !item.contains("system_template"))
            throw ConfigError("profile entries need 'name' and 'system_template': " + path);
        out.push_back({item.at("name").get<std::string>(),
                       item.at("system_template").get<std::string>()});
    }
    return out;
}

}  // namespace agentgraph
