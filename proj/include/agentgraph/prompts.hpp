#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "agentgraph/core.hpp"

namespace agentgraph {

/// Single-pass {slot} substitution. Unknown slots are left verbatim, so
/// format examples like '###your_answer###' or '{s}' survive rendering.
inline std::string render_template(std::string_view tpl,
                                   const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            auto close = tpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                std::string key(tpl.substr(i + 1, close - i - 1));
                auto it = slots.find(key);
                if (it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tpl[i]);
        ++i;
    }
    return out;
}

namespace prompts {

inline constexpr const char* kReflect =
    "Given a question, the golden answer, and interactions between two agents, generate "
    "some feedback on the quality of the interaction. Your feedback should consider two "
    "standards: 1. Whether the agents got the answers correctly. The debate is not fruitful "
    "if either agents got the question wrong. 2. whether the agents' reasoning chains are "
    "logical and convincing. Specifically, are the steps logically connected and easy to "
    "follow? Are there any inconsistencies or contradictions? Did the agent explain its "
    "reasoning well? Question: {question} Golden Answer: {answer} Previous response from "
    "Agent{agent1_num}: {response1}; Previous response from Agent{agent2_num}: {response2}; "
    "Response from Agent{agent1_num} after interaction: {response1_after}; Response from "
    "Agent{agent2_num} after interaction: {response2_after}";

inline constexpr const char* kDecide =
    "Given the interaction between two agents, and the feedback for the interaction, decide "
    "whether the interaction should be kept or not. Your decision should be either 'keep' or "
    "'delete'. Your answer should follow the following format: 'DECISION: "
    "###your_decision###'. Response from Agent{agent1_num}: {response1}; Response from "
    "Agent{agent2_num}: {response2}; Feedback from meta agent: {feedback}";

inline constexpr const char* kPropose =
    "Given a list of unexplored connections between agents, their connection score, and your "
    "conversation history, choose one of the connections for the agents to interact. Your "
    "action should follow the following format: 'make connection (0, 1)'. Your answer should "
    "follow the following format: 'ACTION: ###your_action###'. Unexplored connections: "
    "{matrix_connect}";

inline constexpr const char* kDebate =
    "Given another potential answer and reasoning given by another agent, recheck your "
    "reasoning and answer. If you think your previous answer is wrong, provide the correct "
    "answer and your reasoning for it. If you think your previous answer is correct, explain "
    "why it is correct. Make sure to include your final answer in the format: "
    "###your_answer###. Response from another agent: {response1}";

inline constexpr const char* kQuestion =
    "Given a question, give our your reasoning process and the final answer. MMake sure to "
    "include your final answer in the format: ###your_answer###. Give our the answer in "
    "numerical format. Question: {question}. Think Step by Step.";

inline constexpr const char* kCreativeTask =
    "Write a coherent passage of 4 short paragraphs. The end sentence of each paragraph must "
    "be: {input}. Make a plan then write. Your output should be of the following format: "
    "'Plan: Your plan here. Passage: Your passage here'.";

inline constexpr const char* kJudge =
    "Analyze the following passage, then at the last line conclude \"Thus the coherency "
    "score is {s}\", where s is an integer from 1 to 10.\n\nPassage: {passage}";

inline constexpr const char* kSorting =
    "<Instruction> Sort the following list of numbers in ascending order. You can generate "
    "any intermediate lists, but the final output should be the sorted list of numbers, "
    "prefixed with \"Output: \". </Instruction><Approach>To sort the list of numbers follow "
    "these steps: 1. Split the list of numbers into two to four unsorted sublists, each "
    "containing an equal number of elements from the original list (make sure they don't "
    "overlap). 2. Sort each of the unsorted sublists. 3. Merge the sorted sublists into a "
    "single sorted list using the merging algorithm from merge sort.</Approach>\nInput: "
    "{question}";

inline constexpr const char* kConfidence =
    "Rate your confidence that you can correctly solve the following {task} problem on a "
    "scale from 0 to 100. Reply in the format: 'CONFIDENCE: ###0-100###'. Question: "
    "{question}";

}  // namespace prompts

/// The prompt templates in play for one run. Defaults are the shipped
/// texts above; any of them can be overridden by a file in prompt_dir
/// (reflect.txt, decide.txt, propose.txt, debate.txt, question.txt,
/// creative_task.txt, judge.txt, sorting.txt, confidence.txt).
struct PromptSet {
    std::string reflect = prompts::kReflect;
    std::string decide = prompts::kDecide;
    std::string propose = prompts::kPropose;
    std::string debate = prompts::kDebate;
    std::string question = prompts::kQuestion;
    std::string creative_task = prompts::kCreativeTask;
    std::string judge = prompts::kJudge;
    std::string sorting = prompts::kSorting;
    std::string confidence = prompts::kConfidence;

    static PromptSet with_overrides(const std::string& prompt_dir) {
        PromptSet p;
        if (prompt_dir.empty()) return p;
        if (!std::filesystem::is_directory(prompt_dir))
            throw ConfigError("prompt_dir is not a directory: " + prompt_dir);
        auto load = [&](const char* file, std::string& slot) {
            auto path = std::filesystem::path(prompt_dir) / file;
            if (!std::filesystem::exists(path)) return;
            std::ifstream in(path);
            std::ostringstream buf;
            buf << in.rdbuf();
            std::string text = buf.str();
            while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
                text.pop_back();
            if (text.empty()) throw ConfigError("prompt override is empty: " + path.string());
            slot = text;
        };
        load("reflect.txt", p.reflect);
        load("decide.txt", p.decide);
        load("propose.txt", p.propose);
        load("debate.txt", p.debate);
        load("question.txt", p.question);
        load("creative_task.txt", p.creative_task);
        load("judge.txt", p.judge);
        load("sorting.txt", p.sorting);
        load("confidence.txt", p.confidence);
        return p;
    }
};

}  // namespace agentgraph
