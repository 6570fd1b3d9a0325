#pragma once

#include <string>
#include <string_view>

#include "agentgraph/answer.hpp"
#include "agentgraph/core.hpp"

namespace agentgraph {

enum class TaskKind { Math, ScienceMc, Sorting, CreativeWriting };

inline std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Math: return "math";
        case TaskKind::ScienceMc: return "science_mc";
        case TaskKind::Sorting: return "sorting";
        case TaskKind::CreativeWriting: return "creative_writing";
    }
    throw InvariantError("unknown TaskKind");
}

inline TaskKind task_kind_from_string(std::string_view s) {
    if (s == "math") return TaskKind::Math;
    if (s == "science_mc") return TaskKind::ScienceMc;
    if (s == "sorting") return TaskKind::Sorting;
    if (s == "creative_writing") return TaskKind::CreativeWriting;
    throw ConfigError("unknown task kind: " + std::string(s));
}

/// Human-readable label used to fill the {task} slot in profiles and
/// the confidence prompt.
inline std::string task_label(TaskKind k) {
    switch (k) {
        case TaskKind::Math: return "math";
        case TaskKind::ScienceMc: return "science";
        case TaskKind::Sorting: return "sorting";
        case TaskKind::CreativeWriting: return "creative writing";
    }
    throw InvariantError("unknown TaskKind");
}

/// How final answers are normalized and compared for each task family.
inline AnswerKind answer_kind_for(TaskKind k) {
    switch (k) {
        case TaskKind::Math: return AnswerKind::Numeric;
        case TaskKind::ScienceMc: return AnswerKind::Textual;
        case TaskKind::Sorting: return AnswerKind::ListOfNumbers;
        case TaskKind::CreativeWriting: return AnswerKind::Textual;
    }
    throw InvariantError("unknown TaskKind");
}

}  // namespace agentgraph
