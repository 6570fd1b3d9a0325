#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentgraph/answer.hpp"
#include "agentgraph/core.hpp"
#include "agentgraph/rng.hpp"
#include "agentgraph/task.hpp"

namespace agentgraph {

struct TaskInstance {
    std::string id;
    TaskKind task_kind = TaskKind::Math;
    std::string question;
    std::optional<NormalizedAnswer> gold;
    std::optional<std::string> category;
    /// Creative writing only: the required paragraph end sentences.
    std::vector<std::string> end_sentences;
};

/// Maps JSONL fields onto TaskInstance slots.
struct DatasetFormat {
    std::string question_field = "question";
    std::string answer_field = "answer";
    std::string id_field;        // empty → ids are q<line>
    std::string category_field;  // empty → no categories
};

namespace detail {

inline std::string json_to_text(const nlohmann::json& v, bool as_list) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number()) return canonical_number(v.get<double>());
    if (v.is_array()) {
        std::ostringstream os;
        os << (as_list ? "[" : "");
        bool first = true;
        for (const auto& item : v) {
            if (!first) os << (as_list ? ", " : "\n");
            first = false;
            os << json_to_text(item, as_list);
        }
        if (as_list) os << "]";
        return os.str();
    }
    throw DataError("unsupported field value type: " + std::string(v.type_name()));
}

/// GSM8K-style solutions end in "#### <answer>"; take the tail.
inline std::string strip_gsm8k_solution(const std::string& text) {
    auto pos = text.rfind("####");
    if (pos == std::string::npos) return text;
    return text.substr(pos + 4);
}

inline NormalizedAnswer parse_gold(const nlohmann::json& v, TaskKind kind, int line_no) {
    auto fail = [&](const std::string& why) -> DataError {
        return DataError("line " + std::to_string(line_no) + ": " + why);
    };
    switch (answer_kind_for(kind)) {
        case AnswerKind::Numeric: {
            std::string text = json_to_text(v, false);
            text = strip_gsm8k_solution(text);
            if (auto n = parse_number_strict(text)) return NormalizedAnswer::numeric(*n);
            if (auto n = parse_number_lenient(text)) return NormalizedAnswer::numeric(*n);
            throw fail("gold answer is not numeric: " + text);
        }
        case AnswerKind::ListOfNumbers: {
            std::string text = json_to_text(v, true);
            if (auto list = parse_number_list(text))
                return NormalizedAnswer::numbers(std::move(*list));
            throw fail("gold answer is not a number list: " + text);
        }
        case AnswerKind::Textual: {
            auto a = NormalizedAnswer::textual(json_to_text(v, false));
            if (a.text.empty()) throw fail("gold answer is empty");
            return a;
        }
    }
    throw fail("unknown answer kind");
}

inline std::vector<std::string> split_sentences(const nlohmann::json& v,
                                                const std::string& joined) {
    std::vector<std::string> out;
    if (v.is_array()) {
        for (const auto& item : v) out.push_back(json_to_text(item, false));
        return out;
    }
    std::istringstream in(joined);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

}  // namespace detail

/// Reads a JSONL dataset, normalizing gold answers per task kind.
/// Malformed lines and missing golds raise DataError naming the line.
inline std::vector<TaskInstance> load_dataset(const std::string& path, TaskKind kind,
                                              const DatasetFormat& format = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path);
    std::vector<TaskInstance> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": invalid JSON (" + e.what() +
                            ")");
        }
        if (!j.is_object())
            throw DataError("line " + std::to_string(line_no) + ": expected a JSON object");
        if (!j.contains(format.question_field))
            throw DataError("line " + std::to_string(line_no) + ": missing field '" +
                            format.question_field + "'");

        TaskInstance inst;
        inst.task_kind = kind;
        const auto& qv = j.at(format.question_field);
        inst.question = detail::json_to_text(qv, kind == TaskKind::Sorting);
        if (inst.question.empty())
            throw DataError("line " + std::to_string(line_no) + ": empty question");
        if (kind == TaskKind::CreativeWriting)
            inst.end_sentences = detail::split_sentences(qv, inst.question);

        bool has_gold = j.contains(format.answer_field) && !j.at(format.answer_field).is_null();
        if (has_gold) {
            inst.gold = detail::parse_gold(j.at(format.answer_field), kind, line_no);
        } else if (kind != TaskKind::CreativeWriting) {
            throw DataError("line " + std::to_string(line_no) + ": missing gold answer ('" +
                            format.answer_field + "') for task " + to_string(kind));
        }

        if (!format.id_field.empty()) {
            if (!j.contains(format.id_field))
                throw DataError("line " + std::to_string(line_no) + ": missing field '" +
                                format.id_field + "'");
            inst.id = detail::json_to_text(j.at(format.id_field), false);
        } else {
            inst.id = "q" + std::to_string(line_no);
        }
        if (!format.category_field.empty() && j.contains(format.category_field))
            inst.category = detail::json_to_text(j.at(format.category_field), false);
        out.push_back(std::move(inst));
    }
    return out;
}

/// Seeded subsample of n instances, original order preserved.
inline std::vector<TaskInstance> sample_instances(const std::vector<TaskInstance>& all, int n,
                                                  std::mt19937_64& rng) {
    if (n < 0) throw ConfigError("sample size must be >= 0");
    if (static_cast<std::size_t>(n) >= all.size()) return all;
    std::vector<std::size_t> idx(all.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // Partial Fisher-Yates: the first n slots become the sample.
    for (int i = 0; i < n; ++i) {
        std::size_t j = static_cast<std::size_t>(i) +
                        next_bounded(rng, static_cast<std::uint64_t>(idx.size() - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(n));
    std::sort(idx.begin(), idx.end());
    std::vector<TaskInstance> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(all[i]);
    return out;
}

/// Per-category sampling (n instances from each category, categories in
/// sorted order; uncategorized instances form their own "" bucket).
inline std::vector<TaskInstance> sample_stratified(const std::vector<TaskInstance>& all,
                                                   int per_category, std::mt19937_64& rng) {
    std::map<std::string, std::vector<TaskInstance>> buckets;
    for (const auto& inst : all) buckets[inst.category.value_or("")].push_back(inst);
    std::vector<TaskInstance> out;
    for (auto& [cat, items] : buckets) {
        auto picked = sample_instances(items, per_category, rng);
        out.insert(out.end(), picked.begin(), picked.end());
    }
    return out;
}

}  // namespace agentgraph
