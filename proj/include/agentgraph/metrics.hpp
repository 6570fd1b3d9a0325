#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentgraph/answer.hpp"
#include "agentgraph/backend.hpp"
#include "agentgraph/core.hpp"
#include "agentgraph/prompts.hpp"

namespace agentgraph {

/// Fraction of predictions matching gold; abstentions (nullopt) count as
/// wrong. Throws on an empty or mismatched input.
inline double accuracy(const std::vector<std::optional<NormalizedAnswer>>& predictions,
                       const std::vector<NormalizedAnswer>& golds) {
    if (predictions.size() != golds.size())
        throw InvariantError("accuracy: predictions and golds differ in length");
    if (predictions.empty()) throw InvariantError("accuracy: empty inputs");
    int correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] && answers_equal(*predictions[i], golds[i])) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

/// Sorting error scope: adjacent descending pairs in the output plus the
/// multiset mismatch against the input (missing + extraneous elements).
inline int sorting_error_scope(const std::vector<double>& output,
                               const std::vector<double>& input) {
    if (input.empty()) throw InvariantError("sorting_error_scope: empty input list");
    int errors = 0;
    for (std::size_t i = 0; i + 1 < output.size(); ++i)
        if (output[i] > output[i + 1] && !numbers_equal(output[i], output[i + 1])) ++errors;
    std::map<std::string, int> counts;
    for (double v : input) ++counts[detail::canonical_number(v)];
    for (double v : output) --counts[detail::canonical_number(v)];
    for (const auto& [key, diff] : counts) errors += diff > 0 ? diff : -diff;
    return errors;
}

/// Last "coherency score is N" phrase, accepted only when N is an
/// integer in [1,10].
inline std::optional<int> parse_coherence_score(const std::string& text) {
    static const std::string kPhrase = "coherency score is";
    auto pos = text.rfind(kPhrase);
    if (pos == std::string::npos) return std::nullopt;
    std::size_t i = pos + kPhrase.size();
    while (i < text.size() && (text[i] == ' ' || text[i] == ':')) ++i;
    std::size_t start = i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
    if (i == start) return std::nullopt;
    if (i - start > 2) return std::nullopt;
    int value = std::stoi(text.substr(start, i - start));
    if (value < 1 || value > 10) return std::nullopt;
    return value;
}

/// Coherence rating for one passage via the judge backend; retries on
/// unparseable replies, then reports the item as unscored (nullopt).
inline std::optional<int> judge_coherence(const std::string& passage, Backend& judge,
                                          const PromptSet& prompts,
                                          const SamplingParams& params = {},
                                          int attempts = 3) {
    if (attempts < 1) throw ConfigError("judge attempts must be >= 1");
    std::string prompt = render_template(prompts.judge, {{"passage", passage}});
    for (int i = 0; i < attempts; ++i) {
        Completion c = judge.complete({{Role::User, prompt}}, params);
        if (auto score = parse_coherence_score(c.text)) return score;
    }
    return std::nullopt;
}

/// Secondary creative-writing check: does the i-th paragraph end with the
/// i-th required sentence? Paragraphs split on blank lines.
inline bool creative_constraint_satisfied(const std::string& passage,
                                          const std::vector<std::string>& end_sentences) {
    if (end_sentences.empty()) return false;
    std::vector<std::string> paragraphs;
    std::string current;
    auto flush = [&] {
        auto t = detail::trim(current);
        if (!t.empty()) paragraphs.push_back(t);
        current.clear();
    };
    std::size_t i = 0;
    while (i < passage.size()) {
        if (passage[i] == '\n') {
            std::size_t j = i;
            while (j < passage.size() && (passage[j] == '\n' || passage[j] == '\r' ||
                                          passage[j] == ' ' || passage[j] == '\t'))
                ++j;
            // A blank line (two newlines with only spaces between) splits.
            int newlines = 0;
            for (std::size_t k = i; k < j; ++k) newlines += passage[k] == '\n';
            if (newlines >= 2) {
                flush();
                i = j;
                continue;
            }
            current.push_back(' ');
            i = j;
            continue;
        }
        current.push_back(passage[i]);
        ++i;
    }
    flush();
    if (paragraphs.size() != end_sentences.size()) return false;
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
        std::string para = detail::normalize_text(paragraphs[p]);
        std::string want = detail::normalize_text(end_sentences[p]);
        if (want.empty()) return false;
        if (para.size() < want.size()) return false;
        if (para.compare(para.size() - want.size(), want.size(), want) != 0) return false;
    }
    return true;
}

}  // namespace agentgraph
