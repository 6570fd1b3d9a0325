#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agentgraph/core.hpp"

namespace agentgraph {

enum class AnswerKind { Numeric, Textual, ListOfNumbers };

inline const char* to_string(AnswerKind k) {
    switch (k) {
        case AnswerKind::Numeric: return "numeric";
        case AnswerKind::Textual: return "textual";
        case AnswerKind::ListOfNumbers: return "list_of_numbers";
    }
    return "numeric";
}

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

/// Lowercased, whitespace-collapsed, trailing periods stripped.
inline std::string normalize_text(std::string_view raw) {
    std::string out;
    bool in_space = true;
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            in_space = false;
        }
    }
    while (!out.empty() && (out.back() == ' ' || out.back() == '.')) out.pop_back();
    return out;
}

/// Full-string numeric parse after normalization: currency symbols, commas
/// and spaces stripped; "a/b" rationals accepted.
inline std::optional<double> parse_number_strict(std::string_view raw) {
    std::string s;
    for (char c : raw) {
        if (c == '$' || c == ',' || c == '%' || std::isspace(static_cast<unsigned char>(c)))
            continue;
        s.push_back(c);
    }
    if (s.empty()) return std::nullopt;
    auto slash = s.find('/');
    if (slash != std::string::npos && slash > 0 && slash + 1 < s.size()) {
        auto num = parse_number_strict(s.substr(0, slash));
        auto den = parse_number_strict(s.substr(slash + 1));
        if (num && den && *den != 0.0) return *num / *den;
        return std::nullopt;
    }
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

/// Strict parse first; otherwise the last numeric token in the text
/// ("the answer is 42 dollars" -> 42).
inline std::optional<double> parse_number_lenient(std::string_view raw) {
    if (auto v = parse_number_strict(raw)) return v;
    std::optional<double> last;
    std::size_t i = 0;
    while (i < raw.size()) {
        if (std::isdigit(static_cast<unsigned char>(raw[i])) ||
            ((raw[i] == '-' || raw[i] == '+' || raw[i] == '$' || raw[i] == '.') &&
             i + 1 < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i + 1])))) {
            std::size_t j = i;
            while (j < raw.size() &&
                   (std::isdigit(static_cast<unsigned char>(raw[j])) || raw[j] == '.' ||
                    raw[j] == ',' || raw[j] == '/' || raw[j] == '$' || raw[j] == '-' ||
                    raw[j] == '+'))
                ++j;
            std::string token(raw.substr(i, j - i));
            while (!token.empty() && (token.back() == '.' || token.back() == ',' ||
                                      token.back() == '/' || token.back() == '-' ||
                                      token.back() == '+'))
                token.pop_back();
            if (auto v = parse_number_strict(token)) last = v;
            i = j;
        } else {
            ++i;
        }
    }
    return last;
}

inline std::optional<std::vector<double>> parse_number_list(std::string_view raw) {
    std::string s(raw);
    for (char& c : s)
        if (c == '[' || c == ']' || c == '(' || c == ')' || c == ',' || c == ';') c = ' ';
    std::vector<double> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) {
            auto v = parse_number_strict(std::string_view(s).substr(i, j - i));
            if (!v) return std::nullopt;
            out.push_back(*v);
        }
        i = j;
    }
    if (out.empty()) return std::nullopt;
    return out;
}

inline std::string canonical_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    std::string s(buf);
    if (s == "-0") s = "0";
    return s;
}

}  // namespace detail

/// An answer in canonical form: numbers with commas/currency stripped,
/// lists element-wise canonical, text case- and whitespace-folded.
struct NormalizedAnswer {
    AnswerKind kind = AnswerKind::Numeric;
    double number = 0.0;
    std::string text;
    std::vector<double> list;

    static NormalizedAnswer numeric(double v) {
        NormalizedAnswer a;
        a.kind = AnswerKind::Numeric;
        a.number = v;
        return a;
    }
    static NormalizedAnswer textual(std::string_view raw) {
        NormalizedAnswer a;
        a.kind = AnswerKind::Textual;
        a.text = detail::normalize_text(raw);
        return a;
    }
    static NormalizedAnswer numbers(std::vector<double> values) {
        NormalizedAnswer a;
        a.kind = AnswerKind::ListOfNumbers;
        a.list = std::move(values);
        return a;
    }

    std::string canonical() const {
        switch (kind) {
            case AnswerKind::Numeric: return detail::canonical_number(number);
            case AnswerKind::Textual: return text;
            case AnswerKind::ListOfNumbers: {
                std::string out = "[";
                for (std::size_t i = 0; i < list.size(); ++i) {
                    if (i) out += ", ";
                    out += detail::canonical_number(list[i]);
                }
                return out + "]";
            }
        }
        return {};
    }
};

/// Numeric relative tolerance (1e-6) after normalization.
inline bool numbers_equal(double a, double b) {
    if (a == b) return true;
    double diff = std::fabs(a - b);
    return diff <= 1e-6 * std::max(std::fabs(a), std::fabs(b)) || diff <= 1e-12;
}

inline bool answers_equal(const NormalizedAnswer& a, const NormalizedAnswer& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case AnswerKind::Numeric: return numbers_equal(a.number, b.number);
        case AnswerKind::Textual: return a.text == b.text;
        case AnswerKind::ListOfNumbers:
            if (a.list.size() != b.list.size()) return false;
            for (std::size_t i = 0; i < a.list.size(); ++i)
                if (!numbers_equal(a.list[i], b.list[i])) return false;
            return true;
    }
    return false;
}

/// Positions of "###" markers, trimmed to an even count so they pair up
/// as open/close fences.
inline std::vector<std::size_t> find_marker_positions(std::string_view text) {
    std::vector<std::size_t> marks;
    std::size_t pos = 0;
    while ((pos = text.find("###", pos)) != std::string_view::npos) {
        marks.push_back(pos);
        pos += 3;
    }
    if (marks.size() % 2 == 1) marks.pop_back();
    return marks;
}

/// Text of the last complete ###...### span, if any.
inline std::optional<std::string> last_marker_span(std::string_view text) {
    auto marks = find_marker_positions(text);
    if (marks.size() < 2) return std::nullopt;
    std::size_t open = marks[marks.size() - 2] + 3;
    std::size_t close = marks[marks.size() - 1];
    return std::string(text.substr(open, close - open));
}

/// Parse one span's content under the expected kind.
inline std::optional<NormalizedAnswer> parse_answer_text(std::string_view content,
                                                         AnswerKind kind) {
    switch (kind) {
        case AnswerKind::Numeric:
            if (auto v = detail::parse_number_lenient(content))
                return NormalizedAnswer::numeric(*v);
            return std::nullopt;
        case AnswerKind::ListOfNumbers:
            if (auto v = detail::parse_number_list(content))
                return NormalizedAnswer::numbers(std::move(*v));
            return std::nullopt;
        case AnswerKind::Textual: {
            auto t = NormalizedAnswer::textual(content);
            if (t.text.empty()) return std::nullopt;
            return t;
        }
    }
    return std::nullopt;
}

/// Marker extraction: the LAST ###...### span wins; no span means
/// extraction failure.
inline std::optional<NormalizedAnswer> extract_answer(std::string_view raw,
                                                      AnswerKind kind = AnswerKind::Numeric) {
    auto span = last_marker_span(raw);
    if (!span) return std::nullopt;
    return parse_answer_text(*span, kind);
}

/// Confidence in [0,1] from a "CONFIDENCE: ###0-100###" style reply.
/// Out-of-range values clamp; absent/unparseable spans yield nullopt.
inline std::optional<double> parse_confidence(std::string_view raw) {
    auto span = last_marker_span(raw);
    if (!span) return std::nullopt;
    auto v = detail::parse_number_lenient(*span);
    if (!v) return std::nullopt;
    return std::clamp(*v, 0.0, 100.0) / 100.0;
}

}  // namespace agentgraph
