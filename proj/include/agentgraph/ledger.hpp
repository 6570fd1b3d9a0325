#pragma once

#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "agentgraph/backend.hpp"
#include "agentgraph/core.hpp"

namespace agentgraph {

enum class LedgerRole { Worker, Meta, Judge };

inline const char* to_string(LedgerRole r) {
    switch (r) {
        case LedgerRole::Worker: return "worker";
        case LedgerRole::Meta: return "meta";
        case LedgerRole::Judge: return "judge";
    }
    return "worker";
}

struct LedgerPrices {
    double prompt_per_1k = 0.0;
    double completion_per_1k = 0.0;
};

/// Serialized accumulator of prompt/completion token counts with a
/// per-role breakdown and a derived cost.
class RunLedger {
public:
    explicit RunLedger(LedgerPrices prices = {}) : prices_(prices) {}

    void record(const Completion& c, LedgerRole role) {
        std::lock_guard<std::mutex> lock(mu_);
        total_.add(c);
        by_role_[role_index(role)].add(c);
    }

    void merge(const RunLedger& other) {
        std::lock_guard<std::mutex> lock(mu_);
        total_.add_usage(other.total_);
        for (int i = 0; i < 3; ++i) by_role_[i].add_usage(other.by_role_[i]);
    }

    TokenUsage total() const {
        std::lock_guard<std::mutex> lock(mu_);
        return total_;
    }

    TokenUsage role_total(LedgerRole role) const {
        std::lock_guard<std::mutex> lock(mu_);
        return by_role_[role_index(role)];
    }

    double estimated_cost() const {
        TokenUsage t = total();
        return cost_for(t.prompt_tokens, t.completion_tokens, prices_);
    }

    static double cost_for(std::int64_t prompt_tokens, std::int64_t completion_tokens,
                           const LedgerPrices& prices) {
        return static_cast<double>(prompt_tokens) / 1000.0 * prices.prompt_per_1k +
               static_cast<double>(completion_tokens) / 1000.0 * prices.completion_per_1k;
    }

    nlohmann::json to_json() const {
        std::lock_guard<std::mutex> lock(mu_);
        auto usage_json = [](const TokenUsage& u) {
            return nlohmann::json{{"prompt_tokens", u.prompt_tokens},
                                  {"completion_tokens", u.completion_tokens},
                                  {"estimated", u.estimated}};
        };
        nlohmann::json j;
        j["prompt_tokens"] = total_.prompt_tokens;
        j["completion_tokens"] = total_.completion_tokens;
        j["estimated"] = total_.estimated;
        j["by_role"] = {{"worker", usage_json(by_role_[0])},
                        {"meta", usage_json(by_role_[1])},
                        {"judge", usage_json(by_role_[2])}};
        j["prices"] = {{"prompt_per_1k", prices_.prompt_per_1k},
                       {"completion_per_1k", prices_.completion_per_1k}};
        j["estimated_cost"] =
            cost_for(total_.prompt_tokens, total_.completion_tokens, prices_);
        return j;
    }

private:
    static int role_index(LedgerRole role) { return static_cast<int>(role); }

    mutable std::mutex mu_;
    TokenUsage total_;
    TokenUsage by_role_[3];
    LedgerPrices prices_;
};

}  // namespace agentgraph
