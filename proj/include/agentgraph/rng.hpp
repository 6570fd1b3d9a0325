#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "agentgraph/core.hpp"

namespace agentgraph {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// std::uniform_*_distribution output is implementation-defined, which would
// make transcripts differ across standard libraries. All draws go through
// these two helpers instead.

/// Uniform double in [0,1), 53 bits of randomness.
inline double next_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0,n). Rejection sampling, unbiased.
inline std::uint64_t next_bounded(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) throw InvariantError("next_bounded: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

/// Named RNG streams split from one master seed. Stream names may carry a
/// ":suffix" (e.g. "tie_break:q3"); seed overrides apply to the family name
/// before the colon, so reseeding "tie_break" reseeds every question's
/// tie-break stream and nothing else.
class RngPool {
public:
    explicit RngPool(std::uint64_t master_seed,
                     std::map<std::string, std::uint64_t> overrides = {})
        : master_(master_seed), overrides_(std::move(overrides)) {}

    std::mt19937_64& stream(const std::string& name) {
        auto it = streams_.find(name);
        if (it == streams_.end()) {
            it = streams_.emplace(name, std::mt19937_64(seed_for(name))).first;
        }
        return it->second;
    }

    std::uint64_t seed_for(const std::string& name) const {
        std::string family = name.substr(0, name.find(':'));
        auto ov = overrides_.find(family);
        std::uint64_t base = ov != overrides_.end() ? ov->second : master_;
        return splitmix64(base ^ fnv1a64(name));
    }

    std::uint64_t master_seed() const { return master_; }

    /// Snapshot every instantiated stream's engine state (text form).
    nlohmann::json save_state() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [name, engine] : streams_) {
            std::ostringstream os;
            os << engine;
            j[name] = os.str();
        }
        return j;
    }

    void restore_state(const nlohmann::json& j) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            std::istringstream is(it.value().get<std::string>());
            std::mt19937_64 engine;
            is >> engine;
            if (is.fail()) throw DataError("rng state restore failed for stream " + it.key());
            streams_[it.key()] = engine;
        }
    }

private:
    std::uint64_t master_;
    std::map<std::string, std::uint64_t> overrides_;
    std::map<std::string, std::mt19937_64> streams_;
};

}  // namespace agentgraph
