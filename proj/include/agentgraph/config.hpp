#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentgraph/backend.hpp"
#include "agentgraph/core.hpp"
#include "agentgraph/dataset.hpp"
#include "agentgraph/ledger.hpp"
#include "agentgraph/task.hpp"
#include "agentgraph/trainer.hpp"

namespace agentgraph {

enum class InitMode { Uniform, Confidence, Random };

inline const char* to_string(InitMode m) {
    switch (m) {
        case InitMode::Uniform: return "uniform";
        case InitMode::Confidence: return "confidence";
        case InitMode::Random: return "random";
    }
    return "uniform";
}

inline InitMode init_mode_from_string(const std::string& s) {
    if (s == "uniform") return InitMode::Uniform;
    if (s == "confidence") return InitMode::Confidence;
    if (s == "random") return InitMode::Random;
    throw ConfigError("unknown init mode: " + s + " (expected uniform|confidence|random)");
}

struct AgentsConfig {
    int count = 0;
    std::string profile_file;
    bool randomize_profiles = false;
    BackendConfig backend;
    std::vector<BackendConfig> per_agent_backends;
};

struct DatasetConfig {
    std::string path;
    DatasetFormat format;
    std::optional<int> sample_n;
    bool stratify = false;
    std::optional<int> per_category_n;
};

struct InitConfig {
    InitMode mode = InitMode::Uniform;
    int confidence_sample_count = 10;
};

struct InferenceFlags {
    bool reconsider_minority = false;
    int workers = 1;
};

namespace detail {

/// Strict-key check: configs with unknown keys are rejected outright so
/// typos never silently fall back to defaults.
inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown config key '" + key + "' in " + where);
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

}  // namespace detail

inline BackendConfig backend_config_from_json(const nlohmann::json& j,
                                              const std::string& where) {
    detail::check_keys(j,
                       {"kind", "script_path", "endpoint_url", "model_name",
                        "api_key_env_var", "request_timeout_ms", "max_retries",
                        "initial_backoff_ms"},
                       where);
    BackendConfig c;
    std::string kind = detail::get_or<std::string>(j, "kind", "");
    if (kind == "scripted")
        c.kind = BackendKind::Scripted;
    else if (kind == "http")
        c.kind = BackendKind::Http;
    else
        throw ConfigError(where + ".kind must be 'scripted' or 'http'");
    c.script_path = detail::get_or<std::string>(j, "script_path", "");
    c.endpoint_url = detail::get_or<std::string>(j, "endpoint_url", "");
    c.model_name = detail::get_or<std::string>(j, "model_name", "");
    c.api_key_env_var = detail::get_or<std::string>(j, "api_key_env_var", "");
    c.request_timeout = std::chrono::milliseconds(
        detail::get_or<std::int64_t>(j, "request_timeout_ms", 30000));
    c.max_retries = detail::get_or<int>(j, "max_retries", 2);
    c.initial_backoff = std::chrono::milliseconds(
        detail::get_or<std::int64_t>(j, "initial_backoff_ms", 250));
    c.validate();
    return c;
}

inline nlohmann::json backend_config_to_json(const BackendConfig& c) {
    nlohmann::json j;
    j["kind"] = c.kind == BackendKind::Scripted ? "scripted" : "http";
    j["script_path"] = c.script_path;
    j["endpoint_url"] = c.endpoint_url;
    j["model_name"] = c.model_name;
    j["api_key_env_var"] = c.api_key_env_var;
    j["request_timeout_ms"] = c.request_timeout.count();
    j["max_retries"] = c.max_retries;
    j["initial_backoff_ms"] = c.initial_backoff.count();
    return j;
}

/// Everything a run needs, validated before any backend call.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_root = "runs";
    TaskKind task_kind = TaskKind::Math;
    AgentsConfig agents;
    std::optional<BackendConfig> meta_backend;
    std::optional<BackendConfig> judge_backend;
    TrainConfig train;
    InferenceFlags inference;
    DatasetConfig dataset;
    InitConfig init;
    SamplingParams sampling;
    LedgerPrices prices;
    std::map<std::string, std::uint64_t> stream_seeds;
    std::string prompt_dir;

    void validate() const {
        if (agents.count < 2) throw ConfigError("agents.count must be >= 2");
        agents.backend.validate();
        if (!agents.per_agent_backends.empty() &&
            static_cast<int>(agents.per_agent_backends.size()) != agents.count)
            throw ConfigError("per_agent_backends must list one backend per agent");
        for (const auto& b : agents.per_agent_backends) b.validate();
        if (meta_backend) meta_backend->validate();
        if (judge_backend) judge_backend->validate();
        train.validate();
        if (inference.workers < 1) throw ConfigError("inference.workers must be >= 1");
        if (init.confidence_sample_count < 1)
            throw ConfigError("init.confidence_sample_count must be >= 1");
        if (dataset.sample_n && *dataset.sample_n < 1)
            throw ConfigError("dataset.sample_n must be >= 1");
        if (dataset.per_category_n && *dataset.per_category_n < 1)
            throw ConfigError("dataset.per_category_n must be >= 1");
        if (dataset.stratify && !dataset.per_category_n)
            throw ConfigError("dataset.stratify requires dataset.per_category_n");
        if (sampling.max_tokens < 1) throw ConfigError("sampling.max_tokens must be >= 1");
        if (sampling.temperature < 0.0) throw ConfigError("sampling.temperature must be >= 0");
        if (sampling.top_p <= 0.0 || sampling.top_p > 1.0)
            throw ConfigError("sampling.top_p must be in (0,1]");
    }

    static RunConfig from_json(const nlohmann::json& j) {
        detail::check_keys(j,
                           {"seed", "output_root", "task_kind", "agents", "meta_backend",
                            "judge_backend", "train", "inference", "dataset", "init",
                            "sampling", "prices", "stream_seeds", "prompt_dir"},
                           "config");
        RunConfig c;
        c.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
        c.output_root = detail::get_or<std::string>(j, "output_root", "runs");
        if (!j.contains("task_kind")) throw ConfigError("config requires task_kind");
        c.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());

        if (!j.contains("agents")) throw ConfigError("config requires agents");
        const auto& ja = j.at("agents");
        detail::check_keys(
            ja, {"count", "profile_file", "randomize_profiles", "backend", "per_agent_backends"},
            "agents");
        c.agents.count = detail::get_or<int>(ja, "count", 0);
        c.agents.profile_file = detail::get_or<std::string>(ja, "profile_file", "");
        c.agents.randomize_profiles = detail::get_or<bool>(ja, "randomize_profiles", false);
        if (!ja.contains("backend")) throw ConfigError("agents requires a backend");
        c.agents.backend = backend_config_from_json(ja.at("backend"), "agents.backend");
        if (ja.contains("per_agent_backends") && !ja.at("per_agent_backends").is_null()) {
            for (const auto& b : ja.at("per_agent_backends"))
                c.agents.per_agent_backends.push_back(
                    backend_config_from_json(b, "agents.per_agent_backends"));
        }

        if (j.contains("meta_backend") && !j.at("meta_backend").is_null())
            c.meta_backend = backend_config_from_json(j.at("meta_backend"), "meta_backend");
        if (j.contains("judge_backend") && !j.at("judge_backend").is_null())
            c.judge_backend = backend_config_from_json(j.at("judge_backend"), "judge_backend");

        if (j.contains("train")) {
            const auto& jt = j.at("train");
            detail::check_keys(
                jt, {"epochs", "alpha", "train_sample_count", "forced_k", "carry_answers"},
                "train");
            c.train.epochs = detail::get_or<int>(jt, "epochs", 3);
            c.train.alpha = detail::get_or<double>(jt, "alpha", 0.1);
            c.train.train_sample_count = detail::get_or<int>(jt, "train_sample_count", 3);
            c.train.forced_k = detail::get_or<int>(jt, "forced_k", 3);
            c.train.carry_answers = detail::get_or<bool>(jt, "carry_answers", false);
        }

        if (j.contains("inference")) {
            const auto& ji = j.at("inference");
            detail::check_keys(ji, {"reconsider_minority", "workers"}, "inference");
            c.inference.reconsider_minority =
                detail::get_or<bool>(ji, "reconsider_minority", false);
            c.inference.workers = detail::get_or<int>(ji, "workers", 1);
        }

        if (j.contains("dataset")) {
            const auto& jd = j.at("dataset");
            detail::check_keys(
                jd, {"path", "format", "sample_n", "stratify", "per_category_n"}, "dataset");
            c.dataset.path = detail::get_or<std::string>(jd, "path", "");
            if (jd.contains("format")) {
                const auto& jf = jd.at("format");
                detail::check_keys(
                    jf, {"question_field", "answer_field", "id_field", "category_field"},
                    "dataset.format");
                c.dataset.format.question_field =
                    detail::get_or<std::string>(jf, "question_field", "question");
                c.dataset.format.answer_field =
                    detail::get_or<std::string>(jf, "answer_field", "answer");
                c.dataset.format.id_field = detail::get_or<std::string>(jf, "id_field", "");
                c.dataset.format.category_field =
                    detail::get_or<std::string>(jf, "category_field", "");
            }
            if (jd.contains("sample_n") && !jd.at("sample_n").is_null())
                c.dataset.sample_n = jd.at("sample_n").get<int>();
            c.dataset.stratify = detail::get_or<bool>(jd, "stratify", false);
            if (jd.contains("per_category_n") && !jd.at("per_category_n").is_null())
                c.dataset.per_category_n = jd.at("per_category_n").get<int>();
        }

        if (j.contains("init")) {
            const auto& jn = j.at("init");
            detail::check_keys(jn, {"mode", "confidence_sample_count"}, "init");
            c.init.mode =
                init_mode_from_string(detail::get_or<std::string>(jn, "mode", "uniform"));
            c.init.confidence_sample_count =
                detail::get_or<int>(jn, "confidence_sample_count", 10);
        }

        if (j.contains("sampling")) {
            const auto& js = j.at("sampling");
            detail::check_keys(js, {"temperature", "top_p", "max_tokens"}, "sampling");
            c.sampling.temperature = detail::get_or<double>(js, "temperature", 0.5);
            c.sampling.top_p = detail::get_or<double>(js, "top_p", 1.0);
            c.sampling.max_tokens = detail::get_or<int>(js, "max_tokens", 1024);
        }

        if (j.contains("prices")) {
            const auto& jp = j.at("prices");
            detail::check_keys(jp, {"prompt_per_1k", "completion_per_1k"}, "prices");
            c.prices.prompt_per_1k = detail::get_or<double>(jp, "prompt_per_1k", 0.0);
            c.prices.completion_per_1k = detail::get_or<double>(jp, "completion_per_1k", 0.0);
        }

        if (j.contains("stream_seeds") && !j.at("stream_seeds").is_null()) {
            if (!j.at("stream_seeds").is_object())
                throw ConfigError("stream_seeds must map stream families to seeds");
            for (const auto& [key, value] : j.at("stream_seeds").items()) {
                if (!value.is_number_unsigned() && !value.is_number_integer())
                    throw ConfigError("stream_seeds." + key + " must be an integer");
                c.stream_seeds[key] = value.get<std::uint64_t>();
            }
        }
        c.prompt_dir = detail::get_or<std::string>(j, "prompt_dir", "");
        c.validate();
        return c;
    }

    static RunConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("invalid JSON in config " + path + ": " + e.what());
        }
        return from_json(j);
    }

    /// Canonical normalized form: every field present, defaults filled.
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["seed"] = seed;
        j["output_root"] = output_root;
        j["task_kind"] = to_string(task_kind);
        nlohmann::json ja;
        ja["count"] = agents.count;
        ja["profile_file"] = agents.profile_file;
        ja["randomize_profiles"] = agents.randomize_profiles;
        ja["backend"] = backend_config_to_json(agents.backend);
        nlohmann::json per = nlohmann::json::array();
        for (const auto& b : agents.per_agent_backends) per.push_back(backend_config_to_json(b));
        ja["per_agent_backends"] = per;
        j["agents"] = ja;
        j["meta_backend"] =
            meta_backend ? backend_config_to_json(*meta_backend) : nlohmann::json();
        j["judge_backend"] =
            judge_backend ? backend_config_to_json(*judge_backend) : nlohmann::json();
        j["train"] = {{"epochs", train.epochs},
                      {"alpha", train.alpha},
                      {"train_sample_count", train.train_sample_count},
                      {"forced_k", train.forced_k},
                      {"carry_answers", train.carry_answers}};
        j["inference"] = {{"reconsider_minority", inference.reconsider_minority},
                          {"workers", inference.workers}};
        j["dataset"] = {
            {"path", dataset.path},
            {"format",
             {{"question_field", dataset.format.question_field},
              {"answer_field", dataset.format.answer_field},
              {"id_field", dataset.format.id_field},
              {"category_field", dataset.format.category_field}}},
            {"sample_n", dataset.sample_n ? nlohmann::json(*dataset.sample_n) : nlohmann::json()},
            {"stratify", dataset.stratify},
            {"per_category_n",
             dataset.per_category_n ? nlohmann::json(*dataset.per_category_n) : nlohmann::json()}};
        j["init"] = {{"mode", to_string(init.mode)},
                     {"confidence_sample_count", init.confidence_sample_count}};
        j["sampling"] = {{"temperature", sampling.temperature},
                         {"top_p", sampling.top_p},
                         {"max_tokens", sampling.max_tokens}};
        j["prices"] = {{"prompt_per_1k", prices.prompt_per_1k},
                       {"completion_per_1k", prices.completion_per_1k}};
        nlohmann::json seeds = nlohmann::json::object();
        for (const auto& [key, value] : stream_seeds) seeds[key] = value;
        j["stream_seeds"] = seeds;
        j["prompt_dir"] = prompt_dir;
        return j;
    }

    /// Stable hash of the normalized config, excluding output_root so a
    /// relocated output tree doesn't read as a different experiment.
    std::string config_hash() const {
        nlohmann::json j = to_json();
        j.erase("output_root");
        return hex64(fnv1a64(j.dump()));
    }
};

}  // namespace agentgraph
