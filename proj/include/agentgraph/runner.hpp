#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentgraph/agents.hpp"
#include "agentgraph/config.hpp"
#include "agentgraph/core.hpp"
#include "agentgraph/dataset.hpp"
#include "agentgraph/graph.hpp"
#include "agentgraph/http_backend.hpp"
#include "agentgraph/inference.hpp"
#include "agentgraph/ledger.hpp"
#include "agentgraph/meta.hpp"
#include "agentgraph/metrics.hpp"
#include "agentgraph/profiles.hpp"
#include "agentgraph/prompts.hpp"
#include "agentgraph/rng.hpp"
#include "agentgraph/scripted_backend.hpp"
#include "agentgraph/trainer.hpp"
#include "agentgraph/transcript.hpp"

namespace agentgraph {

// ---------------------------------------------------------------------------
// Run directory store (append-only)

/// Allocates the next run-NNNN directory under output_root.
inline std::filesystem::path next_run_dir(const std::string& output_root) {
    namespace fs = std::filesystem;
    fs::create_directories(output_root);
    int next = 1;
    for (const auto& entry : fs::directory_iterator(output_root)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("run-", 0) != 0) continue;
        try {
            next = std::max(next, std::stoi(name.substr(4)) + 1);
        } catch (...) {
            continue;
        }
    }
    for (;; ++next) {
        std::ostringstream name;
        name << "run-" << std::setw(4) << std::setfill('0') << next;
        fs::path dir = fs::path(output_root) / name.str();
        if (fs::create_directory(dir)) return dir;
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << content;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

inline void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg,
                           const std::string& command) {
    write_json_file(dir / "manifest.json", {{"schema", 1},
                                            {"command", command},
                                            {"seed", cfg.seed},
                                            {"config_hash", cfg.config_hash()},
                                            {"config", cfg.to_json()}});
}

// ---------------------------------------------------------------------------
// Backend construction

struct BackendInstances {
    std::vector<std::shared_ptr<Backend>> workers;  // one per agent (may alias)
    std::shared_ptr<Backend> meta;
    std::shared_ptr<Backend> judge;  // null unless configured
};

/// Builds live backends. Identical configurations share one instance so
/// ordered script entries (max_uses) are consumed globally, in call order.
inline BackendInstances build_backends(const RunConfig& cfg) {
    std::map<std::string, std::shared_ptr<Backend>> cache;
    auto make = [&cache](const BackendConfig& c, const std::string& label)
        -> std::shared_ptr<Backend> {
        std::string key = backend_config_to_json(c).dump();
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        std::shared_ptr<Backend> b;
        if (c.kind == BackendKind::Scripted)
            b = std::make_shared<ScriptedBackend>(ScriptedBackend::load_entries(c.script_path),
                                                  label);
        else
            b = std::make_shared<HttpBackend>(c);
        cache.emplace(std::move(key), b);
        return b;
    };
    BackendInstances out;
    for (int i = 0; i < cfg.agents.count; ++i) {
        const BackendConfig& bc = cfg.agents.per_agent_backends.empty()
                                      ? cfg.agents.backend
                                      : cfg.agents.per_agent_backends[static_cast<std::size_t>(i)];
        out.workers.push_back(make(bc, "scripted"));
    }
    out.meta = make(cfg.meta_backend ? *cfg.meta_backend : cfg.agents.backend, "scripted");
    if (cfg.judge_backend) out.judge = make(*cfg.judge_backend, "scripted");
    return out;
}

/// Resolves the per-agent profile list: a custom file or the built-in
/// seven, optionally seed-shuffled, cycled to the agent count.
inline std::vector<AgentProfile> resolve_profiles(const RunConfig& cfg, RngPool& pool) {
    std::vector<AgentProfile> source = cfg.agents.profile_file.empty()
                                           ? profiles::builtin()
                                           : load_profiles(cfg.agents.profile_file);
    if (cfg.agents.randomize_profiles) {
        auto& rng = pool.stream("profile_shuffle");
        for (std::size_t i = source.size(); i > 1; --i) {
            std::size_t j = next_bounded(rng, i);
            std::swap(source[i - 1], source[j]);
        }
    }
    std::vector<AgentProfile> out;
    for (int i = 0; i < cfg.agents.count; ++i) {
        AgentProfile p = source[static_cast<std::size_t>(i) % source.size()];
        int round = i / static_cast<int>(source.size());
        if (round > 0) p.name += " " + std::to_string(round + 1);
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Graph initialization (init modes: uniform | confidence | random)

inline CollabGraph initialize_graph(const RunConfig& cfg, BackendInstances& backends,
                                    const std::vector<AgentProfile>& profiles,
                                    const PromptSet& prompts, RngPool& pool,
                                    RunLedger* ledger, Transcript* transcript) {
    const int n = cfg.agents.count;
    std::vector<std::string> names;
    for (const auto& p : profiles) names.push_back(p.name);

    switch (cfg.init.mode) {
        case InitMode::Uniform: {
            UtilityVector u(static_cast<std::size_t>(n), 0.5);
            return CollabGraph::from_utilities(u, std::move(names), cfg.train.alpha);
        }
        case InitMode::Random: {
            auto& rng = pool.stream("init_random");
            std::map<EdgeId, double> scores;
            for (const auto& e : all_edges(n))
                scores[e] = std::max(ScoreMatrix::kScoreFloor, next_unit(rng));
            CollabGraph g;
            g.n_agents = n;
            g.scores = ScoreMatrix(std::move(scores), cfg.train.alpha);
            g.agent_names = std::move(names);
            return g;
        }
        case InitMode::Confidence: {
            if (cfg.dataset.path.empty())
                throw ConfigError("confidence init needs dataset.path for sample questions");
            auto all = load_dataset(cfg.dataset.path, cfg.task_kind, cfg.dataset.format);
            if (all.empty()) throw DataError("dataset is empty: " + cfg.dataset.path);
            int want = std::min(cfg.init.confidence_sample_count, static_cast<int>(all.size()));
            auto sampled = sample_instances(all, want, pool.stream("confidence_sample"));
            std::vector<std::string> questions;
            for (const auto& inst : sampled) questions.push_back(inst.question);

            UtilityVector utilities;
            for (int i = 0; i < n; ++i) {
                RecordingBackend rec(backends.workers[static_cast<std::size_t>(i)].get(),
                                     LedgerRole::Worker, "agent" + std::to_string(i), ledger,
                                     transcript);
                rec.set_context({{"phase", "init"}});
                Agent agent(i, profiles[static_cast<std::size_t>(i)], &rec, cfg.task_kind,
                            &prompts, cfg.sampling);
                ConfidenceResult r;
                try {
                    r = elicit_confidence(agent, questions);
                } catch (const BackendError& e) {
                    throw BackendError(std::string("confidence initialization failed: ") +
                                       e.what() + "; consider init.mode=uniform");
                }
                if (r.fallback_used && transcript)
                    transcript->warning("confidence elicitation unparseable; default 0.5",
                                        {{"agent", i}});
                if (transcript)
                    transcript->event({{"type", "confidence"},
                                       {"agent", i},
                                       {"utility", r.utility},
                                       {"parsed", r.parsed},
                                       {"total", r.total},
                                       {"fallback", r.fallback_used}});
                utilities.push_back(r.utility);
            }
            return CollabGraph::from_utilities(utilities, std::move(names), cfg.train.alpha);
        }
    }
    throw InvariantError("unknown init mode");
}

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
    CollabGraph graph;
    TrainReport report;
    TrainProgress progress;
    nlohmann::json rng_state;  // null when absent
};

inline nlohmann::json checkpoint_to_json(const CollabGraph& graph, const TrainReport& report,
                                         const TrainProgress& progress,
                                         const nlohmann::json& rng_state) {
    return {{"schema", 1},
            {"graph", graph.to_json()},
            {"report", report.to_json()},
            {"progress", progress.to_json()},
            {"rng_state", rng_state}};
}

/// Accepts either a full training checkpoint or a bare graph JSON (the
/// output of init).
inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    nlohmann::json j = read_json_file(path);
    Checkpoint c;
    if (j.contains("graph")) {
        c.graph = CollabGraph::from_json(j.at("graph"));
        c.report = TrainReport::from_json(j.at("report"));
        c.progress = TrainProgress::from_json(j.at("progress"));
        c.rng_state = j.value("rng_state", nlohmann::json());
    } else {
        c.graph = CollabGraph::from_json(j);
        c.progress = TrainProgress{1, 0, false};
        c.rng_state = nlohmann::json();
    }
    return c;
}

inline void write_checkpoint_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    write_text_file(tmp, j.dump(2) + "\n");
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// cmd_init

struct CommandOutcome {
    std::filesystem::path run_dir;
};

inline CommandOutcome cmd_init(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    RngPool pool(cfg.seed, cfg.stream_seeds);
    PromptSet prompts = PromptSet::with_overrides(cfg.prompt_dir);
    BackendInstances backends = build_backends(cfg);
    std::vector<AgentProfile> profiles = resolve_profiles(cfg, pool);

    RunLedger ledger(cfg.prices);
    Transcript transcript;
    transcript.header("init", cfg.seed, cfg.config_hash());
    CollabGraph graph =
        initialize_graph(cfg, backends, profiles, prompts, pool, &ledger, &transcript);
    graph.validate();

    std::filesystem::path dir = next_run_dir(cfg.output_root);
    write_manifest(dir, cfg, "init");
    write_json_file(dir / "graph.json", graph.to_json());
    write_text_file(dir / "transcript.jsonl", transcript.to_jsonl());
    write_json_file(dir / "ledger.json", ledger.to_json());

    out << "initialized " << to_string(cfg.init.mode) << " graph: " << graph.n_agents
        << " agents, " << graph.scores.size() << " edges\n";
    out << "run dir: " << dir.string() << "\n";
    return {dir};
}

// ---------------------------------------------------------------------------
// cmd_train

inline CommandOutcome cmd_train(const RunConfig& cfg,
                                const std::optional<std::string>& checkpoint_path,
                                bool dry_run, std::ostream& out) {
    cfg.validate();
    if (cfg.dataset.path.empty()) throw ConfigError("training needs dataset.path");

    RngPool pool(cfg.seed, cfg.stream_seeds);
    PromptSet prompts = PromptSet::with_overrides(cfg.prompt_dir);

    auto all = load_dataset(cfg.dataset.path, cfg.task_kind, cfg.dataset.format);
    if (all.empty()) throw DataError("dataset is empty: " + cfg.dataset.path);
    std::vector<TaskInstance> train_set =
        cfg.dataset.stratify
            ? sample_stratified(all, *cfg.dataset.per_category_n,
                                pool.stream("dataset_sample"))
            : sample_instances(all, cfg.train.train_sample_count,
                               pool.stream("dataset_sample"));

    if (dry_run) {
        int n_edges = cfg.agents.count * (cfg.agents.count - 1) / 2;
        out << "dry run: " << cfg.train.epochs << " epochs x " << train_set.size()
            << " datapoints x " << n_edges << " edges = "
            << cfg.train.epochs * static_cast<int>(train_set.size()) * n_edges
            << " updates\n";
        out << "epoch 1 selection: weighted sampling; later epochs: meta-agent proposals\n";
        for (const auto& inst : train_set) out << "datapoint " << inst.id << "\n";
        return {std::filesystem::path()};
    }

    BackendInstances backends = build_backends(cfg);
    std::vector<AgentProfile> profiles = resolve_profiles(cfg, pool);

    RunLedger ledger(cfg.prices);
    Transcript transcript;
    transcript.header("train", cfg.seed, cfg.config_hash());

    // Graph + resume state: from a checkpoint when given, else a fresh init.
    Checkpoint ckpt;
    if (checkpoint_path) {
        ckpt = load_checkpoint(*checkpoint_path);
        if (ckpt.graph.n_agents != cfg.agents.count)
            throw ConfigError("checkpoint has " + std::to_string(ckpt.graph.n_agents) +
                              " agents but config says " + std::to_string(cfg.agents.count));
        if (!ckpt.rng_state.is_null()) pool.restore_state(ckpt.rng_state);
    } else {
        ckpt.graph =
            initialize_graph(cfg, backends, profiles, prompts, pool, &ledger, &transcript);
        ckpt.progress = TrainProgress{1, 0, false};
    }
    ckpt.graph.validate();

    // Recording wrappers: one per worker plus the meta backend.
    std::vector<std::unique_ptr<RecordingBackend>> recorders;
    std::vector<Agent> agents;
    for (int i = 0; i < cfg.agents.count; ++i) {
        recorders.push_back(std::make_unique<RecordingBackend>(
            backends.workers[static_cast<std::size_t>(i)].get(), LedgerRole::Worker,
            "agent" + std::to_string(i), &ledger, &transcript));
        agents.emplace_back(i, profiles[static_cast<std::size_t>(i)], recorders.back().get(),
                            cfg.task_kind, &prompts, cfg.sampling);
    }
    recorders.push_back(std::make_unique<RecordingBackend>(
        backends.meta.get(), LedgerRole::Meta, "meta", &ledger, &transcript));
    MetaAgents meta(recorders.back().get(), &prompts, cfg.sampling);

    std::filesystem::path dir = next_run_dir(cfg.output_root);
    write_manifest(dir, cfg, "train");

    TrainContext ctx;
    ctx.workers = &agents;
    ctx.meta = &meta;
    ctx.rng = &pool;
    ctx.transcript = &transcript;
    ctx.set_llm_context = [&recorders](const nlohmann::json& context) {
        for (auto& r : recorders) r->set_context(context);
    };
    ctx.checkpoint = [&dir, &pool](const CollabGraph& g, const TrainReport& r,
                                   const TrainProgress& p) {
        write_checkpoint_file(dir / "checkpoint.json",
                              checkpoint_to_json(g, r, p, pool.save_state()));
    };

    TrainReport report = ckpt.report;
    std::optional<TrainProgress> start;
    if (checkpoint_path) start = ckpt.progress;

    try {
        train(ckpt.graph, train_set, cfg.train, ctx, report, start);
    } catch (const BackendUnavailableError&) {
        // checkpoint.json already reflects the last completed update.
        write_json_file(dir / "graph.json", ckpt.graph.to_json());
        write_json_file(dir / "train_report.json", report.to_json());
        write_text_file(dir / "transcript.jsonl", transcript.to_jsonl());
        write_json_file(dir / "ledger.json", ledger.to_json());
        out << "run dir: " << dir.string() << "\n";
        throw;
    }

    write_json_file(dir / "graph.json", ckpt.graph.to_json());
    write_json_file(dir / "train_report.json", report.to_json());
    write_text_file(dir / "transcript.jsonl", transcript.to_jsonl());
    write_json_file(dir / "ledger.json", ledger.to_json());

    out << "trained " << cfg.train.epochs << " epochs over " << train_set.size()
        << " datapoints; " << report.updates.size() << " updates\n";
    out << "run dir: " << dir.string() << "\n";
    return {dir};
}

// ---------------------------------------------------------------------------
// cmd_infer / cmd_eval

struct QuestionOutput {
    QuestionResult result;
    Transcript transcript;
    std::optional<int> coherence;
    std::optional<bool> constraint_satisfied;
};

namespace detail {

/// Raw passage text for judging: the chosen agent's reply after the last
/// "Passage:" marker (or the whole reply).
inline std::string judged_passage(const QuestionResult& qr) {
    for (const auto& [id, a] : qr.final_answers) {
        if (a.extraction_failed) continue;
        if (answers_equal(a.extracted, qr.vote.final)) {
            auto tail = after_last_marker(a.raw, "Passage:");
            return trim(tail ? *tail : a.raw);
        }
    }
    return "";
}

inline std::string csv_escape(const std::string& s) {
    bool needs = s.find_first_of(",\"\n") != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace detail

inline void process_question(const TaskInstance& inst, const RunConfig& cfg,
                             const InferencePlan& plan, BackendInstances& backends,
                             const std::vector<AgentProfile>& profiles,
                             const PromptSet& prompts, const RngPool& pool,
                             RunLedger& ledger, bool with_judge, QuestionOutput& out) {
    std::vector<std::unique_ptr<RecordingBackend>> recorders;
    std::vector<Agent> agents;
    for (int i = 0; i < cfg.agents.count; ++i) {
        recorders.push_back(std::make_unique<RecordingBackend>(
            backends.workers[static_cast<std::size_t>(i)].get(), LedgerRole::Worker,
            "agent" + std::to_string(i), &ledger, &out.transcript));
        recorders.back()->set_context({{"question", inst.id}});
        agents.emplace_back(i, profiles[static_cast<std::size_t>(i)], recorders.back().get(),
                            cfg.task_kind, &prompts, cfg.sampling);
    }
    InferenceConfig icfg;
    icfg.forced_k = cfg.train.forced_k;
    icfg.reconsider_minority = cfg.inference.reconsider_minority;
    out.result = run_inference(plan, inst, agents, icfg, pool, &out.transcript);

    if (cfg.task_kind == TaskKind::CreativeWriting && !out.result.vote.abstained) {
        std::string passage = detail::judged_passage(out.result);
        if (!inst.end_sentences.empty())
            out.constraint_satisfied =
                creative_constraint_satisfied(passage, inst.end_sentences);
        if (with_judge) {
            if (!backends.judge)
                throw ConfigError("creative-writing eval needs judge_backend");
            RecordingBackend judge_rec(backends.judge.get(), LedgerRole::Judge, "judge",
                                       &ledger, &out.transcript);
            judge_rec.set_context({{"question", inst.id}});
            out.coherence = judge_coherence(passage, judge_rec, prompts, cfg.sampling);
            if (!out.coherence)
                out.transcript.warning("coherence score unparseable; item unscored",
                                       {{"question", inst.id}});
            out.transcript.event(
                {{"type", "judge"},
                 {"question", inst.id},
                 {"score", out.coherence ? nlohmann::json(*out.coherence) : nlohmann::json()}});
        }
    }
}

inline nlohmann::json aggregate_metrics(const std::vector<TaskInstance>& instances,
                                        const std::vector<QuestionOutput>& outputs) {
    struct Bucket {
        int n = 0, answered = 0, ties = 0, reconsidered = 0;
        std::vector<std::optional<NormalizedAnswer>> preds;
        std::vector<NormalizedAnswer> golds;
        std::vector<int> error_scopes;
        std::vector<int> coherence;
        int constraint_checked = 0, constraint_ok = 0;
    };
    std::map<std::string, Bucket> buckets;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const TaskInstance& inst = instances[i];
        const QuestionOutput& q = outputs[i];
        Bucket& b = buckets[to_string(inst.task_kind)];
        ++b.n;
        if (!q.result.vote.abstained) ++b.answered;
        if (q.result.vote.tie_broken) ++b.ties;
        if (q.result.reconsider_triggered) ++b.reconsidered;
        if (inst.gold) {
            b.golds.push_back(*inst.gold);
            b.preds.push_back(q.result.vote.abstained
                                  ? std::nullopt
                                  : std::optional<NormalizedAnswer>(q.result.vote.final));
        }
        if (inst.task_kind == TaskKind::Sorting && !q.result.vote.abstained) {
            auto input = detail::parse_number_list(inst.question);
            if (input)
                b.error_scopes.push_back(
                    sorting_error_scope(q.result.vote.final.list, *input));
        }
        if (q.coherence) b.coherence.push_back(*q.coherence);
        if (q.constraint_satisfied) {
            ++b.constraint_checked;
            if (*q.constraint_satisfied) ++b.constraint_ok;
        }
    }
    nlohmann::json by_kind = nlohmann::json::object();
    for (const auto& [kind, b] : buckets) {
        nlohmann::json m;
        m["n"] = b.n;
        m["answered"] = b.answered;
        m["tie_broken"] = b.ties;
        m["reconsider_triggered"] = b.reconsidered;
        if (!b.golds.empty()) m["accuracy"] = accuracy(b.preds, b.golds);
        if (!b.error_scopes.empty()) {
            double sum = 0;
            for (int e : b.error_scopes) sum += e;
            m["mean_error_scope"] = sum / static_cast<double>(b.error_scopes.size());
        }
        if (!b.coherence.empty()) {
            double sum = 0;
            for (int s : b.coherence) sum += s;
            m["mean_coherence"] = sum / static_cast<double>(b.coherence.size());
            m["judged"] = static_cast<int>(b.coherence.size());
        }
        if (b.constraint_checked > 0)
            m["constraint_rate"] =
                static_cast<double>(b.constraint_ok) / b.constraint_checked;
        by_kind[kind] = m;
    }
    return {{"by_task_kind", by_kind}};
}

inline CommandOutcome cmd_infer(const RunConfig& cfg, const std::string& checkpoint_path,
                                bool dry_run, bool with_judge, std::ostream& out) {
    cfg.validate();
    if (checkpoint_path.empty())
        throw ConfigError("inference needs --checkpoint (trained graph)");
    if (cfg.dataset.path.empty()) throw ConfigError("inference needs dataset.path");

    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    ckpt.graph.validate();
    if (ckpt.graph.n_agents != cfg.agents.count)
        throw ConfigError("checkpoint has " + std::to_string(ckpt.graph.n_agents) +
                          " agents but config says " + std::to_string(cfg.agents.count));

    InferencePlan plan = build_inference_plan(ckpt.graph.scores, ckpt.graph.n_agents);
    if (dry_run) {
        out << "inference plan (" << plan.ordered_edges.size() << " edges):\n";
        for (const auto& e : plan.ordered_edges)
            out << "  (" << e.lo << ", " << e.hi << ") score "
                << ckpt.graph.scores.at(e) << "\n";
        return {std::filesystem::path()};
    }

    RngPool pool(cfg.seed, cfg.stream_seeds);
    PromptSet prompts = PromptSet::with_overrides(cfg.prompt_dir);
    BackendInstances backends = build_backends(cfg);
    std::vector<AgentProfile> profiles = resolve_profiles(cfg, pool);

    auto all = load_dataset(cfg.dataset.path, cfg.task_kind, cfg.dataset.format);
    if (all.empty()) throw DataError("dataset is empty: " + cfg.dataset.path);
    std::vector<TaskInstance> instances = all;
    if (cfg.dataset.stratify)
        instances = sample_stratified(all, *cfg.dataset.per_category_n,
                                      pool.stream("dataset_sample"));
    else if (cfg.dataset.sample_n)
        instances = sample_instances(all, *cfg.dataset.sample_n,
                                     pool.stream("dataset_sample"));

    RunLedger ledger(cfg.prices);
    Transcript transcript;
    transcript.header(with_judge ? "eval" : "infer", cfg.seed, cfg.config_hash());

    std::vector<QuestionOutput> outputs(instances.size());
    int workers = std::min(cfg.inference.workers, static_cast<int>(instances.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < instances.size(); ++i)
            process_question(instances[i], cfg, plan, backends, profiles, prompts, pool,
                             ledger, with_judge, outputs[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mu;
        auto work = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= instances.size()) return;
                try {
                    process_question(instances[i], cfg, plan, backends, profiles, prompts,
                                     pool, ledger, with_judge, outputs[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> threads;
        for (int t = 0; t < workers; ++t) threads.emplace_back(work);
        for (auto& t : threads) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    for (auto& q : outputs) transcript.append(std::move(q.transcript));

    // Per-instance results.
    nlohmann::json results = nlohmann::json::array();
    std::ostringstream csv;
    csv << "id,task_kind,final,correct,tie_broken,abstained,reconsider_triggered,"
           "error_scope,coherence\n";
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const TaskInstance& inst = instances[i];
        const QuestionOutput& q = outputs[i];
        nlohmann::json r;
        r["id"] = inst.id;
        r["task_kind"] = to_string(inst.task_kind);
        r["final"] = q.result.vote.abstained ? nlohmann::json()
                                             : nlohmann::json(q.result.vote.final.canonical());
        nlohmann::json tally = nlohmann::json::object();
        for (const auto& [key, count] : q.result.vote.tally) tally[key] = count;
        r["tally"] = tally;
        r["tie_broken"] = q.result.vote.tie_broken;
        r["abstained"] = q.result.vote.abstained;
        r["reconsider_triggered"] = q.result.reconsider_triggered;
        std::optional<bool> correct;
        if (inst.gold)
            correct = !q.result.vote.abstained && answers_equal(q.result.vote.final, *inst.gold);
        r["correct"] = correct ? nlohmann::json(*correct) : nlohmann::json();
        std::optional<int> escope;
        if (inst.task_kind == TaskKind::Sorting && !q.result.vote.abstained) {
            if (auto input = detail::parse_number_list(inst.question))
                escope = sorting_error_scope(q.result.vote.final.list, *input);
        }
        r["error_scope"] = escope ? nlohmann::json(*escope) : nlohmann::json();
        r["coherence"] = q.coherence ? nlohmann::json(*q.coherence) : nlohmann::json();
        r["constraint_satisfied"] =
            q.constraint_satisfied ? nlohmann::json(*q.constraint_satisfied) : nlohmann::json();
        results.push_back(r);

        csv << detail::csv_escape(inst.id) << "," << to_string(inst.task_kind) << ","
            << detail::csv_escape(q.result.vote.abstained ? ""
                                                          : q.result.vote.final.canonical())
            << "," << (correct ? (*correct ? "true" : "false") : "") << ","
            << (q.result.vote.tie_broken ? "true" : "false") << ","
            << (q.result.vote.abstained ? "true" : "false") << ","
            << (q.result.reconsider_triggered ? "true" : "false") << ","
            << (escope ? std::to_string(*escope) : "") << ","
            << (q.coherence ? std::to_string(*q.coherence) : "") << "\n";
    }

    nlohmann::json metrics = aggregate_metrics(instances, outputs);

    std::filesystem::path dir = next_run_dir(cfg.output_root);
    write_manifest(dir, cfg, with_judge ? "eval" : "infer");
    write_json_file(dir / "results.json", results);
    write_text_file(dir / "results.csv", csv.str());
    write_json_file(dir / "metrics.json", metrics);
    write_text_file(dir / "transcript.jsonl", transcript.to_jsonl());
    write_json_file(dir / "ledger.json", ledger.to_json());

    out << "answered " << instances.size() << " questions\n";
    for (const auto& [kind, m] : metrics.at("by_task_kind").items()) {
        out << kind << ":";
        if (m.contains("accuracy")) out << " accuracy " << m.at("accuracy").get<double>();
        if (m.contains("mean_error_scope"))
            out << " mean_error_scope " << m.at("mean_error_scope").get<double>();
        if (m.contains("mean_coherence"))
            out << " mean_coherence " << m.at("mean_coherence").get<double>();
        out << "\n";
    }
    out << "run dir: " << dir.string() << "\n";
    return {dir};
}

// ---------------------------------------------------------------------------
// cmd_report

inline void cmd_report(const std::string& run_dir, std::ostream& out) {
    namespace fs = std::filesystem;
    fs::path dir(run_dir);
    if (!fs::is_directory(dir)) throw DataError("run directory not found: " + run_dir);
    fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw DataError("missing artifact: " + manifest_path.string());
    nlohmann::json manifest = read_json_file(manifest_path);
    out << "command: " << manifest.at("command").get<std::string>() << "\n";
    out << "seed: " << manifest.at("seed").get<std::uint64_t>() << "\n";
    out << "config hash: " << manifest.at("config_hash").get<std::string>() << "\n";

    fs::path metrics_path = dir / "metrics.json";
    if (fs::exists(metrics_path)) {
        nlohmann::json metrics = read_json_file(metrics_path);
        out << "\nmetrics\n";
        for (const auto& [kind, m] : metrics.at("by_task_kind").items()) {
            out << "  " << kind << ": n=" << m.at("n").get<int>();
            if (m.contains("accuracy")) out << " accuracy=" << m.at("accuracy").get<double>();
            if (m.contains("mean_error_scope"))
                out << " mean_error_scope=" << m.at("mean_error_scope").get<double>();
            if (m.contains("mean_coherence"))
                out << " mean_coherence=" << m.at("mean_coherence").get<double>();
            if (m.contains("constraint_rate"))
                out << " constraint_rate=" << m.at("constraint_rate").get<double>();
            out << "\n";
        }
    }

    fs::path report_path = dir / "train_report.json";
    if (fs::exists(report_path)) {
        TrainReport report = TrainReport::from_json(read_json_file(report_path));
        out << "\ntop edges by epoch\n";
        for (const auto& snap : report.epoch_snapshots) {
            std::vector<std::pair<EdgeId, double>> edges(snap.scores.begin(),
                                                         snap.scores.end());
            std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
            });
            out << "  epoch " << snap.epoch << ":";
            for (std::size_t i = 0; i < edges.size() && i < 5; ++i)
                out << " (" << edges[i].first.lo << "," << edges[i].first.hi << ")="
                    << edges[i].second;
            out << "\n";
        }
        out << "updates: " << report.updates.size() << "\n";
    }

    fs::path ledger_path = dir / "ledger.json";
    if (fs::exists(ledger_path)) {
        nlohmann::json ledger = read_json_file(ledger_path);
        out << "\ncost\n";
        out << "  prompt tokens: " << ledger.at("prompt_tokens").get<std::int64_t>() << "\n";
        out << "  completion tokens: " << ledger.at("completion_tokens").get<std::int64_t>()
            << "\n";
        out << "  estimated cost: " << ledger.at("estimated_cost").get<double>() << "\n";
    }
}

}  // namespace agentgraph
