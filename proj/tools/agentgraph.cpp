#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "agentgraph/runner.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string checkpoint;
    std::string dataset;
    bool dry_run = false;
    std::optional<int> workers;
};

agentgraph::RunConfig load_effective_config(const CommonFlags& flags) {
    agentgraph::RunConfig cfg = agentgraph::RunConfig::load(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (!flags.dataset.empty()) cfg.dataset.path = flags.dataset;
    if (flags.workers) cfg.inference.workers = *flags.workers;
    return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_config) {
    auto* opt = cmd->add_option("--config", flags.config_path, "Run configuration JSON file");
    if (needs_config) opt->required();
    cmd->add_option("--seed", flags.seed, "Master seed override");
    cmd->add_option("--checkpoint", flags.checkpoint, "Graph or training checkpoint JSON");
    cmd->add_option("--dataset", flags.dataset, "Dataset path override (JSONL)");
    cmd->add_flag("--dry-run", flags.dry_run, "Print the plan without calling any backend");
    cmd->add_option("--workers", flags.workers, "Inference worker thread count override");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collaboration-graph optimizer for multi-agent LLM workflows"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string report_dir;

    CLI::App* init = app.add_subcommand("init", "Initialize a collaboration graph");
    add_common(init, flags, true);
    CLI::App* train = app.add_subcommand("train", "Optimize connection scores over a dataset");
    add_common(train, flags, true);
    CLI::App* infer = app.add_subcommand("infer", "Run inference over a dataset");
    add_common(infer, flags, true);
    CLI::App* eval = app.add_subcommand("eval", "Run inference plus metrics and judging");
    add_common(eval, flags, true);
    CLI::App* report = app.add_subcommand("report", "Summarize a finished run directory");
    report->add_option("run_dir", report_dir, "Run directory to summarize")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (init->parsed()) {
            agentgraph::cmd_init(load_effective_config(flags), std::cout);
        } else if (train->parsed()) {
            std::optional<std::string> ckpt;
            if (!flags.checkpoint.empty()) ckpt = flags.checkpoint;
            agentgraph::cmd_train(load_effective_config(flags), ckpt, flags.dry_run, std::cout);
        } else if (infer->parsed()) {
            agentgraph::cmd_infer(load_effective_config(flags), flags.checkpoint, flags.dry_run,
                                  /*with_judge=*/false, std::cout);
        } else if (eval->parsed()) {
            agentgraph::cmd_infer(load_effective_config(flags), flags.checkpoint, flags.dry_run,
                                  /*with_judge=*/true, std::cout);
        } else if (report->parsed()) {
            agentgraph::cmd_report(report_dir, std::cout);
        }
    } catch (const agentgraph::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
