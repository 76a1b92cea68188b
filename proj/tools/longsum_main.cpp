// longsum: budgeted long-document summarization, coherence scoring, and
// annotation-alignment tooling. See README.md for usage.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "longsum/cli.hpp"

namespace {

using longsum::cli::RunConfig;

// Values from explicitly-passed flags override the config file, which
// overrides built-in defaults (env vars are read by the library itself).
template <typename T>
void apply(const CLI::Option* opt, T& target, const T& parsed) {
    if (opt != nullptr && opt->count() > 0) target = parsed;
}

struct CommonFlags {
    std::string config_path;
    RunConfig parsed;  // staging area for flag values
    CLI::Option* input = nullptr;
    CLI::Option* output_dir = nullptr;
    CLI::Option* strategy = nullptr;
    CLI::Option* chunk_size = nullptr;
    CLI::Option* window = nullptr;
    CLI::Option* summary_budget = nullptr;
    CLI::Option* backend = nullptr;
    CLI::Option* script = nullptr;
    CLI::Option* base_url = nullptr;
    CLI::Option* model = nullptr;
    CLI::Option* template_dir = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* parallelism = nullptr;
    CLI::Option* resume = nullptr;
    CLI::Option* postprocess = nullptr;
    CLI::Option* prices = nullptr;
    CLI::Option* words_per_token = nullptr;
    CLI::Option* max_regenerations = nullptr;
    CLI::Option* simple_prompts = nullptr;
    CLI::Option* requests_per_min = nullptr;
    CLI::Option* tokens_per_min = nullptr;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file (flags override it)");
    flags.input = cmd->add_option("-i,--input", flags.parsed.input_path, "Input document (UTF-8 text)");
    flags.output_dir = cmd->add_option("-o,--output-dir", flags.parsed.output_dir, "Output directory");
    flags.strategy = cmd->add_option("--strategy", flags.parsed.strategy,
                                     "Summarization strategy: hier | inc");
    flags.chunk_size = cmd->add_option("--chunk-size", flags.parsed.chunk_size, "Chunk size C in tokens");
    flags.window = cmd->add_option("--window", flags.parsed.window, "Backend context window W in tokens");
    flags.summary_budget = cmd->add_option("--summary-budget", flags.parsed.summary_budget,
                                           "Final summary budget G_n in tokens");
    flags.backend = cmd->add_option("--backend", flags.parsed.backend, "Backend kind: scripted | http");
    flags.script = cmd->add_option("--script", flags.parsed.script_path,
                                   "Script file for the scripted backend");
    flags.base_url = cmd->add_option("--base-url", flags.parsed.base_url,
                                     "OpenAI-compatible base URL (or LONGSUM_BASE_URL)");
    flags.model = cmd->add_option("--model", flags.parsed.model, "Model name for the http backend");
    flags.template_dir = cmd->add_option("--template-dir", flags.parsed.template_dir,
                                         "Prompt template directory (or LONGSUM_TEMPLATE_DIR)");
    flags.seed = cmd->add_option("--seed", flags.parsed.seed, "Seed for bootstrap/retry jitter");
    flags.parallelism = cmd->add_option("--parallelism", flags.parsed.parallelism,
                                        "Concurrent leaf/merge calls");
    flags.resume = cmd->add_flag("--resume", flags.parsed.resume,
                                 "Resume from the checkpoint in the output directory");
    flags.postprocess = cmd->add_option("--postprocess", flags.parsed.postprocess,
                                        "Post-processing: llm | stringmatch | off");
    flags.prices = cmd->add_option("--prices", flags.parsed.prices_path,
                                   "Price table JSON (per-1K-token USD prices)");
    flags.words_per_token = cmd->add_option("--words-per-token", flags.parsed.words_per_token,
                                            "Word/token conversion for prompt word limits");
    flags.max_regenerations = cmd->add_option("--max-regenerations", flags.parsed.max_regenerations,
                                              "Regeneration cap before truncation");
    flags.simple_prompts = cmd->add_flag("--simple-prompts", flags.parsed.simple_prompts,
                                         "Use the reduced prompt set for weaker models");
    flags.requests_per_min =
        cmd->add_option("--requests-per-min", flags.parsed.requests_per_min, "Rate limit (0 = off)");
    flags.tokens_per_min =
        cmd->add_option("--tokens-per-min", flags.parsed.tokens_per_min, "Rate limit (0 = off)");
}

RunConfig resolve(const CommonFlags& flags) {
    RunConfig cfg;
    if (!flags.config_path.empty()) cfg = RunConfig::load(flags.config_path);
    apply(flags.input, cfg.input_path, flags.parsed.input_path);
    apply(flags.output_dir, cfg.output_dir, flags.parsed.output_dir);
    apply(flags.strategy, cfg.strategy, flags.parsed.strategy);
    apply(flags.chunk_size, cfg.chunk_size, flags.parsed.chunk_size);
    apply(flags.window, cfg.window, flags.parsed.window);
    apply(flags.summary_budget, cfg.summary_budget, flags.parsed.summary_budget);
    apply(flags.backend, cfg.backend, flags.parsed.backend);
    apply(flags.script, cfg.script_path, flags.parsed.script_path);
    apply(flags.base_url, cfg.base_url, flags.parsed.base_url);
    apply(flags.model, cfg.model, flags.parsed.model);
    apply(flags.template_dir, cfg.template_dir, flags.parsed.template_dir);
    apply(flags.seed, cfg.seed, flags.parsed.seed);
    apply(flags.parallelism, cfg.parallelism, flags.parsed.parallelism);
    apply(flags.resume, cfg.resume, flags.parsed.resume);
    apply(flags.postprocess, cfg.postprocess, flags.parsed.postprocess);
    apply(flags.prices, cfg.prices_path, flags.parsed.prices_path);
    apply(flags.words_per_token, cfg.words_per_token, flags.parsed.words_per_token);
    apply(flags.max_regenerations, cfg.max_regenerations, flags.parsed.max_regenerations);
    apply(flags.simple_prompts, cfg.simple_prompts, flags.parsed.simple_prompts);
    apply(flags.requests_per_min, cfg.requests_per_min, flags.parsed.requests_per_min);
    apply(flags.tokens_per_min, cfg.tokens_per_min, flags.parsed.tokens_per_min);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"longsum: budgeted long-document summarization and coherence evaluation"};
    app.require_subcommand(1);

    // chunk
    auto* chunk_cmd = app.add_subcommand("chunk", "Split a document into sentence-aligned chunks");
    CommonFlags chunk_flags;
    add_common_flags(chunk_cmd, chunk_flags);

    // summarize
    auto* summarize_cmd =
        app.add_subcommand("summarize", "Summarize a long document with hier or inc strategy");
    CommonFlags summarize_flags;
    add_common_flags(summarize_cmd, summarize_flags);

    // score
    auto* score_cmd = app.add_subcommand("score", "Annotate summaries and compute coherence scores");
    CommonFlags score_flags;
    add_common_flags(score_cmd, score_flags);
    std::vector<std::string> score_inputs;
    bool human_mode = false;
    std::string precision_file;
    score_cmd->add_option("summaries", score_inputs,
                          "Summary .txt files (or annotation .json files with --human)");
    score_cmd->add_flag("--human", human_mode, "Ingest human annotation JSON files offline");
    score_cmd->add_option("--precision-file", precision_file,
                          "Validation verdicts JSON; prints precision = (agree+partial)/total");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Length/trigram statistics and optional ROUGE-L");
    CommonFlags stats_flags;
    add_common_flags(stats_cmd, stats_flags);
    std::string stats_summary, stats_source, stats_reference;
    stats_cmd->add_option("--summary", stats_summary, "Summary text file")->required();
    stats_cmd->add_option("--source", stats_source, "Source document text file")->required();
    stats_cmd->add_option("--reference", stats_reference, "Reference summary for ROUGE-L");

    // align
    auto* align_cmd = app.add_subcommand("align", "Align model vs human annotation sets");
    CommonFlags align_flags;
    add_common_flags(align_cmd, align_flags);
    std::string align_model_file, align_human_file, align_mode;
    double align_threshold = -10.0;
    bool per_label = false;
    align_cmd->add_option("--model-file", align_model_file, "Model annotation instances JSON")
        ->required();
    align_cmd->add_option("--human-file", align_human_file, "Human annotation instances JSON")
        ->required();
    align_cmd->add_option("--mode", align_mode,
                          "span_question | span_only | question_only | span_overlap");
    align_cmd->add_option("--threshold", align_threshold, "Cosine match threshold");
    align_cmd->add_flag("--per-label", per_label, "Report precision/recall per error type");

    // cost
    auto* cost_cmd = app.add_subcommand("cost", "Cost a usage ledger against a price table");
    CommonFlags cost_flags;
    add_common_flags(cost_cmd, cost_flags);
    std::string ledger_file;
    cost_cmd->add_option("--ledger", ledger_file, "Ledger JSON written by summarize/score")
        ->required();

    CLI11_PARSE(app, argc, argv);

    return longsum::cli::run_guarded([&] {
        if (chunk_cmd->parsed()) {
            const auto cfg = resolve(chunk_flags);
            const auto plan = longsum::cli::cmd_chunk(cfg);
            std::cout << nlohmann::json{{"chunks", plan.chunks.size()},
                                        {"oversized", plan.oversized_count},
                                        {"output", cfg.output_dir + "/chunk_plan.json"}}
                             .dump()
                      << std::endl;
        } else if (summarize_cmd->parsed()) {
            const auto cfg = resolve(summarize_flags);
            const auto outputs = longsum::cli::cmd_summarize(cfg);
            std::cout << nlohmann::json{{"final_summary", outputs.final_summary.string()},
                                        {"state", outputs.state.string()},
                                        {"transcript", outputs.transcript.string()},
                                        {"ledger", outputs.ledger.string()}}
                             .dump()
                      << std::endl;
        } else if (score_cmd->parsed()) {
            const auto cfg = resolve(score_flags);
            if (!precision_file.empty()) {
                const double precision = longsum::cli::cmd_score_precision(precision_file);
                std::cout << nlohmann::json{{"precision", precision}}.dump() << std::endl;
                return;
            }
            std::vector<std::filesystem::path> inputs(score_inputs.begin(), score_inputs.end());
            const auto outputs = longsum::cli::cmd_score(cfg, inputs, human_mode);
            std::cout << nlohmann::json{{"system_score", outputs.system_score},
                                        {"aggregate", outputs.aggregate.string()},
                                        {"reports", outputs.reports.size()}}
                             .dump()
                      << std::endl;
        } else if (stats_cmd->parsed()) {
            const auto cfg = resolve(stats_flags);
            std::optional<std::filesystem::path> reference;
            if (!stats_reference.empty()) reference = stats_reference;
            const auto stats = longsum::cli::cmd_stats(cfg, stats_summary, stats_source, reference);
            std::cout << stats.dump() << std::endl;
        } else if (align_cmd->parsed()) {
            auto cfg = resolve(align_flags);
            if (!align_mode.empty()) cfg.align_mode = align_mode;
            if (align_threshold >= -1.0) cfg.align_threshold = align_threshold;
            cfg.per_label = per_label || cfg.per_label;
            const auto result = longsum::cli::cmd_align(cfg, align_model_file, align_human_file);
            std::cout << result.dump() << std::endl;
        } else if (cost_cmd->parsed()) {
            const auto cfg = resolve(cost_flags);
            const auto result = longsum::cli::cmd_cost(cfg, ledger_file);
            std::cout << result.dump() << std::endl;
        }
    });
}
