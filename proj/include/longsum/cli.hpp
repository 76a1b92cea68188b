#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "longsum/align.hpp"
#include "longsum/chunker.hpp"
#include "longsum/errors.hpp"
#include "longsum/http_backend.hpp"
#include "longsum/llm.hpp"
#include "longsum/prompts.hpp"
#include "longsum/score.hpp"
#include "longsum/summarize.hpp"
#include "longsum/text.hpp"

namespace longsum::cli {

namespace fs = std::filesystem;

/// Full operator configuration; resolved flags > config file > environment.
/// The resolved config is written next to every command's outputs.
struct RunConfig {
    // io
    std::string input_path;
    std::string output_dir = "out";

    // strategy + budgets
    std::string strategy = "hier";  // hier | inc
    std::size_t chunk_size = 2048;
    std::size_t window = 8192;
    std::size_t summary_budget = 900;  // G_n
    std::map<std::size_t, std::size_t> level_budgets;
    int max_regenerations = 3;
    double words_per_token = 0.75;
    double output_margin = 1.25;

    // sampling
    double summarize_temperature = 0.5;
    double compress_temperature = 1.0;
    double eval_temperature = 0.0;

    // engine
    std::string postprocess = "off";  // off | llm | stringmatch
    std::size_t parallelism = 1;
    std::size_t prior_context_count = 1;
    bool simple_prompts = false;
    bool resume = false;
    std::uint64_t seed = 0;

    // backend
    std::string backend = "scripted";  // scripted | http
    std::string script_path;
    std::string base_url;
    std::string model;
    std::string embedding_model;
    double requests_per_min = 0.0;
    double tokens_per_min = 0.0;
    int retry_max_attempts = 5;

    // assets
    std::string template_dir;
    std::string prices_path;

    // scoring
    std::size_t bootstrap_resamples = 1000;
    std::size_t bootstrap_sample_size = 100;

    // alignment
    std::string align_mode = "span_question";
    double align_threshold = 0.68;
    double iou_threshold = 0.5;
    bool per_label = false;

    nlohmann::json to_json() const {
        nlohmann::json levels;
        for (const auto& [level, budget] : level_budgets) levels[std::to_string(level)] = budget;
        return nlohmann::json{{"schema_version", 1},
                              {"input_path", input_path},
                              {"output_dir", output_dir},
                              {"strategy", strategy},
                              {"chunk_size", chunk_size},
                              {"window", window},
                              {"summary_budget", summary_budget},
                              {"level_budgets", levels},
                              {"max_regenerations", max_regenerations},
                              {"words_per_token", words_per_token},
                              {"output_margin", output_margin},
                              {"summarize_temperature", summarize_temperature},
                              {"compress_temperature", compress_temperature},
                              {"eval_temperature", eval_temperature},
                              {"postprocess", postprocess},
                              {"parallelism", parallelism},
                              {"prior_context_count", prior_context_count},
                              {"simple_prompts", simple_prompts},
                              {"resume", resume},
                              {"seed", seed},
                              {"backend", backend},
                              {"script_path", script_path},
                              {"base_url", base_url},
                              {"model", model},
                              {"embedding_model", embedding_model},
                              {"requests_per_min", requests_per_min},
                              {"tokens_per_min", tokens_per_min},
                              {"retry_max_attempts", retry_max_attempts},
                              {"template_dir", template_dir},
                              {"prices_path", prices_path},
                              {"bootstrap_resamples", bootstrap_resamples},
                              {"bootstrap_sample_size", bootstrap_sample_size},
                              {"align_mode", align_mode},
                              {"align_threshold", align_threshold},
                              {"iou_threshold", iou_threshold},
                              {"per_label", per_label}};
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig cfg;
        cfg.input_path = j.value("input_path", cfg.input_path);
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.strategy = j.value("strategy", cfg.strategy);
        cfg.chunk_size = j.value("chunk_size", cfg.chunk_size);
        cfg.window = j.value("window", cfg.window);
        cfg.summary_budget = j.value("summary_budget", cfg.summary_budget);
        if (j.contains("level_budgets"))
            for (auto it = j.at("level_budgets").begin(); it != j.at("level_budgets").end(); ++it)
                cfg.level_budgets[std::stoul(it.key())] = it.value().get<std::size_t>();
        cfg.max_regenerations = j.value("max_regenerations", cfg.max_regenerations);
        cfg.words_per_token = j.value("words_per_token", cfg.words_per_token);
        cfg.output_margin = j.value("output_margin", cfg.output_margin);
        cfg.summarize_temperature = j.value("summarize_temperature", cfg.summarize_temperature);
        cfg.compress_temperature = j.value("compress_temperature", cfg.compress_temperature);
        cfg.eval_temperature = j.value("eval_temperature", cfg.eval_temperature);
        cfg.postprocess = j.value("postprocess", cfg.postprocess);
        cfg.parallelism = j.value("parallelism", cfg.parallelism);
        cfg.prior_context_count = j.value("prior_context_count", cfg.prior_context_count);
        cfg.simple_prompts = j.value("simple_prompts", cfg.simple_prompts);
        cfg.resume = j.value("resume", cfg.resume);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.backend = j.value("backend", cfg.backend);
        cfg.script_path = j.value("script_path", cfg.script_path);
        cfg.base_url = j.value("base_url", cfg.base_url);
        cfg.model = j.value("model", cfg.model);
        cfg.embedding_model = j.value("embedding_model", cfg.embedding_model);
        cfg.requests_per_min = j.value("requests_per_min", cfg.requests_per_min);
        cfg.tokens_per_min = j.value("tokens_per_min", cfg.tokens_per_min);
        cfg.retry_max_attempts = j.value("retry_max_attempts", cfg.retry_max_attempts);
        cfg.template_dir = j.value("template_dir", cfg.template_dir);
        cfg.prices_path = j.value("prices_path", cfg.prices_path);
        cfg.bootstrap_resamples = j.value("bootstrap_resamples", cfg.bootstrap_resamples);
        cfg.bootstrap_sample_size = j.value("bootstrap_sample_size", cfg.bootstrap_sample_size);
        cfg.align_mode = j.value("align_mode", cfg.align_mode);
        cfg.align_threshold = j.value("align_threshold", cfg.align_threshold);
        cfg.iou_threshold = j.value("iou_threshold", cfg.iou_threshold);
        cfg.per_label = j.value("per_label", cfg.per_label);
        return cfg;
    }

    static RunConfig load(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open config file: " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InputError("config file " + path.string() + " is not valid JSON: " + e.what());
        }
        return from_json(j);
    }

    summarize::BudgetSchedule budgets() const {
        summarize::BudgetSchedule b;
        b.context_window = window;
        b.chunk_size = chunk_size;
        b.final_budget = summary_budget;
        b.level_overrides = level_budgets;
        b.max_regenerations = max_regenerations;
        b.words_per_token = words_per_token;
        b.output_margin = output_margin;
        return b;
    }

    summarize::EngineOptions engine_options() const {
        summarize::EngineOptions opts;
        opts.postprocess = summarize::postprocess_mode_from_string(postprocess);
        opts.parallelism = parallelism;
        opts.prior_context_count = prior_context_count;
        opts.simple_prompts = simple_prompts;
        opts.summarize_temperature = summarize_temperature;
        opts.compress_temperature = compress_temperature;
        return opts;
    }
};

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

inline std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open input file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_text_file(const fs::path& path, std::string_view content) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write file: " + path.string());
    out << content;
}

inline void write_json_file(const fs::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path.string());
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("file " + path.string() + " is not valid JSON: " + e.what());
    }
}

inline std::shared_ptr<llm::CompletionBackend> make_backend(const RunConfig& cfg) {
    if (cfg.backend == "scripted") {
        if (!cfg.script_path.empty())
            return llm::ScriptedBackend::from_json(read_json_file(cfg.script_path));
        llm::ScriptedBackend::Options options;
        options.context_window = cfg.window;
        return std::make_shared<llm::ScriptedBackend>(options);
    }
    if (cfg.backend == "http") {
        llm::HttpBackend::Config http;
        http.base_url = cfg.base_url;
        if (http.base_url.empty())
            if (const char* env = std::getenv("LONGSUM_BASE_URL")) http.base_url = env;
        if (const char* key = std::getenv("LONGSUM_API_KEY")) http.api_key = key;
        http.model = cfg.model;
        http.embedding_model = cfg.embedding_model;
        http.context_window = cfg.window;
        return std::make_shared<llm::HttpBackend>(std::move(http));
    }
    throw ConfigError("unknown backend kind: " + cfg.backend);
}

inline llm::LlmClient make_client(const RunConfig& cfg, const fs::path& output_dir) {
    llm::ClientOptions options;
    options.retry.max_attempts = cfg.retry_max_attempts;
    options.retry.seed = cfg.seed ^ 0x5eedf00dULL;
    options.requests_per_min = cfg.requests_per_min;
    options.tokens_per_min = cfg.tokens_per_min;
    options.sleep_on_retry = cfg.backend != "scripted";
    auto transcript = std::make_shared<llm::TranscriptLog>(output_dir / "transcript.jsonl");
    return llm::LlmClient(make_backend(cfg), options, nullptr, std::move(transcript));
}

inline prompts::PromptLibrary load_templates(const RunConfig& cfg) {
    const fs::path dir =
        cfg.template_dir.empty() ? prompts::default_template_dir() : fs::path(cfg.template_dir);
    return prompts::PromptLibrary::load(dir);
}

/// Everything that must agree between a checkpoint and the run resuming it.
inline nlohmann::json run_fingerprint(const RunConfig& cfg, std::string_view input_text) {
    return nlohmann::json{{"strategy", cfg.strategy},
                          {"chunk_size", cfg.chunk_size},
                          {"window", cfg.window},
                          {"summary_budget", cfg.summary_budget},
                          {"level_budgets", cfg.to_json().at("level_budgets")},
                          {"max_regenerations", cfg.max_regenerations},
                          {"words_per_token", cfg.words_per_token},
                          {"output_margin", cfg.output_margin},
                          {"postprocess", cfg.postprocess},
                          {"prior_context_count", cfg.prior_context_count},
                          {"simple_prompts", cfg.simple_prompts},
                          {"backend", cfg.backend},
                          {"input_hash", text::fnv1a64(input_text)}};
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

/// Writes chunk_plan.json; returns the plan.
inline chunking::ChunkPlan cmd_chunk(const RunConfig& cfg) {
    if (cfg.input_path.empty()) throw ConfigError("chunk requires an input file");
    const std::string document = read_text_file(cfg.input_path);
    if (document.empty()) throw InputError("input document is empty: " + cfg.input_path);
    text::WordTokenCounter counter;
    auto plan = chunking::chunk_document(document, cfg.chunk_size, counter);
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    write_json_file(out_dir / "chunk_plan.json", plan.to_json());
    write_json_file(out_dir / "resolved_config.json", cfg.to_json());
    return plan;
}

struct SummarizeOutputs {
    fs::path final_summary;
    fs::path state;
    fs::path transcript;
    fs::path ledger;
    std::string summary_text;
};

/// Chunk, run the configured strategy, and persist all artifacts. With
/// `resume`, completed steps are reloaded from the checkpoint instead of
/// being re-generated.
inline SummarizeOutputs cmd_summarize(const RunConfig& cfg) {
    cfg.budgets().validate();  // reject bad budgets before any backend exists
    if (cfg.strategy != "hier" && cfg.strategy != "inc")
        throw ConfigError("strategy must be 'hier' or 'inc', got: " + cfg.strategy);
    if (cfg.input_path.empty()) throw ConfigError("summarize requires an input file");

    const std::string document = read_text_file(cfg.input_path);
    if (document.empty()) throw InputError("input document is empty: " + cfg.input_path);

    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);

    text::WordTokenCounter counter;
    auto plan = chunking::chunk_document(document, cfg.chunk_size, counter);
    write_json_file(out_dir / "chunk_plan.json", plan.to_json());

    auto templates = load_templates(cfg);
    auto client = make_client(cfg, out_dir);
    auto options = cfg.engine_options();
    options.checkpoint = summarize::Checkpoint::open(
        out_dir / "checkpoint.json", run_fingerprint(cfg, document), cfg.resume);

    SummarizeOutputs outputs;
    outputs.final_summary = out_dir / "final_summary.txt";
    outputs.transcript = out_dir / "transcript.jsonl";
    outputs.ledger = out_dir / "ledger.json";

    if (cfg.strategy == "hier") {
        auto tree = summarize::hierarchical_merge(plan, cfg.budgets(), client, templates, options);
        outputs.state = out_dir / "summary_tree.json";
        write_json_file(outputs.state, tree.to_json());
        outputs.summary_text = tree.final_summary;
    } else {
        auto state = summarize::incremental_update(plan, cfg.budgets(), client, templates, options);
        outputs.state = out_dir / "incremental_state.json";
        write_json_file(outputs.state, state.to_json());
        outputs.summary_text = state.global_summary;
    }

    write_text_file(outputs.final_summary, outputs.summary_text + "\n");
    write_json_file(outputs.ledger, client.ledger().to_json());
    write_json_file(out_dir / "resolved_config.json", cfg.to_json());
    return outputs;
}

struct ScoreOutputs {
    std::vector<fs::path> reports;
    fs::path aggregate;
    double system_score = 0.0;
};

/// Score one or more summaries. `human_mode` ingests annotation JSON files
/// offline (zero backend calls); otherwise each summary text file is
/// annotated sentence-by-sentence through the backend.
inline ScoreOutputs cmd_score(const RunConfig& cfg, const std::vector<fs::path>& inputs,
                              bool human_mode = false) {
    if (inputs.empty()) throw InputError("score requires at least one summary input");
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);

    ScoreOutputs outputs;
    std::vector<double> scores;
    std::vector<score::ScoreReport> reports;

    if (human_mode) {
        for (const auto& path : inputs) {
            const auto set = score::HumanAnnotationSet::from_json(read_json_file(path));
            const auto collapsed = score::booookscore_from_human(set);
            score::ScoreReport report;
            report.summary_id = path.stem().string();
            report.summary_text = set.summary;
            report.sentence_spans = text::split_sentences(set.summary);
            report.n_sentences = collapsed.n_units;
            report.booookscore = collapsed.score;
            for (auto t : score::kAllErrorTypes) report.type_dist[t] = 0.0;
            std::size_t total_units = collapsed.n_units;
            std::map<score::ErrorType, std::size_t> counts;
            for (const auto& unit : set.units)
                for (const auto& label : unit.types)
                    if (auto t = score::parse_error_type(label)) ++counts[*t];
            for (const auto& [t, c] : counts)
                report.type_dist[t] = static_cast<double>(c) / static_cast<double>(total_units);
            reports.push_back(std::move(report));
        }
    } else {
        auto templates = load_templates(cfg);
        auto client = make_client(cfg, out_dir);
        score::AnnotateOptions ann_options;
        ann_options.temperature = cfg.eval_temperature;
        for (const auto& path : inputs) {
            const std::string summary = read_text_file(path);
            if (summary.empty()) throw InputError("summary file is empty: " + path.string());
            auto annotations = score::annotate_summary(summary, client, templates, ann_options);
            auto report = score::make_report(path.stem().string(), std::move(annotations));
            report.summary_text = summary;
            report.sentence_spans = text::split_sentences(summary);
            reports.push_back(std::move(report));
        }
        write_json_file(out_dir / "ledger.json", client.ledger().to_json());
    }

    for (auto& report : reports) {
        scores.push_back(report.booookscore);
        const fs::path report_path = out_dir / (report.summary_id + ".report.json");
        write_json_file(report_path, report.to_json());
        write_text_file(out_dir / (report.summary_id + ".report.md"), report.to_markdown());
        outputs.reports.push_back(report_path);
    }

    outputs.system_score = score::system_score(scores);
    const auto boot = score::bootstrap(scores, cfg.bootstrap_resamples, cfg.bootstrap_sample_size,
                                       cfg.seed == 0 ? 17 : cfg.seed);
    nlohmann::json aggregate{{"schema_version", 1},
                             {"n_summaries", scores.size()},
                             {"system_score", outputs.system_score},
                             {"per_summary", scores},
                             {"bootstrap",
                              {{"n_resamples", boot.n_resamples},
                               {"sample_size", boot.sample_size},
                               {"mean", boot.mean},
                               {"std", boot.stddev}}}};
    if (!human_mode) {
        // Per-system error rates over all sentences of all summaries.
        std::vector<std::vector<score::SentenceAnnotation>> all_annotations;
        for (const auto& report : reports) all_annotations.push_back(report.annotations);
        nlohmann::json dist;
        for (const auto& [t, rate] : score::type_distribution(all_annotations))
            dist[score::to_string(t)] = rate;
        aggregate["type_distribution"] = std::move(dist);
    }
    outputs.aggregate = out_dir / "aggregate.json";
    write_json_file(outputs.aggregate, aggregate);
    {
        std::ostringstream md;
        md << "# System coherence report\n\n- Summaries: " << scores.size()
           << "\n- System score: " << outputs.system_score << "\n- Bootstrap: mean " << boot.mean
           << ", std " << boot.stddev << " (" << boot.n_resamples << " resamples of size "
           << boot.sample_size << ")\n";
        write_text_file(out_dir / "aggregate.md", md.str());
    }
    write_json_file(out_dir / "resolved_config.json", cfg.to_json());
    return outputs;
}

/// Validation-verdict ingestion: precision = (agree + partial) / total.
inline double cmd_score_precision(const fs::path& verdicts_path) {
    const auto j = read_json_file(verdicts_path);
    std::vector<std::string> verdicts;
    for (const auto& v : j.at("verdicts")) verdicts.push_back(v.get<std::string>());
    return score::annotation_precision(verdicts);
}

/// Length + trigram statistics for a summary against its source, with
/// optional ROUGE-L against a reference summary.
inline nlohmann::json cmd_stats(const RunConfig& cfg, const fs::path& summary_path,
                                const fs::path& source_path,
                                const std::optional<fs::path>& reference_path = std::nullopt) {
    const std::string summary = read_text_file(summary_path);
    const std::string source = read_text_file(source_path);
    if (summary.empty()) throw InputError("summary file is empty: " + summary_path.string());
    if (source.empty()) throw InputError("source file is empty: " + source_path.string());

    text::WordTokenCounter counter;
    nlohmann::json stats{{"schema_version", 1},
                         {"summary", summary_path.string()},
                         {"source", source_path.string()},
                         {"token_length", counter.count(summary)},
                         {"novel_trigram_pct", text::novel_trigram_pct(summary, source, counter)},
                         {"repeated_trigram_pct", text::repeated_trigram_pct(summary, counter)},
                         {"trigram_lowercase", false},
                         {"trigram_strip_punctuation", false},
                         {"rouge_tokenization", "lowercase, punctuation stripped"}};
    if (reference_path) {
        const std::string reference = read_text_file(*reference_path);
        if (reference.empty())
            throw InputError("reference file is empty: " + reference_path->string());
        stats["rouge_l"] = text::rouge_l(summary, reference);
    }
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    write_json_file(out_dir / "stats.json", stats);
    write_json_file(out_dir / "resolved_config.json", cfg.to_json());
    return stats;
}

/// Align model vs human annotation files; with per_label set, aligns each
/// error type separately after filtering both sets to it.
inline nlohmann::json cmd_align(const RunConfig& cfg, const fs::path& model_path,
                                const fs::path& human_path) {
    const auto model_set = align::instances_from_json(read_json_file(model_path));
    const auto human_set = align::instances_from_json(read_json_file(human_path));
    const auto mode = align::match_mode_from_string(cfg.align_mode);
    const double threshold =
        mode == align::MatchMode::span_overlap ? cfg.iou_threshold : cfg.align_threshold;

    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    auto client = make_client(cfg, out_dir);

    nlohmann::json result;
    if (cfg.per_label) {
        nlohmann::json rows = nlohmann::json::array();
        for (auto label : score::kAllErrorTypes) {
            std::vector<align::AnnotationInstance> model_filtered, human_filtered;
            for (const auto& m : model_set)
                if (m.error_type == label) model_filtered.push_back(m);
            for (const auto& h : human_set)
                if (h.error_type == label) human_filtered.push_back(h);
            nlohmann::json row{{"label", score::to_string(label)},
                               {"model_instances", model_filtered.size()},
                               {"human_instances", human_filtered.size()}};
            if (model_filtered.empty() || human_filtered.empty()) {
                row["skipped"] = "one side has no instances of this label";
            } else {
                const auto aligned =
                    align::align(model_filtered, human_filtered, mode, threshold, client);
                row["precision"] = aligned.precision;
                row["recall"] = aligned.recall;
            }
            rows.push_back(std::move(row));
        }
        result = nlohmann::json{{"schema_version", 1}, {"per_label", true}, {"rows", rows}};
    } else {
        result = align::align(model_set, human_set, mode, threshold, client).to_json();
    }
    write_json_file(out_dir / "alignment.json", result);
    write_json_file(out_dir / "resolved_config.json", cfg.to_json());
    return result;
}

/// Cost a persisted ledger against a price table.
inline nlohmann::json cmd_cost(const RunConfig& cfg, const fs::path& ledger_path) {
    if (cfg.prices_path.empty()) throw ConfigError("cost requires a price table (--prices)");
    const auto ledger = llm::UsageLedger::from_json(read_json_file(ledger_path));
    const auto prices = llm::PriceTable::load(cfg.prices_path);

    std::map<std::string, std::pair<std::size_t, std::size_t>> per_backend;
    for (const auto& r : ledger.records()) {
        per_backend[r.backend].first += r.prompt_tokens;
        per_backend[r.backend].second += r.completion_tokens;
    }
    nlohmann::json breakdown;
    for (const auto& [backend, tokens] : per_backend) {
        const auto& price = prices.get(backend);
        breakdown[backend] = {
            {"prompt_tokens", tokens.first},
            {"completion_tokens", tokens.second},
            {"usd", (static_cast<double>(tokens.first) * price.prompt_per_1k +
                     static_cast<double>(tokens.second) * price.completion_per_1k) /
                        1000.0}};
    }
    nlohmann::json result{{"schema_version", 1},
                          {"total_usd", llm::estimate_cost(ledger, prices)},
                          {"breakdown", std::move(breakdown)}};
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    write_json_file(out_dir / "cost.json", result);
    write_json_file(out_dir / "resolved_config.json", cfg.to_json());
    return result;
}

/// Maps exceptions to the documented exit codes, emitting machine-readable
/// error JSON on stderr.
template <typename Fn>
int run_guarded(Fn&& fn) {
    try {
        fn();
        return 0;
    } catch (const Error& e) {
        std::cerr << nlohmann::json{{"error",
                                     {{"category", to_string(e.category())},
                                      {"message", e.what()},
                                      {"exit_code", e.exit_code()}}}}
                         .dump()
                  << std::endl;
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error",
                                     {{"category", "internal"},
                                      {"message", e.what()},
                                      {"exit_code", 1}}}}
                         .dump()
                  << std::endl;
        return 1;
    }
}

}  // namespace longsum::cli
