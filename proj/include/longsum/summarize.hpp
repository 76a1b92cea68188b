#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "longsum/chunker.hpp"
#include "longsum/errors.hpp"
#include "longsum/llm.hpp"
#include "longsum/prompts.hpp"
#include "longsum/text.hpp"

namespace longsum::summarize {

/// Token budgets for a run: context window W, chunk size C, final summary
/// budget G_n, and per-level merge budgets G_l.
struct BudgetSchedule {
    std::size_t context_window = 8192;              // W
    std::size_t chunk_size = 2048;                  // C
    std::size_t final_budget = 900;                 // G_n
    std::map<std::size_t, std::size_t> level_overrides;  // level -> G_l
    int max_regenerations = 3;
    double words_per_token = 0.75;
    double output_margin = 1.25;  // reserve above G_l so overshoot is observable

    /// Default schedule: leaves target min(C/2, G_n); all merge levels target G_n.
    std::size_t level_budget(std::size_t level) const {
        auto it = level_overrides.find(level);
        if (it != level_overrides.end()) return it->second;
        if (level == 0) return std::min(chunk_size / 2 > 0 ? chunk_size / 2 : 1, final_budget);
        return final_budget;
    }

    void validate() const {
        if (chunk_size < 1) throw ConfigError("chunk size must be at least 1");
        if (chunk_size >= context_window)
            throw ConfigError("chunk size C must be smaller than context window W");
        if (final_budget < 1 || final_budget > context_window)
            throw ConfigError("final budget G_n must be in [1, W]");
        for (const auto& [level, budget] : level_overrides)
            if (budget < 1 || budget > context_window)
                throw ConfigError("level " + std::to_string(level) + " budget must be in [1, W]");
        if (max_regenerations < 0) throw ConfigError("max_regenerations must be >= 0");
        if (words_per_token <= 0) throw ConfigError("words_per_token must be positive");
        if (output_margin < 1.0) throw ConfigError("output_margin must be >= 1.0");
    }

    std::size_t words(std::size_t tokens) const {
        return prompts::words_for_tokens(tokens, words_per_token);
    }
};

struct SummaryNode {
    std::size_t id = 0;
    std::size_t level = 0;
    std::size_t index = 0;  // position within its level
    std::string text;
    std::size_t token_count = 0;
    std::vector<std::size_t> children;
    bool used_prior_context = false;
    std::optional<std::size_t> chunk_index;  // level-0 nodes only
    int regenerations = 0;
    bool truncated = false;
};

struct SummaryTree {
    std::vector<SummaryNode> nodes;
    std::size_t root_id = 0;
    std::string final_summary;  // root text after optional post-processing
    std::string postprocess = "off";

    const SummaryNode& root() const { return nodes.at(root_id); }

    std::vector<std::size_t> level_sizes() const {
        std::vector<std::size_t> sizes;
        for (const auto& n : nodes) {
            if (n.level >= sizes.size()) sizes.resize(n.level + 1, 0);
            ++sizes[n.level];
        }
        return sizes;
    }

    nlohmann::json to_json() const {
        nlohmann::json nodes_json = nlohmann::json::array();
        for (const auto& n : nodes) {
            nlohmann::json j{{"id", n.id},
                             {"level", n.level},
                             {"index", n.index},
                             {"text", n.text},
                             {"token_count", n.token_count},
                             {"children", n.children},
                             {"used_prior_context", n.used_prior_context},
                             {"regenerations", n.regenerations},
                             {"truncated", n.truncated}};
            if (n.chunk_index) j["chunk_index"] = *n.chunk_index;
            nodes_json.push_back(std::move(j));
        }
        return nlohmann::json{{"schema_version", 1},
                              {"nodes", std::move(nodes_json)},
                              {"root_id", root_id},
                              {"final_summary", final_summary},
                              {"postprocess", postprocess}};
    }
};

enum class StepKind { init, update, compress, postprocess };

inline constexpr const char* to_string(StepKind k) {
    switch (k) {
        case StepKind::init: return "init";
        case StepKind::update: return "update";
        case StepKind::compress: return "compress";
        case StepKind::postprocess: return "postprocess";
    }
    return "unknown";
}

struct IncrementalEvent {
    StepKind kind{};
    std::optional<std::size_t> chunk_index;
    std::size_t input_tokens = 0;   // prompt tokens of the call (0 for offline steps)
    std::size_t output_tokens = 0;  // token count of the resulting summary
    int regenerations = 0;
    bool truncated = false;
};

struct IncrementalState {
    std::string global_summary;
    std::size_t cursor = 0;  // chunks consumed
    std::vector<IncrementalEvent> events;
    bool budget_violation = false;

    nlohmann::json to_json() const {
        nlohmann::json events_json = nlohmann::json::array();
        for (const auto& e : events) {
            nlohmann::json j{{"kind", to_string(e.kind)},
                             {"input_tokens", e.input_tokens},
                             {"output_tokens", e.output_tokens},
                             {"regenerations", e.regenerations},
                             {"truncated", e.truncated}};
            if (e.chunk_index) j["chunk_index"] = *e.chunk_index;
            events_json.push_back(std::move(j));
        }
        return nlohmann::json{{"schema_version", 1},
                              {"global_summary", global_summary},
                              {"cursor", cursor},
                              {"budget_violation", budget_violation},
                              {"events", std::move(events_json)}};
    }
};

enum class PostprocessMode { off, llm, stringmatch };

inline PostprocessMode postprocess_mode_from_string(std::string_view s) {
    if (s == "off") return PostprocessMode::off;
    if (s == "llm") return PostprocessMode::llm;
    if (s == "stringmatch") return PostprocessMode::stringmatch;
    throw ConfigError("unknown postprocess mode: " + std::string(s));
}

inline constexpr const char* to_string(PostprocessMode m) {
    switch (m) {
        case PostprocessMode::off: return "off";
        case PostprocessMode::llm: return "llm";
        case PostprocessMode::stringmatch: return "stringmatch";
    }
    return "off";
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

/// Durable cache of completed generation steps, keyed by node identity.
/// The engine consults it before every backend call, so an interrupted run
/// resumed with the same configuration never re-spends tokens on finished
/// steps. Every put() rewrites the file atomically (tmp + rename).
class Checkpoint {
public:
    static std::shared_ptr<Checkpoint> open(const std::filesystem::path& path,
                                            nlohmann::json fingerprint, bool resume) {
        auto cp = std::make_shared<Checkpoint>();
        cp->path_ = path;
        cp->fingerprint_ = std::move(fingerprint);
        if (resume && std::filesystem::exists(path)) {
            std::ifstream in(path);
            nlohmann::json j;
            in >> j;
            if (j.at("fingerprint") != cp->fingerprint_)
                throw ConfigError("checkpoint at " + path.string() +
                                  " was created with a different configuration; "
                                  "refusing to resume");
            for (auto it = j.at("entries").begin(); it != j.at("entries").end(); ++it)
                cp->entries_[it.key()] = it.value();
        } else {
            cp->write_locked();
        }
        return cp;
    }

    std::optional<nlohmann::json> get(const std::string& key) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return std::make_optional<nlohmann::json>(it->second);
    }

    void put(const std::string& key, nlohmann::json value) {
        std::lock_guard<std::mutex> lock(mutex_);
        entries_[key] = std::move(value);
        write_locked();
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return entries_.size();
    }

private:
    void write_locked() const {
        if (path_.empty()) return;
        nlohmann::json j{{"schema_version", 1}, {"fingerprint", fingerprint_}, {"entries", entries_}};
        const auto tmp = path_.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            out << j.dump();
        }
        std::filesystem::rename(tmp, path_);
    }

    mutable std::mutex mutex_;
    std::filesystem::path path_;
    nlohmann::json fingerprint_;
    std::map<std::string, nlohmann::json> entries_;
};

// ---------------------------------------------------------------------------
// Length enforcement and post-processing
// ---------------------------------------------------------------------------

struct LengthEnforcement {
    std::string text;
    int regenerations = 0;
    bool truncated = false;
};

/// Longest prefix ending at sentence-terminal punctuation that fits `limit`
/// tokens; hard token cut when no terminal punctuation fits.
inline std::string truncate_at_sentence_end(std::string_view text, std::size_t limit,
                                            const text::TokenCounter& counter) {
    const auto spans = text::split_sentences(text);
    std::string best;
    std::string candidate;
    for (const auto& span : spans) {
        if (!candidate.empty()) candidate += " ";
        candidate.append(text.substr(span.start, span.end - span.start));
        if (counter.count(candidate) > limit) break;
        best = candidate;
    }
    if (!best.empty()) return best;
    // No whole sentence fits; keep the first `limit` tokens of the text.
    const auto tokens = counter.tokenize(text);
    if (tokens.empty() || limit == 0) return "";
    const std::size_t keep = std::min<std::size_t>(limit, tokens.size());
    const char* begin = tokens.front().data();
    const char* end = tokens[keep - 1].data() + tokens[keep - 1].size();
    return std::string(begin, end);
}

/// Regenerate until the text fits `limit` tokens; after `max_regenerations`
/// failed attempts the last attempt is truncated at the final sentence
/// boundary and flagged. A text already within the limit costs zero calls.
inline LengthEnforcement enforce_length(std::string initial_text, std::size_t limit,
                                        const std::function<std::string()>& regenerate,
                                        int max_regenerations,
                                        const text::TokenCounter& counter) {
    if (limit < 1) throw ConfigError("length limit must be at least 1 token");
    LengthEnforcement result;
    result.text = std::move(initial_text);
    while (counter.count(result.text) > limit) {
        if (result.regenerations >= max_regenerations) {
            result.text = truncate_at_sentence_end(result.text, limit, counter);
            result.truncated = true;
            break;
        }
        result.text = regenerate();
        ++result.regenerations;
    }
    return result;
}

/// Drop summary sentences copied verbatim from any of the given prompt
/// template bodies. Offline fallback to the LLM artifact-removal pass.
inline std::string strip_prompt_sentences(std::string_view summary,
                                          std::span<const std::string> template_bodies) {
    const auto spans = text::split_sentences(summary);
    std::string out;
    for (const auto& span : spans) {
        const auto sentence = summary.substr(span.start, span.end - span.start);
        bool copied = false;
        for (const auto& body : template_bodies) {
            if (body.find(sentence) != std::string::npos) {
                copied = true;
                break;
            }
        }
        if (copied) continue;
        if (!out.empty()) out += " ";
        out.append(sentence);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Engines
// ---------------------------------------------------------------------------

struct EngineOptions {
    PostprocessMode postprocess = PostprocessMode::off;
    std::size_t parallelism = 1;          // leaf/merge fan-out bound
    std::size_t prior_context_count = 1;  // preceding same-level summaries joined as context
    bool simple_prompts = false;          // use the reduced prompt set for weaker models
    double summarize_temperature = 0.5;
    double compress_temperature = 1.0;
    std::shared_ptr<Checkpoint> checkpoint;
};

namespace detail {

struct StepResult {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t output_tokens = 0;
    int regenerations = 0;
    bool truncated = false;
};

inline StepResult step_from_json(const nlohmann::json& j) {
    StepResult r;
    r.text = j.at("text").get<std::string>();
    r.prompt_tokens = j.at("prompt_tokens").get<std::size_t>();
    r.output_tokens = j.at("output_tokens").get<std::size_t>();
    r.regenerations = j.at("regenerations").get<int>();
    r.truncated = j.at("truncated").get<bool>();
    return r;
}

inline nlohmann::json step_to_json(const StepResult& r) {
    return nlohmann::json{{"text", r.text},
                          {"prompt_tokens", r.prompt_tokens},
                          {"output_tokens", r.output_tokens},
                          {"regenerations", r.regenerations},
                          {"truncated", r.truncated}};
}

/// One budget-checked, length-enforced, checkpointed generation step.
inline StepResult generate_step(llm::LlmClient& client, const BudgetSchedule& budgets,
                                const EngineOptions& options, const std::string& key,
                                const std::string& prompt, std::size_t output_budget,
                                double temperature, bool enforce) {
    if (options.checkpoint) {
        if (auto cached = options.checkpoint->get(key)) return step_from_json(*cached);
    }
    const auto& counter = client.backend().counter();
    const std::size_t prompt_tokens = counter.count(prompt);
    const std::size_t window = budgets.context_window;
    if (output_budget >= window || prompt_tokens >= window - output_budget)
        throw BudgetError("budget infeasible at " + key + ": prompt is " +
                          std::to_string(prompt_tokens) + " tokens but must stay below W - G = " +
                          std::to_string(window) + " - " + std::to_string(output_budget));

    const auto reserve = std::min<std::size_t>(
        window - prompt_tokens,
        static_cast<std::size_t>(
            std::ceil(static_cast<double>(output_budget) * budgets.output_margin)));
    llm::GenerationRequest request{prompt, temperature, reserve, 1.0};
    llm::CallMeta meta{key, window - output_budget};

    auto generate_once = [&]() {
        try {
            return client.generate(request, meta).text;
        } catch (const BudgetError&) {
            throw;
        } catch (const Error& e) {
            throw BackendError(std::string(e.what()) + " (step " + key + ")");
        }
    };

    StepResult result;
    result.prompt_tokens = prompt_tokens;
    std::string first = generate_once();
    if (enforce) {
        auto enforced = enforce_length(std::move(first), output_budget, generate_once,
                                       budgets.max_regenerations, counter);
        result.text = std::move(enforced.text);
        result.regenerations = enforced.regenerations;
        result.truncated = enforced.truncated;
    } else {
        result.text = std::move(first);
    }
    result.output_tokens = counter.count(result.text);
    if (options.checkpoint) options.checkpoint->put(key, step_to_json(result));
    return result;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t parallelism, Fn&& fn) {
    if (n == 0) return;
    if (parallelism <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> workers;
    const std::size_t worker_count = std::min(parallelism, n);
    workers.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) workers.emplace_back(work);
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// LLM artifact-removal pass over a finished summary.
inline std::string remove_artifacts(const std::string& summary, llm::LlmClient& client,
                                    const prompts::PromptLibrary& templates,
                                    const BudgetSchedule& budgets, const EngineOptions& options,
                                    const std::string& key = "postprocess") {
    if (summary.empty()) throw InputError("cannot post-process an empty summary");
    const std::string prompt = templates.fill(prompts::TemplateId::artifact_removal, {summary});
    const std::size_t output_budget =
        std::max<std::size_t>(client.backend().counter().count(summary), 1);
    auto result = detail::generate_step(client, budgets, options, key, prompt, output_budget,
                                        options.summarize_temperature, /*enforce=*/false);
    return result.text;
}

/// Summarize every chunk, then recursively merge consecutive summaries
/// (joining prior same-level context when it fits) until one root remains.
inline SummaryTree hierarchical_merge(const chunking::ChunkPlan& plan,
                                      const BudgetSchedule& budgets, llm::LlmClient& client,
                                      const prompts::PromptLibrary& templates,
                                      const EngineOptions& options = {}) {
    budgets.validate();
    if (plan.chunks.empty()) throw InputError("chunk plan is empty");

    const auto& counter = client.backend().counter();
    const auto leaf_id = options.simple_prompts ? prompts::TemplateId::simple_leaf
                                                : prompts::TemplateId::hier_leaf;
    const auto merge_id = options.simple_prompts ? prompts::TemplateId::simple_merge
                                                 : prompts::TemplateId::hier_merge;
    const auto merge_ctx_id = options.simple_prompts ? prompts::TemplateId::simple_merge_context
                                                     : prompts::TemplateId::hier_merge_context;

    SummaryTree tree;
    tree.postprocess = to_string(options.postprocess);

    // Level 0: summarize each chunk.
    const std::size_t leaf_budget = budgets.level_budget(0);
    const std::string leaf_words = std::to_string(budgets.words(leaf_budget));
    tree.nodes.resize(plan.chunks.size());
    detail::parallel_for(plan.chunks.size(), options.parallelism, [&](std::size_t i) {
        const std::string prompt = templates.fill(leaf_id, {plan.chunks[i].text, leaf_words});
        const std::string key = "hier:0:chunk" + std::to_string(i);
        auto step = detail::generate_step(client, budgets, options, key, prompt, leaf_budget,
                                          options.summarize_temperature, /*enforce=*/true);
        SummaryNode node;
        node.id = i;
        node.level = 0;
        node.index = i;
        node.text = std::move(step.text);
        node.token_count = step.output_tokens;
        node.chunk_index = i;
        node.regenerations = step.regenerations;
        node.truncated = step.truncated;
        tree.nodes[i] = std::move(node);
    });

    std::vector<std::size_t> current;
    current.reserve(plan.chunks.size());
    for (std::size_t i = 0; i < plan.chunks.size(); ++i) current.push_back(i);

    std::size_t level = 0;
    while (current.size() > 1) {
        ++level;
        const std::size_t level_budget = budgets.level_budget(level);
        const std::string level_words = std::to_string(budgets.words(level_budget));

        auto joined_texts = [&](std::size_t first, std::size_t last) {
            std::string joined;
            for (std::size_t k = first; k <= last; ++k) {
                if (!joined.empty()) joined += "\n\n";
                joined += tree.nodes[current[k]].text;
            }
            return joined;
        };
        auto prior_context = [&](std::size_t first) {
            std::string context;
            if (first == 0 || options.prior_context_count == 0) return context;
            const std::size_t from =
                first > options.prior_context_count ? first - options.prior_context_count : 0;
            for (std::size_t k = from; k < first; ++k) {
                if (!context.empty()) context += "\n\n";
                context += tree.nodes[current[k]].text;
            }
            return context;
        };
        auto build_prompt = [&](std::size_t first, std::size_t last, const std::string& context) {
            if (context.empty()) return templates.fill(merge_id, {joined_texts(first, last), level_words});
            return templates.fill(merge_ctx_id, {context, joined_texts(first, last), level_words});
        };
        auto fits = [&](std::size_t first, std::size_t last, const std::string& context) {
            return counter.count(build_prompt(first, last, context)) <
                   budgets.context_window - level_budget;
        };

        // Greedy packing: each merge takes the maximal run of consecutive
        // summaries (plus prior context when it fits) below W - G_l.
        struct Group {
            std::size_t first, last;
            std::string context;
        };
        std::vector<Group> groups;
        std::size_t i = 0;
        while (i < current.size()) {
            std::string context = prior_context(i);
            if (!context.empty() && !fits(i, i, context)) context.clear();  // context omitted
            if (context.empty() && !fits(i, i, context))
                throw BudgetError("budget infeasible at level " + std::to_string(level) +
                                  ": a single summary plus the merge template exceeds W - G_l");
            std::size_t j = i;
            while (j + 1 < current.size() && fits(i, j + 1, context)) ++j;
            groups.push_back(Group{i, j, std::move(context)});
            i = j + 1;
        }
        if (groups.size() >= current.size())
            throw BudgetError("budget infeasible at level " + std::to_string(level) +
                              ": merging cannot reduce the number of summaries");

        const std::size_t base_id = tree.nodes.size();
        tree.nodes.resize(base_id + groups.size());
        std::vector<std::size_t> next_level(groups.size());
        detail::parallel_for(groups.size(), options.parallelism, [&](std::size_t g) {
            const auto& group = groups[g];
            const std::string prompt = build_prompt(group.first, group.last, group.context);
            const std::string key = "hier:" + std::to_string(level) + ":" +
                                    std::to_string(current[group.first]) + "-" +
                                    std::to_string(current[group.last]);
            auto step = detail::generate_step(client, budgets, options, key, prompt, level_budget,
                                              options.summarize_temperature, /*enforce=*/true);
            SummaryNode node;
            node.id = base_id + g;
            node.level = level;
            node.index = g;
            node.text = std::move(step.text);
            node.token_count = step.output_tokens;
            for (std::size_t k = group.first; k <= group.last; ++k)
                node.children.push_back(current[k]);
            node.used_prior_context = !group.context.empty();
            node.regenerations = step.regenerations;
            node.truncated = step.truncated;
            next_level[g] = node.id;
            tree.nodes[node.id] = std::move(node);
        });
        current = std::move(next_level);
    }

    tree.root_id = current.front();
    tree.final_summary = tree.nodes[tree.root_id].text;
    if (options.postprocess == PostprocessMode::llm) {
        tree.final_summary =
            remove_artifacts(tree.final_summary, client, templates, budgets, options, "hier:post");
    } else if (options.postprocess == PostprocessMode::stringmatch) {
        const std::vector<std::string> bodies = {templates.get(leaf_id).body,
                                                 templates.get(merge_id).body,
                                                 templates.get(merge_ctx_id).body};
        tree.final_summary = strip_prompt_sentences(tree.final_summary, bodies);
    }
    return tree;
}

/// Walk chunks in order, updating one global summary; compress it back under
/// G_n whenever an update overshoots. Strictly sequential by definition.
inline IncrementalState incremental_update(const chunking::ChunkPlan& plan,
                                           const BudgetSchedule& budgets, llm::LlmClient& client,
                                           const prompts::PromptLibrary& templates,
                                           const EngineOptions& options = {}) {
    budgets.validate();
    if (plan.chunks.empty()) throw InputError("chunk plan is empty");

    const auto& counter = client.backend().counter();
    const std::size_t final_budget = budgets.final_budget;
    const std::string target_words = std::to_string(budgets.words(final_budget));

    IncrementalState state;
    std::string summary;

    {
        const std::string prompt = templates.fill(
            prompts::TemplateId::inc_initial, {plan.chunks[0].text, target_words, target_words});
        auto step = detail::generate_step(client, budgets, options, "inc:init", prompt,
                                          final_budget, options.summarize_temperature,
                                          /*enforce=*/false);
        summary = std::move(step.text);
        state.events.push_back(
            IncrementalEvent{StepKind::init, 0, step.prompt_tokens, step.output_tokens, 0, false});
    }
    state.cursor = 1;

    for (std::size_t i = 1; i < plan.chunks.size(); ++i) {
        const std::string prompt =
            templates.fill(prompts::TemplateId::inc_update,
                           {plan.chunks[i].text, summary, target_words, target_words});
        auto step = detail::generate_step(client, budgets, options,
                                          "inc:update:" + std::to_string(i), prompt, final_budget,
                                          options.summarize_temperature, /*enforce=*/false);
        summary = std::move(step.text);
        state.events.push_back(IncrementalEvent{StepKind::update, i, step.prompt_tokens,
                                                step.output_tokens, 0, false});

        if (counter.count(summary) > final_budget) {
            const std::string current_words = std::to_string(text::whitespace_word_count(summary));
            const std::string compress_prompt =
                templates.fill(prompts::TemplateId::inc_compress,
                               {summary, current_words, target_words, target_words});
            auto compressed = detail::generate_step(
                client, budgets, options, "inc:compress:" + std::to_string(i), compress_prompt,
                final_budget, options.compress_temperature, /*enforce=*/true);
            summary = std::move(compressed.text);
            state.budget_violation = state.budget_violation || compressed.truncated;
            state.events.push_back(IncrementalEvent{StepKind::compress, i,
                                                    compressed.prompt_tokens,
                                                    compressed.output_tokens,
                                                    compressed.regenerations, compressed.truncated});
        }
        state.cursor = i + 1;
    }

    if (options.postprocess == PostprocessMode::llm) {
        const std::size_t before = counter.count(summary);
        summary = remove_artifacts(summary, client, templates, budgets, options, "inc:post");
        state.events.push_back(IncrementalEvent{StepKind::postprocess, std::nullopt, before,
                                                counter.count(summary), 0, false});
    } else if (options.postprocess == PostprocessMode::stringmatch) {
        const std::vector<std::string> bodies = {
            templates.get(prompts::TemplateId::inc_initial).body,
            templates.get(prompts::TemplateId::inc_update).body,
            templates.get(prompts::TemplateId::inc_compress).body};
        const std::size_t before = counter.count(summary);
        summary = strip_prompt_sentences(summary, bodies);
        state.events.push_back(IncrementalEvent{StepKind::postprocess, std::nullopt, before,
                                                counter.count(summary), 0, false});
    }

    state.global_summary = std::move(summary);
    return state;
}

}  // namespace longsum::summarize
