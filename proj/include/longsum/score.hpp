#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longsum/errors.hpp"
#include "longsum/llm.hpp"
#include "longsum/prompts.hpp"
#include "longsum/text.hpp"

namespace longsum::score {

/// The closed 8-type coherence error taxonomy.
enum class ErrorType {
    entity_omission,
    event_omission,
    causal_omission,
    salience,
    discontinuity,
    duplication,
    inconsistency,
    language,
};

inline constexpr std::array<ErrorType, 8> kAllErrorTypes = {
    ErrorType::entity_omission, ErrorType::event_omission, ErrorType::causal_omission,
    ErrorType::salience,        ErrorType::discontinuity,  ErrorType::duplication,
    ErrorType::inconsistency,   ErrorType::language,
};

inline constexpr const char* to_string(ErrorType t) {
    switch (t) {
        case ErrorType::entity_omission: return "entity omission";
        case ErrorType::event_omission: return "event omission";
        case ErrorType::causal_omission: return "causal omission";
        case ErrorType::salience: return "salience";
        case ErrorType::discontinuity: return "discontinuity";
        case ErrorType::duplication: return "duplication";
        case ErrorType::inconsistency: return "inconsistency";
        case ErrorType::language: return "language";
    }
    return "unknown";
}

namespace detail {

// Lowercase, collapse runs of whitespace/hyphens/underscores to single spaces.
inline std::string normalize_label(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char raw : s) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isspace(c) || raw == '-' || raw == '_') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && text::is_ascii_space(s[b])) ++b;
    while (e > b && text::is_ascii_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline bool contains_no_confusion(std::string_view s) {
    return normalize_label(s).find("no confusion") != std::string::npos;
}

}  // namespace detail

/// Case-insensitive match with whitespace/hyphen normalization.
inline std::optional<ErrorType> parse_error_type(std::string_view label) {
    const std::string normalized = detail::normalize_label(label);
    for (ErrorType t : kAllErrorTypes)
        if (normalized == to_string(t)) return t;
    return std::nullopt;
}

enum class Verdict { no_confusion, confused };

/// Per-sentence judge verdict. For well-formed responses, confused implies at
/// least one question and one type; no-confusion implies both empty. Responses
/// that violate that pairing are kept but flagged with parse_warning.
struct SentenceAnnotation {
    std::size_t sentence_index = 0;
    Verdict verdict = Verdict::no_confusion;
    std::vector<std::string> questions;
    std::set<ErrorType> types;
    std::string raw_response;
    bool parse_warning = false;  // unknown labels, contradictory verdicts, or reask exhausted
    bool parse_failed = false;   // response matched neither expected shape
    std::vector<std::string> unknown_types;

    nlohmann::json to_json() const {
        nlohmann::json types_json = nlohmann::json::array();
        for (ErrorType t : types) types_json.push_back(to_string(t));
        return nlohmann::json{{"sentence_index", sentence_index},
                              {"verdict", verdict == Verdict::no_confusion ? "no confusion" : "confused"},
                              {"questions", questions},
                              {"types", std::move(types_json)},
                              {"raw_response", raw_response},
                              {"parse_warning", parse_warning},
                              {"parse_failed", parse_failed},
                              {"unknown_types", unknown_types}};
    }
};

/// Render an annotation back into the judge's response format.
inline std::string format_response(const SentenceAnnotation& annotation) {
    if (annotation.verdict == Verdict::no_confusion)
        return "Questions: no confusion\nTypes: no confusion";
    std::string questions;
    for (const auto& q : annotation.questions) {
        if (!questions.empty()) questions += " ";
        questions += q;
    }
    std::string types;
    for (ErrorType t : annotation.types) {
        if (!types.empty()) types += ", ";
        types += to_string(t);
    }
    return "Questions: " + questions + "\nTypes: " + types;
}

/// Parse a "Questions: ...\nTypes: ..." response. Never throws; shape
/// violations set parse_failed (caller may re-ask) or parse_warning.
inline SentenceAnnotation parse_response(std::string_view response, std::size_t sentence_index = 0) {
    SentenceAnnotation ann;
    ann.sentence_index = sentence_index;
    ann.raw_response = std::string(response);

    std::optional<std::string> questions_text;
    std::optional<std::string> types_text;
    std::istringstream lines{std::string(response)};
    std::string line;
    std::string* active = nullptr;
    while (std::getline(lines, line)) {
        const std::string lowered = detail::normalize_label(line.substr(0, 12));
        if (lowered.rfind("questions:", 0) == 0) {
            questions_text = detail::trim(line.substr(line.find(':') + 1));
            active = &*questions_text;
        } else if (lowered.rfind("types:", 0) == 0) {
            types_text = detail::trim(line.substr(line.find(':') + 1));
            active = &*types_text;
        } else if (active != nullptr && !detail::trim(line).empty()) {
            *active += " " + detail::trim(line);  // continuation line
        }
    }
    if (!questions_text || !types_text) {
        ann.parse_failed = true;
        ann.parse_warning = true;
        return ann;
    }

    const bool questions_clear = detail::contains_no_confusion(*questions_text);
    const bool types_clear = detail::contains_no_confusion(*types_text);
    if (questions_clear && types_clear) {
        ann.verdict = Verdict::no_confusion;
        return ann;
    }

    ann.verdict = Verdict::confused;
    if (!questions_clear) {
        // Split on '?' boundaries, keeping the mark.
        std::string current;
        for (char c : *questions_text) {
            current.push_back(c);
            if (c == '?') {
                const std::string q = detail::trim(current);
                if (!q.empty()) ann.questions.push_back(q);
                current.clear();
            }
        }
        const std::string rest = detail::trim(current);
        if (!rest.empty()) ann.questions.push_back(rest);
    }
    if (!types_clear) {
        std::string item;
        std::istringstream type_stream(*types_text);
        while (std::getline(type_stream, item, ',')) {
            const std::string label = detail::trim(item);
            if (label.empty()) continue;
            if (auto t = parse_error_type(label)) {
                ann.types.insert(*t);
            } else {
                ann.unknown_types.push_back(label);
                ann.parse_warning = true;
            }
        }
    }
    // Contradictory pairings ("no confusion" on one line only) stay confused.
    if (questions_clear || types_clear || ann.questions.empty() ||
        (ann.types.empty() && ann.unknown_types.empty()))
        ann.parse_warning = true;
    return ann;
}

struct AnnotateOptions {
    double temperature = 0.0;
    int reask_on_parse_failure = 1;
};

/// One judge call per summary sentence: (eval template, full summary, target
/// sentence). Unparseable responses are re-asked once, then conservatively
/// recorded as no-confusion with a warning flag.
inline std::vector<SentenceAnnotation> annotate_summary(const std::string& summary,
                                                        llm::LlmClient& client,
                                                        const prompts::PromptLibrary& templates,
                                                        const AnnotateOptions& options = {}) {
    const auto spans = text::split_sentences(summary);
    if (spans.empty()) throw InputError("summary has no sentences to annotate");

    std::vector<SentenceAnnotation> annotations;
    annotations.reserve(spans.size());
    for (const auto& span : spans) {
        const std::string sentence(summary.substr(span.start, span.end - span.start));
        const std::string prompt =
            templates.fill(prompts::TemplateId::booook_eval, {summary, sentence});
        const std::size_t window = client.backend().context_window();
        const std::size_t prompt_tokens = client.backend().counter().count(prompt);
        if (prompt_tokens >= window)
            throw BudgetError("evaluation prompt for sentence " + std::to_string(span.index) +
                              " does not fit the context window");
        llm::GenerationRequest request{prompt, options.temperature,
                                       std::min<std::size_t>(window - prompt_tokens, 512), 1.0};
        llm::CallMeta meta{"eval:sentence:" + std::to_string(span.index), 0};

        SentenceAnnotation ann;
        int attempts_left = 1 + std::max(0, options.reask_on_parse_failure);
        while (attempts_left-- > 0) {
            std::string response;
            try {
                response = client.generate(request, meta).text;
            } catch (const Error& e) {
                throw BackendError(std::string(e.what()) + " (annotating sentence " +
                                   std::to_string(span.index) + ")");
            }
            ann = parse_response(response, span.index);
            if (!ann.parse_failed) break;
        }
        if (ann.parse_failed) {
            // Terminal fallback: count as no-confusion but keep the flags.
            ann.verdict = Verdict::no_confusion;
            ann.questions.clear();
            ann.types.clear();
        }
        annotations.push_back(std::move(ann));
    }
    return annotations;
}

/// Fraction of sentences judged free of coherence errors (exact rational k/n).
inline double compute_booookscore(std::span<const SentenceAnnotation> annotations) {
    if (annotations.empty())
        throw InputError("score is undefined for an empty annotation list");
    std::size_t clear = 0;
    for (const auto& a : annotations)
        if (a.verdict == Verdict::no_confusion) ++clear;
    return static_cast<double>(clear) / static_cast<double>(annotations.size());
}

/// Occurrences of each error type divided by the total sentence count.
/// A sentence with multiple types increments each of them.
inline std::map<ErrorType, double> type_distribution(
    std::span<const std::vector<SentenceAnnotation>> annotation_sets) {
    std::map<ErrorType, std::size_t> counts;
    for (ErrorType t : kAllErrorTypes) counts[t] = 0;
    std::size_t total_sentences = 0;
    for (const auto& set : annotation_sets) {
        total_sentences += set.size();
        for (const auto& a : set)
            for (ErrorType t : a.types) ++counts[t];
    }
    std::map<ErrorType, double> rates;
    for (ErrorType t : kAllErrorTypes)
        rates[t] = total_sentences == 0
                       ? 0.0
                       : static_cast<double>(counts[t]) / static_cast<double>(total_sentences);
    return rates;
}

struct BootstrapStats {
    std::size_t n_resamples = 0;
    std::size_t sample_size = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Resample `sample_size` scores with replacement `n_resamples` times using a
/// seeded generator; stddev is the (population) standard deviation of the
/// resample means.
inline BootstrapStats bootstrap(std::span<const double> scores, std::size_t n_resamples,
                                std::size_t sample_size, std::uint64_t seed) {
    if (scores.empty()) throw InputError("cannot bootstrap an empty score list");
    if (n_resamples < 1) throw ConfigError("n_resamples must be at least 1");
    if (sample_size < 1) throw ConfigError("sample_size must be at least 1");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
    std::vector<double> means;
    means.reserve(n_resamples);
    for (std::size_t r = 0; r < n_resamples; ++r) {
        double sum = 0.0;
        for (std::size_t s = 0; s < sample_size; ++s) sum += scores[pick(rng)];
        means.push_back(sum / static_cast<double>(sample_size));
    }
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) /
                        static_cast<double>(means.size());
    const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
    if (*lo == *hi) return BootstrapStats{n_resamples, sample_size, *lo, 0.0};
    double variance = 0.0;
    for (double m : means) variance += (m - mean) * (m - mean);
    variance /= static_cast<double>(means.size());
    return BootstrapStats{n_resamples, sample_size, mean, std::sqrt(variance)};
}

struct ScoreReport {
    std::string summary_id;
    std::string summary_text;
    std::vector<text::SentenceSpan> sentence_spans;
    std::size_t n_sentences = 0;
    double booookscore = 0.0;
    std::vector<SentenceAnnotation> annotations;
    std::map<ErrorType, double> type_dist;
    std::optional<BootstrapStats> bootstrap_stats;
    double parse_failure_rate = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json annotations_json = nlohmann::json::array();
        for (const auto& a : annotations) annotations_json.push_back(a.to_json());
        nlohmann::json dist;
        for (const auto& [t, rate] : type_dist) dist[to_string(t)] = rate;
        nlohmann::json spans_json = nlohmann::json::array();
        for (const auto& s : sentence_spans)
            spans_json.push_back({{"start", s.start}, {"end", s.end}, {"index", s.index}});
        nlohmann::json j{{"schema_version", 1},
                         {"summary_id", summary_id},
                         {"summary", summary_text},
                         {"sentence_spans", std::move(spans_json)},
                         {"n_sentences", n_sentences},
                         {"booookscore", booookscore},
                         {"annotations", std::move(annotations_json)},
                         {"type_distribution", std::move(dist)},
                         {"parse_failure_rate", parse_failure_rate}};
        if (bootstrap_stats) {
            j["bootstrap"] = {{"n_resamples", bootstrap_stats->n_resamples},
                              {"sample_size", bootstrap_stats->sample_size},
                              {"mean", bootstrap_stats->mean},
                              {"std", bootstrap_stats->stddev}};
        }
        return j;
    }

    std::string to_markdown() const {
        std::ostringstream out;
        out << "# Coherence report: " << summary_id << "\n\n";
        out << "- Score: " << booookscore << " (" << n_sentences << " sentences)\n";
        if (parse_failure_rate > 0) out << "- Parse-failure rate: " << parse_failure_rate << "\n";
        out << "\n| Error type | Rate per sentence |\n|---|---|\n";
        for (const auto& [t, rate] : type_dist) out << "| " << to_string(t) << " | " << rate << " |\n";
        if (bootstrap_stats) {
            out << "\nBootstrap: mean " << bootstrap_stats->mean << ", std "
                << bootstrap_stats->stddev << " (" << bootstrap_stats->n_resamples
                << " resamples of size " << bootstrap_stats->sample_size << ")\n";
        }
        return out.str();
    }
};

inline ScoreReport make_report(std::string summary_id, std::vector<SentenceAnnotation> annotations) {
    ScoreReport report;
    report.summary_id = std::move(summary_id);
    report.n_sentences = annotations.size();
    report.booookscore = compute_booookscore(annotations);
    std::size_t failures = 0;
    for (const auto& a : annotations)
        if (a.parse_failed) ++failures;
    report.parse_failure_rate =
        annotations.empty() ? 0.0
                            : static_cast<double>(failures) / static_cast<double>(annotations.size());
    const std::vector<std::vector<SentenceAnnotation>> sets{annotations};
    report.type_dist = type_distribution(sets);
    report.annotations = std::move(annotations);
    return report;
}

/// Unweighted mean score across summaries.
inline double system_score(std::span<const double> scores) {
    if (scores.empty()) throw InputError("system score requires at least one report");
    return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

// ---------------------------------------------------------------------------
// Human-annotation ingestion
// ---------------------------------------------------------------------------

/// One human-marked unit: a character span with questions and type labels.
/// Units sharing a relation_id describe the same underlying issue.
struct HumanUnit {
    std::size_t span_start = 0;
    std::size_t span_end = 0;
    std::vector<std::string> questions;
    std::vector<std::string> types;
    std::optional<int> relation_id;
};

struct HumanAnnotationSet {
    std::string summary;
    std::vector<HumanUnit> units;

    static HumanAnnotationSet from_json(const nlohmann::json& j) {
        HumanAnnotationSet set;
        set.summary = j.at("summary").get<std::string>();
        for (const auto& u : j.at("units")) {
            HumanUnit unit;
            unit.span_start = u.at("span_start").get<std::size_t>();
            unit.span_end = u.at("span_end").get<std::size_t>();
            if (u.contains("questions")) unit.questions = u.at("questions").get<std::vector<std::string>>();
            if (u.contains("types")) unit.types = u.at("types").get<std::vector<std::string>>();
            if (u.contains("relation_id") && !u.at("relation_id").is_null())
                unit.relation_id = u.at("relation_id").get<int>();
            set.units.push_back(std::move(unit));
        }
        return set;
    }
};

struct CollapsedScore {
    std::size_t n_units = 0;
    std::size_t confused_units = 0;
    double score = 0.0;
};

/// Score from human annotations. Spans covering multiple consecutive
/// sentences, and spans linked by a relation, collapse to single units of
/// confusion; untouched sentences count as clear units.
inline CollapsedScore booookscore_from_human(const HumanAnnotationSet& set,
                                             const text::SentenceSplitOptions& split_options = {}) {
    const auto spans = text::split_sentences(set.summary, split_options);
    if (spans.empty()) throw InputError("human annotation set has an empty summary");

    // Union-find over sentence indices.
    std::vector<std::size_t> parent(spans.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };

    auto sentences_of = [&](const HumanUnit& unit) {
        std::vector<std::size_t> hits;
        for (const auto& s : spans)
            if (unit.span_start < s.end && unit.span_end > s.start) hits.push_back(s.index);
        return hits;
    };

    std::vector<bool> confused(spans.size(), false);
    std::map<int, std::size_t> relation_anchor;
    for (const auto& unit : set.units) {
        const auto hits = sentences_of(unit);
        if (hits.empty())
            throw InputError("annotation span [" + std::to_string(unit.span_start) + ", " +
                             std::to_string(unit.span_end) + ") covers no sentence");
        for (std::size_t s : hits) confused[s] = true;
        for (std::size_t k = 1; k < hits.size(); ++k) unite(hits[0], hits[k]);
        if (unit.relation_id) {
            auto [it, inserted] = relation_anchor.emplace(*unit.relation_id, hits[0]);
            if (!inserted) unite(it->second, hits[0]);
        }
    }

    std::set<std::size_t> all_roots;
    std::set<std::size_t> confused_roots;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const std::size_t root = find(i);
        all_roots.insert(root);
        if (confused[i]) confused_roots.insert(root);
    }

    CollapsedScore result;
    result.n_units = all_roots.size();
    result.confused_units = confused_roots.size();
    result.score = static_cast<double>(result.n_units - result.confused_units) /
                   static_cast<double>(result.n_units);
    return result;
}

/// Validation-task precision: (agree + partial agreement) / total verdicts.
inline double annotation_precision(std::span<const std::string> verdicts) {
    if (verdicts.empty()) throw InputError("no validation verdicts supplied");
    std::size_t accepted = 0;
    for (const auto& v : verdicts) {
        const std::string n = detail::normalize_label(v);
        if (n == "agree" || n == "partial" || n == "partial agreement" || n == "partially agree")
            ++accepted;
        else if (n != "disagree")
            throw InputError("unknown validation verdict: " + v);
    }
    return static_cast<double>(accepted) / static_cast<double>(verdicts.size());
}

}  // namespace longsum::score
