#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longsum/errors.hpp"
#include "longsum/llm.hpp"
#include "longsum/score.hpp"

namespace longsum::align {

/// One span/question annotation from either the model or the human side.
struct AnnotationInstance {
    std::size_t id = 0;
    std::string span_text;
    std::string question_text;
    std::optional<score::ErrorType> error_type;
    std::string source;  // "model" | "human"
    std::optional<std::size_t> span_start;  // for the span-overlap mode
    std::optional<std::size_t> span_end;

    static AnnotationInstance from_json(const nlohmann::json& j, std::size_t fallback_id) {
        AnnotationInstance inst;
        inst.id = j.value("id", fallback_id);
        inst.span_text = j.value("span_text", std::string{});
        inst.question_text = j.value("question_text", std::string{});
        if (inst.span_text.empty() && inst.question_text.empty())
            throw InputError("annotation instance " + std::to_string(inst.id) +
                             " has neither span nor question text");
        if (j.contains("error_type") && !j.at("error_type").is_null()) {
            const auto label = j.at("error_type").get<std::string>();
            auto parsed = score::parse_error_type(label);
            if (!parsed) throw InputError("unknown error type: " + label);
            inst.error_type = *parsed;
        }
        inst.source = j.value("source", std::string{});
        if (j.contains("span_start")) inst.span_start = j.at("span_start").get<std::size_t>();
        if (j.contains("span_end")) inst.span_end = j.at("span_end").get<std::size_t>();
        return inst;
    }
};

inline std::vector<AnnotationInstance> instances_from_json(const nlohmann::json& j) {
    std::vector<AnnotationInstance> out;
    std::size_t fallback_id = 0;
    for (const auto& item : j) out.push_back(AnnotationInstance::from_json(item, fallback_id++));
    return out;
}

enum class MatchMode { span_question, span_only, question_only, span_overlap };

inline MatchMode match_mode_from_string(std::string_view s) {
    if (s == "span_question") return MatchMode::span_question;
    if (s == "span_only") return MatchMode::span_only;
    if (s == "question_only") return MatchMode::question_only;
    if (s == "span_overlap") return MatchMode::span_overlap;
    throw ConfigError("unknown alignment mode: " + std::string(s));
}

inline constexpr const char* to_string(MatchMode m) {
    switch (m) {
        case MatchMode::span_question: return "span_question";
        case MatchMode::span_only: return "span_only";
        case MatchMode::question_only: return "question_only";
        case MatchMode::span_overlap: return "span_overlap";
    }
    return "unknown";
}

/// dot(u, v) / (|u| |v|); errors on dimension mismatch or zero vectors.
inline double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw InputError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()) + ")");
    if (u.empty()) throw InputError("cosine: empty vectors");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw InputError("cosine: zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline void l2_normalize(std::vector<double>& v) {
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq == 0.0) throw InputError("cannot normalize a zero embedding");
    const double norm = std::sqrt(norm_sq);
    for (double& x : v) x /= norm;
}

/// Per-instance best-match decision (from one side to the other).
struct MatchDecision {
    std::size_t from_id = 0;
    std::size_t to_id = 0;
    double score = 0.0;  // cosine, or IoU in span_overlap mode
    bool matched = false;
};

struct AlignmentResult {
    MatchMode mode = MatchMode::span_question;
    double threshold = 0.68;
    std::vector<MatchDecision> model_to_human;  // drives precision
    std::vector<MatchDecision> human_to_model;  // drives recall
    double precision = 0.0;
    double recall = 0.0;

    nlohmann::json to_json() const {
        auto decisions_json = [](const std::vector<MatchDecision>& ds) {
            nlohmann::json out = nlohmann::json::array();
            for (const auto& d : ds)
                out.push_back({{"from_id", d.from_id},
                               {"to_id", d.to_id},
                               {"score", d.score},
                               {"matched", d.matched}});
            return out;
        };
        return nlohmann::json{{"schema_version", 1},
                              {"mode", to_string(mode)},
                              {"threshold", threshold},
                              {"embeddings_normalized", mode != MatchMode::span_overlap},
                              {"precision", precision},
                              {"recall", recall},
                              {"model_to_human", decisions_json(model_to_human)},
                              {"human_to_model", decisions_json(human_to_model)}};
    }
};

namespace detail {

inline std::string comparison_text(const AnnotationInstance& inst, MatchMode mode) {
    switch (mode) {
        case MatchMode::span_only: return inst.span_text;
        case MatchMode::question_only: return inst.question_text;
        default: {
            std::string joined = inst.span_text;
            if (!joined.empty() && !inst.question_text.empty()) joined += " ";
            joined += inst.question_text;
            return joined;
        }
    }
}

inline double span_iou(const AnnotationInstance& a, const AnnotationInstance& b) {
    if (!a.span_start || !a.span_end || !b.span_start || !b.span_end)
        throw InputError("span_overlap mode requires span_start/span_end on every instance");
    const std::size_t lo = std::max(*a.span_start, *b.span_start);
    const std::size_t hi = std::min(*a.span_end, *b.span_end);
    const std::size_t intersection = hi > lo ? hi - lo : 0;
    const std::size_t total = (*a.span_end - *a.span_start) + (*b.span_end - *b.span_start);
    const std::size_t uni = total - intersection;
    return uni == 0 ? 0.0 : static_cast<double>(intersection) / static_cast<double>(uni);
}

// Best match per `from` instance; ties break toward the lower instance id
// (candidates are scanned in input order and replaced only on strict
// improvement, so the earlier id wins).
inline std::vector<MatchDecision> best_matches(const std::vector<AnnotationInstance>& from,
                                               const std::vector<std::vector<double>>& from_vecs,
                                               const std::vector<AnnotationInstance>& to,
                                               const std::vector<std::vector<double>>& to_vecs,
                                               MatchMode mode, double threshold) {
    std::vector<MatchDecision> decisions;
    decisions.reserve(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
        MatchDecision best;
        best.from_id = from[i].id;
        double best_score = -2.0;
        for (std::size_t j = 0; j < to.size(); ++j) {
            const double s = mode == MatchMode::span_overlap
                                 ? span_iou(from[i], to[j])
                                 : cosine(from_vecs[i], to_vecs[j]);
            if (s > best_score) {
                best_score = s;
                best.to_id = to[j].id;
            }
        }
        best.score = best_score;
        best.matched = best_score > threshold;
        decisions.push_back(best);
    }
    return decisions;
}

}  // namespace detail

/// Greedy best-match alignment between two annotation sets. Each model
/// instance pairs with its highest-scoring human instance and counts as
/// matched iff the score exceeds the threshold; recall mirrors this from the
/// human side. Many-to-one matches are allowed.
inline AlignmentResult align(const std::vector<AnnotationInstance>& model_set,
                             const std::vector<AnnotationInstance>& human_set, MatchMode mode,
                             double threshold, llm::LlmClient& embedder) {
    if (model_set.empty() || human_set.empty())
        throw InputError("alignment requires non-empty model and human sets");
    if (threshold < -1.0 || threshold > 1.0)
        throw ConfigError("alignment threshold must lie in [-1, 1]");

    std::vector<std::vector<double>> model_vecs, human_vecs;
    if (mode != MatchMode::span_overlap) {
        std::vector<std::string> model_texts, human_texts;
        for (const auto& m : model_set) model_texts.push_back(detail::comparison_text(m, mode));
        for (const auto& h : human_set) human_texts.push_back(detail::comparison_text(h, mode));
        model_vecs = embedder.embed(model_texts, llm::CallMeta{"align:model", 0});
        human_vecs = embedder.embed(human_texts, llm::CallMeta{"align:human", 0});
        for (auto& v : model_vecs) l2_normalize(v);
        for (auto& v : human_vecs) l2_normalize(v);
    }

    AlignmentResult result;
    result.mode = mode;
    result.threshold = threshold;
    result.model_to_human =
        detail::best_matches(model_set, model_vecs, human_set, human_vecs, mode, threshold);
    result.human_to_model =
        detail::best_matches(human_set, human_vecs, model_set, model_vecs, mode, threshold);

    const auto matched = [](const std::vector<MatchDecision>& ds) {
        std::size_t count = 0;
        for (const auto& d : ds)
            if (d.matched) ++count;
        return count;
    };
    result.precision = static_cast<double>(matched(result.model_to_human)) /
                       static_cast<double>(model_set.size());
    result.recall = static_cast<double>(matched(result.human_to_model)) /
                    static_cast<double>(human_set.size());
    return result;
}

/// Mean cosine over caller-supplied (model question, human question) pairs.
inline double avg_similarity(const std::vector<std::pair<std::string, std::string>>& pairs,
                             llm::LlmClient& embedder) {
    if (pairs.empty()) throw InputError("avg_similarity requires at least one pair");
    std::vector<std::string> texts;
    texts.reserve(pairs.size() * 2);
    for (const auto& [a, b] : pairs) {
        texts.push_back(a);
        texts.push_back(b);
    }
    const auto vecs = embedder.embed(texts, llm::CallMeta{"align:avg_similarity", 0});
    double total = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) total += cosine(vecs[2 * i], vecs[2 * i + 1]);
    return total / static_cast<double>(pairs.size());
}

}  // namespace longsum::align
