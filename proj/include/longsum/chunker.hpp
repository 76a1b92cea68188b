#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longsum/errors.hpp"
#include "longsum/text.hpp"

namespace longsum::chunking {

/// A contiguous, sentence-aligned slice of the source document.
struct Chunk {
    std::size_t index = 0;
    std::string text;
    std::size_t token_count = 0;
    std::size_t first_sentence = 0;
    std::size_t last_sentence = 0;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    bool oversized = false;  // single sentence longer than the chunk budget
};

struct ChunkPlan {
    std::size_t chunk_size = 0;  // C, in tokens
    std::string counter_name;
    std::vector<Chunk> chunks;
    std::size_t oversized_count = 0;

    nlohmann::json to_json(bool include_text = false) const {
        nlohmann::json chunks_json = nlohmann::json::array();
        for (const auto& c : chunks) {
            nlohmann::json j{{"index", c.index},
                             {"char_start", c.char_start},
                             {"char_end", c.char_end},
                             {"token_count", c.token_count},
                             {"first_sentence", c.first_sentence},
                             {"last_sentence", c.last_sentence},
                             {"oversized", c.oversized}};
            if (include_text) j["text"] = c.text;
            chunks_json.push_back(std::move(j));
        }
        return nlohmann::json{{"schema_version", 1},
                              {"chunk_size", chunk_size},
                              {"counter", counter_name},
                              {"oversized_count", oversized_count},
                              {"chunks", std::move(chunks_json)}};
    }
};

/// Greedy sentence-aligned packing: each chunk takes the maximal prefix of the
/// remaining sentences whose text fits in `max_tokens`. A lone sentence that
/// cannot fit becomes its own chunk, flagged oversized rather than split.
inline ChunkPlan chunk_document(std::string_view document, std::size_t max_tokens,
                                const text::TokenCounter& counter,
                                const text::SentenceSplitOptions& split_options = {}) {
    if (max_tokens < 1) throw ConfigError("chunk size must be at least 1 token");
    const auto spans = text::split_sentences(document, split_options);
    if (spans.empty()) throw InputError("cannot chunk empty document");

    ChunkPlan plan;
    plan.chunk_size = max_tokens;
    plan.counter_name = std::string(counter.name());

    std::size_t i = 0;
    while (i < spans.size()) {
        const std::size_t chunk_start = spans[i].start;
        std::size_t j = i;
        std::size_t chunk_end = spans[i].end;
        std::size_t tokens = counter.count(document.substr(chunk_start, chunk_end - chunk_start));
        bool oversized = false;

        if (tokens > max_tokens) {
            oversized = true;  // unsplittable sentence, emit as-is
        } else {
            while (j + 1 < spans.size()) {
                const std::size_t candidate_end = spans[j + 1].end;
                const std::size_t candidate_tokens =
                    counter.count(document.substr(chunk_start, candidate_end - chunk_start));
                if (candidate_tokens > max_tokens) break;
                ++j;
                chunk_end = candidate_end;
                tokens = candidate_tokens;
            }
        }

        Chunk chunk;
        chunk.index = plan.chunks.size();
        chunk.text = std::string(document.substr(chunk_start, chunk_end - chunk_start));
        chunk.token_count = tokens;
        chunk.first_sentence = spans[i].index;
        chunk.last_sentence = spans[j].index;
        chunk.char_start = chunk_start;
        chunk.char_end = chunk_end;
        chunk.oversized = oversized;
        if (oversized) ++plan.oversized_count;
        plan.chunks.push_back(std::move(chunk));
        i = j + 1;
    }
    return plan;
}

}  // namespace longsum::chunking
