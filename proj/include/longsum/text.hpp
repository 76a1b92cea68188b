#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "longsum/errors.hpp"

namespace longsum::text {

// 64-bit FNV-1a. Used for prompt-asset pinning and pseudo-embeddings.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_ascii_punct(char c) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
           (c >= '{' && c <= '~');
}

/// Token counting contract shared by chunking, budgets, and statistics.
///
/// Guarantees: count("") == 0; identical input yields identical count;
/// count(a + b) <= count(a) + count(b) + 1.
class TokenCounter {
public:
    virtual ~TokenCounter() = default;

    virtual std::string_view name() const noexcept = 0;

    /// Token sequence for n-gram and LCS computations. Views index into `text`.
    virtual std::vector<std::string_view> tokenize(std::string_view text) const = 0;

    virtual std::size_t count(std::string_view text) const = 0;
};

/// Whitespace tokenizer that splits ASCII punctuation into single-char tokens.
/// count() applies a tokens-per-word multiplier so the same counter can stand
/// in for BPE-style tokenizers that emit more tokens than words.
class WordTokenCounter final : public TokenCounter {
public:
    explicit WordTokenCounter(double tokens_per_word = 1.0)
        : tokens_per_word_(tokens_per_word),
          name_(tokens_per_word == 1.0 ? "word"
                                       : "word*" + format_multiplier(tokens_per_word)) {
        if (tokens_per_word <= 0.0) throw ConfigError("tokens_per_word must be positive");
    }

    std::string_view name() const noexcept override { return name_; }

    std::vector<std::string_view> tokenize(std::string_view text) const override {
        std::vector<std::string_view> out;
        std::size_t i = 0;
        const std::size_t n = text.size();
        while (i < n) {
            if (is_ascii_space(text[i])) {
                ++i;
                continue;
            }
            if (is_ascii_punct(text[i])) {
                out.push_back(text.substr(i, 1));
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < n && !is_ascii_space(text[j]) && !is_ascii_punct(text[j])) ++j;
            out.push_back(text.substr(i, j - i));
            i = j;
        }
        return out;
    }

    std::size_t count(std::string_view text) const override {
        const std::size_t words = tokenize(text).size();
        if (words == 0) return 0;
        return static_cast<std::size_t>(std::llround(static_cast<double>(words) * tokens_per_word_));
    }

    double tokens_per_word() const noexcept { return tokens_per_word_; }

private:
    static std::string format_multiplier(double m) {
        std::string s = std::to_string(m);
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    }

    double tokens_per_word_;
    std::string name_;
};

/// Whitespace-separated word count (used where prompts speak of "words").
inline std::size_t whitespace_word_count(std::string_view text) {
    std::size_t words = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_ascii_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

/// One sentence as a character range [start, end) plus its 0-based ordinal.
struct SentenceSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t index = 0;
};

struct SentenceSplitOptions {
    // Lowercased, no trailing period ("e.g" keeps its internal dot).
    std::set<std::string> abbreviations = {"mr", "mrs", "dr", "st", "vs", "e.g", "i.e"};
};

namespace detail {

// UTF-8 ellipsis and curly quote byte sequences we recognize during scanning.
inline constexpr std::string_view kEllipsis = "\xE2\x80\xA6";
inline constexpr std::string_view kRightDoubleQuote = "\xE2\x80\x9D";
inline constexpr std::string_view kRightSingleQuote = "\xE2\x80\x99";
inline constexpr std::string_view kLeftDoubleQuote = "\xE2\x80\x9C";
inline constexpr std::string_view kLeftSingleQuote = "\xE2\x80\x98";
inline constexpr std::string_view kGuillemetOpen = "\xC2\xAB";
inline constexpr std::string_view kGuillemetClose = "\xC2\xBB";

inline bool starts_with_at(std::string_view text, std::size_t pos, std::string_view what) {
    return text.size() - pos >= what.size() && text.substr(pos, what.size()) == what;
}

// Length of the terminal-punctuation glyph at pos (1 for .!? / 3 for ellipsis), 0 if none.
inline std::size_t terminal_punct_len(std::string_view text, std::size_t pos) {
    const char c = text[pos];
    if (c == '.' || c == '!' || c == '?') return 1;
    if (starts_with_at(text, pos, kEllipsis)) return kEllipsis.size();
    return 0;
}

inline std::size_t closing_mark_len(std::string_view text, std::size_t pos) {
    const char c = text[pos];
    if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
    for (auto q : {kRightDoubleQuote, kRightSingleQuote, kGuillemetClose})
        if (starts_with_at(text, pos, q)) return q.size();
    return 0;
}

inline bool is_sentence_opener(std::string_view text, std::size_t pos) {
    const char c = text[pos];
    if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) return true;
    if (c == '"' || c == '\'' || c == '(') return true;
    for (auto q : {kLeftDoubleQuote, kLeftSingleQuote, kGuillemetOpen})
        if (starts_with_at(text, pos, q)) return true;
    return false;
}

// Word immediately preceding text[dot_pos] == '.', spanning letters and internal
// dots so "e.g." resolves to "e.g". Lowercased; empty when none.
inline std::string word_before_period(std::string_view text, std::size_t dot_pos) {
    std::size_t begin = dot_pos;
    while (begin > 0) {
        const char c = text[begin - 1];
        const bool wordish = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '.';
        if (!wordish) break;
        --begin;
    }
    std::string w(text.substr(begin, dot_pos - begin));
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    while (!w.empty() && w.front() == '.') w.erase(w.begin());
    return w;
}

}  // namespace detail

/// Segment UTF-8 text into sentences.
///
/// Boundary rule: a run of terminal punctuation {. ! ? ...}, optionally followed
/// by closing quotes/brackets, then whitespace whose next non-whitespace char is
/// an ASCII uppercase letter, digit, or opening quote. A lone period is not a
/// boundary when the preceding word is on the abbreviation stop-list. Spans are
/// ordered, non-overlapping, and cover all non-whitespace text.
inline std::vector<SentenceSpan> split_sentences(std::string_view text,
                                                 const SentenceSplitOptions& options = {}) {
    std::vector<SentenceSpan> spans;
    const std::size_t n = text.size();
    std::size_t pos = 0;

    while (true) {
        while (pos < n && is_ascii_space(text[pos])) ++pos;
        if (pos >= n) break;
        const std::size_t start = pos;
        std::size_t end = n;  // falls back to end-of-text when no boundary found

        std::size_t i = start;
        while (i < n) {
            const std::size_t plen = detail::terminal_punct_len(text, i);
            if (plen == 0) {
                ++i;
                continue;
            }
            // Consume the full punctuation run ("?!", "...", etc.).
            std::size_t run_end = i;
            std::size_t glyphs = 0;
            bool only_periods = true;
            while (run_end < n) {
                const std::size_t l = detail::terminal_punct_len(text, run_end);
                if (l == 0) break;
                if (!(l == 1 && text[run_end] == '.')) only_periods = false;
                run_end += l;
                ++glyphs;
            }
            if (glyphs == 1 && only_periods) {
                const std::string word = detail::word_before_period(text, i);
                if (!word.empty() && options.abbreviations.count(word) > 0) {
                    i = run_end;
                    continue;
                }
            }
            while (run_end < n) {
                const std::size_t l = detail::closing_mark_len(text, run_end);
                if (l == 0) break;
                run_end += l;
            }
            if (run_end >= n) {
                end = run_end;
                break;
            }
            if (is_ascii_space(text[run_end])) {
                std::size_t next = run_end;
                while (next < n && is_ascii_space(text[next])) ++next;
                if (next >= n || detail::is_sentence_opener(text, next)) {
                    end = run_end;
                    break;
                }
            }
            i = run_end;
        }

        if (end == n) {  // trim trailing whitespace off the final sentence
            while (end > start && is_ascii_space(text[end - 1])) --end;
        }
        spans.push_back(SentenceSpan{start, end, spans.size()});
        pos = end;
        if (end >= n) break;
    }
    return spans;
}

inline std::vector<std::string_view> sentence_texts(std::string_view text,
                                                    const std::vector<SentenceSpan>& spans) {
    std::vector<std::string_view> out;
    out.reserve(spans.size());
    for (const auto& s : spans) out.push_back(text.substr(s.start, s.end - s.start));
    return out;
}

/// Summary-side trigram statistics, all percentages in [0,100].
struct NgramStats {
    double novel_trigram_pct = 0.0;
    double repeated_trigram_pct = 0.0;
    std::size_t token_length = 0;
};

namespace detail {

inline std::vector<std::string> trigrams(const std::vector<std::string_view>& tokens) {
    std::vector<std::string> grams;
    if (tokens.size() < 3) return grams;
    grams.reserve(tokens.size() - 2);
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
        std::string g;
        g.reserve(tokens[i].size() + tokens[i + 1].size() + tokens[i + 2].size() + 2);
        g.append(tokens[i]);
        g.push_back('\x1f');
        g.append(tokens[i + 1]);
        g.push_back('\x1f');
        g.append(tokens[i + 2]);
        grams.push_back(std::move(g));
    }
    return grams;
}

}  // namespace detail

/// 100 * (1 - unique/total) over the trigram occurrence multiset.
/// Texts with fewer than 3 tokens yield 0.
inline double repeated_trigram_pct(std::string_view text, const TokenCounter& counter) {
    const auto grams = detail::trigrams(counter.tokenize(text));
    if (grams.empty()) return 0.0;
    std::unordered_set<std::string> unique(grams.begin(), grams.end());
    return 100.0 * (1.0 - static_cast<double>(unique.size()) / static_cast<double>(grams.size()));
}

/// Share of summary trigram occurrences absent from the source's trigram set.
inline double novel_trigram_pct(std::string_view summary, std::string_view source,
                                const TokenCounter& counter) {
    const auto summary_grams = detail::trigrams(counter.tokenize(summary));
    if (summary_grams.empty()) return 0.0;
    const auto source_grams = detail::trigrams(counter.tokenize(source));
    std::unordered_set<std::string> source_set(source_grams.begin(), source_grams.end());
    std::size_t novel = 0;
    for (const auto& g : summary_grams)
        if (source_set.count(g) == 0) ++novel;
    return 100.0 * static_cast<double>(novel) / static_cast<double>(summary_grams.size());
}

/// ROUGE-L tokenization: lowercase, punctuation-only tokens dropped.
inline std::vector<std::string> rouge_tokens(std::string_view text) {
    WordTokenCounter counter;
    std::vector<std::string> out;
    for (auto tok : counter.tokenize(text)) {
        bool all_punct = true;
        for (char c : tok)
            if (!is_ascii_punct(c)) {
                all_punct = false;
                break;
            }
        if (all_punct) continue;
        std::string lowered(tok);
        std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.push_back(std::move(lowered));
    }
    return out;
}

/// LCS-based F1 over pre-tokenized sequences. Two-row DP.
template <typename Token>
double rouge_l_tokens(const std::vector<Token>& candidate, const std::vector<Token>& reference) {
    const std::size_t m = candidate.size();
    const std::size_t r = reference.size();
    if (m == 0 || r == 0) return 0.0;
    std::vector<std::size_t> prev(r + 1, 0), cur(r + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= r; ++j) {
            if (candidate[i - 1] == reference[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[r]);
    if (lcs == 0.0) return 0.0;
    const double precision = lcs / static_cast<double>(m);
    const double recall = lcs / static_cast<double>(r);
    return 2.0 * precision * recall / (precision + recall);
}

/// ROUGE-L F-measure (beta = 1) in [0,1]; 0 when either side is empty.
inline double rouge_l(std::string_view candidate, std::string_view reference) {
    return rouge_l_tokens(rouge_tokens(candidate), rouge_tokens(reference));
}

}  // namespace longsum::text
