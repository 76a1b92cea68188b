#include "longsum/summarize.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "longsum/chunker.hpp"
#include "longsum/llm.hpp"
#include "longsum/prompts.hpp"

using namespace longsum;
using namespace longsum::summarize;
using longsum::chunking::ChunkPlan;
using longsum::chunking::chunk_document;
using longsum::llm::ClientOptions;
using longsum::llm::LlmClient;
using longsum::llm::ScriptedBackend;
using longsum::llm::TranscriptLog;
using longsum::prompts::PromptLibrary;
using longsum::text::WordTokenCounter;

namespace {

const PromptLibrary& library() {
    static PromptLibrary lib = PromptLibrary::load(prompts::default_template_dir());
    return lib;
}

// One sentence per chunk: "Chunkmark<i> w1 ... w<k-2>." is exactly
// `tokens_each` word tokens including the final period.
std::string marked_document(std::size_t n_chunks, std::size_t tokens_each) {
    std::string doc;
    for (std::size_t i = 0; i < n_chunks; ++i) {
        if (!doc.empty()) doc += " ";
        std::string sentence = "Chunkmark" + std::to_string(i);
        for (std::size_t w = 0; w + 2 < tokens_each; ++w) sentence += " w" + std::to_string(w);
        sentence += ".";
        doc += sentence;
    }
    return doc;
}

ChunkPlan plan_for(std::size_t n_chunks, std::size_t tokens_each) {
    WordTokenCounter counter;
    return chunk_document(marked_document(n_chunks, tokens_each), tokens_each, counter);
}

// `tokens` word tokens starting with a unique marker word.
std::string sized_text(const std::string& marker, std::size_t tokens) {
    std::string out = marker;
    for (std::size_t i = 1; i < tokens; ++i) out += " f" + std::to_string(i);
    return out;
}

std::shared_ptr<ScriptedBackend> backend_with_window(std::size_t window) {
    ScriptedBackend::Options options;
    options.context_window = window;
    return std::make_shared<ScriptedBackend>(options);
}

ClientOptions fast_options() {
    ClientOptions options;
    options.sleep_on_retry = false;
    return options;
}

struct Harness {
    std::shared_ptr<ScriptedBackend> backend;
    std::shared_ptr<TranscriptLog> transcript;
    std::unique_ptr<LlmClient> client;

    explicit Harness(std::size_t window) {
        backend = backend_with_window(window);
        transcript = std::make_shared<TranscriptLog>();
        client = std::make_unique<LlmClient>(backend, fast_options(), nullptr, transcript);
    }
};

void expect_tree_invariants(const SummaryTree& tree, std::size_t n_chunks) {
    std::vector<std::vector<const SummaryNode*>> levels;
    for (const auto& node : tree.nodes) {
        if (node.level >= levels.size()) levels.resize(node.level + 1);
        levels[node.level].push_back(&node);
    }
    ASSERT_FALSE(levels.empty());
    ASSERT_EQ(levels[0].size(), n_chunks);
    for (std::size_t i = 0; i < n_chunks; ++i) {
        EXPECT_EQ(levels[0][i]->chunk_index, i);  // level-0 nodes map 1:1 onto chunks
        EXPECT_TRUE(levels[0][i]->children.empty());
    }
    for (std::size_t l = 1; l < levels.size(); ++l) {
        std::size_t expected_child = levels[l - 1].front()->id;
        std::size_t covered = 0;
        for (const auto* node : levels[l]) {
            ASSERT_FALSE(node->children.empty());
            for (std::size_t child : node->children) {
                EXPECT_EQ(child, expected_child);  // consecutive, non-overlapping coverage
                EXPECT_EQ(tree.nodes[child].level, l - 1);
                std::size_t pos = 0;
                while (pos < levels[l - 1].size() && levels[l - 1][pos]->id != child) ++pos;
                ASSERT_LT(pos, levels[l - 1].size());
                expected_child =
                    pos + 1 < levels[l - 1].size() ? levels[l - 1][pos + 1]->id : SIZE_MAX;
                ++covered;
            }
        }
        EXPECT_EQ(covered, levels[l - 1].size());
    }
    EXPECT_EQ(levels.back().size(), 1u);  // exactly one root
    EXPECT_EQ(levels.back().front()->id, tree.root_id);
}

}  // namespace

// ---------------------------------------------------------------------------
// enforce_length / truncation / artifact removal
// ---------------------------------------------------------------------------

TEST(EnforceLength, WithinLimitCostsNothing) {
    WordTokenCounter counter;
    int calls = 0;
    const auto result = enforce_length(
        "short text.", 10, [&] { ++calls; return std::string("regenerated"); }, 3, counter);
    EXPECT_EQ(result.text, "short text.");
    EXPECT_EQ(result.regenerations, 0);
    EXPECT_FALSE(result.truncated);
    EXPECT_EQ(calls, 0);
}

TEST(EnforceLength, ReturnsFirstRegenerationWithinLimit) {
    WordTokenCounter counter;
    const std::vector<std::string> attempts = {
        "way too long attempt number one extra extra extra extra",
        "still too long attempt number two extra extra extra",
        "fits now.",
    };
    std::size_t next = 0;
    const auto result = enforce_length(
        "initial over limit text with many many many tokens here", 5,
        [&] { return attempts[next++]; }, 5, counter);
    EXPECT_EQ(result.text, "fits now.");
    EXPECT_EQ(result.regenerations, 3);
    EXPECT_FALSE(result.truncated);
}

TEST(EnforceLength, TruncatesAtFinalPunctuationAfterCap) {
    WordTokenCounter counter;
    const std::string stubborn = "First part stays here. Second part is far too long to fit.";
    const auto result =
        enforce_length(stubborn, 6, [&] { return stubborn; }, 3, counter);
    EXPECT_EQ(result.regenerations, 3);
    EXPECT_TRUE(result.truncated);
    EXPECT_EQ(result.text, "First part stays here.");  // 5 tokens, ends at punctuation
    EXPECT_LE(counter.count(result.text), 6u);
}

TEST(EnforceLength, HardCutWhenNoSentenceFits) {
    WordTokenCounter counter;
    const std::string one_long = "word word word word word word word word word word.";
    const auto result = enforce_length(one_long, 4, [&] { return one_long; }, 0, counter);
    EXPECT_TRUE(result.truncated);
    EXPECT_EQ(result.text, "word word word word");
}

TEST(StripPromptSentences, RemovesCopiedSentence) {
    const std::string copied =
        "You must briefly introduce characters, places, and other major elements if they are "
        "being mentioned for the first time in the summary.";
    const std::string summary = "The hero wins. " + copied + " The end.";
    const std::vector<std::string> bodies = {library().get(prompts::TemplateId::inc_update).body};
    ASSERT_NE(bodies[0].find(copied), std::string::npos);  // fixture sanity
    EXPECT_EQ(strip_prompt_sentences(summary, bodies), "The hero wins. The end.");
}

TEST(StripPromptSentences, KeepsEverythingWhenNothingCopied) {
    const std::vector<std::string> bodies = {"irrelevant template body"};
    EXPECT_EQ(strip_prompt_sentences("One. Two.", bodies), "One. Two.");
}

TEST(RemoveArtifacts, SingleScriptedCall) {
    Harness h(4096);
    h.backend->add_rule("Your task is to edit the book summary", "A clean final summary.");
    BudgetSchedule budgets;
    budgets.context_window = 4096;
    const std::string cleaned =
        remove_artifacts("In this segment, things happen.", *h.client, library(), budgets, {});
    EXPECT_EQ(cleaned, "A clean final summary.");
    EXPECT_EQ(h.backend->generate_calls(), 1u);
}

// ---------------------------------------------------------------------------
// Hierarchical merging
// ---------------------------------------------------------------------------

TEST(Hierarchical, SingleChunkIsDegenerateTree) {
    Harness h(4096);
    h.backend->add_rule("Chunkmark0", "The only summary.");
    BudgetSchedule budgets;
    budgets.context_window = 4096;
    budgets.chunk_size = 10;
    budgets.final_budget = 64;
    const auto tree = hierarchical_merge(plan_for(1, 10), budgets, *h.client, library());
    ASSERT_EQ(tree.nodes.size(), 1u);
    EXPECT_EQ(tree.root_id, 0u);
    EXPECT_EQ(tree.root().level, 0u);
    EXPECT_EQ(tree.final_summary, "The only summary.");
    EXPECT_EQ(h.backend->generate_calls(), 1u);
    EXPECT_EQ(tree.level_sizes(), (std::vector<std::size_t>{1}));
}

// Budgets sized so exactly two summaries fit per merge: levels 4, 2, 1.
TEST(Hierarchical, FourChunkFixtureYieldsLevels421) {
    const auto& lib = library();
    WordTokenCounter counter;
    const std::size_t merge_budget = 16;
    const std::string words = std::to_string(prompts::words_for_tokens(merge_budget));
    const std::size_t merge_base = counter.count(lib.fill(prompts::TemplateId::hier_merge, {"", words}));

    // Every scripted summary is exactly 10 tokens; W admits 2 of them per
    // merge (base + 20 < W - 16) but never 3 (base + 30 >= W - 16).
    const std::size_t window = merge_base + 20 + merge_budget + 5;
    ASSERT_LT(merge_base + 20, window - merge_budget);
    ASSERT_GE(merge_base + 30, window - merge_budget);

    Harness h(window);
    h.backend->add_rule("Chunkmark0", sized_text("Lmark0", 10));
    h.backend->add_rule("Chunkmark1", sized_text("Lmark1", 10));
    h.backend->add_rule("Chunkmark2", sized_text("Lmark2", 10));
    h.backend->add_rule("Chunkmark3", sized_text("Lmark3", 10));
    h.backend->add_rule("Lmark0", sized_text("Mmark01", 10));
    h.backend->add_rule("Lmark2", sized_text("Mmark23", 10));
    h.backend->add_rule("Mmark01", sized_text("Rootmark", 10));

    BudgetSchedule budgets;
    budgets.context_window = window;
    budgets.chunk_size = 8;
    budgets.final_budget = merge_budget;
    budgets.level_overrides[0] = 16;  // leaf outputs are 10 tokens

    const std::size_t leaf_base =
        counter.count(lib.fill(prompts::TemplateId::hier_leaf,
                               {"", std::to_string(prompts::words_for_tokens(16))}));
    ASSERT_LT(leaf_base + 8, window - 16) << "leaf prompts must fit this fixture's window";

    EngineOptions options;
    options.prior_context_count = 0;
    const auto tree = hierarchical_merge(plan_for(4, 8), budgets, *h.client, lib, options);

    EXPECT_EQ(tree.level_sizes(), (std::vector<std::size_t>{4, 2, 1}));
    expect_tree_invariants(tree, 4);
    EXPECT_EQ(tree.nodes[tree.root_id].text.substr(0, 8), "Rootmark");
    EXPECT_EQ(h.backend->generate_calls(), 7u);  // 4 leaves + 2 merges + root

    // Budget enforcement measured from the transcript, not from intent.
    for (const auto& entry : h.transcript->entries()) {
        const auto budget = entry.at("prompt_budget").get<std::size_t>();
        const auto prompt = entry.at("prompt").get<std::string>();
        EXPECT_LT(counter.count(prompt), budget) << entry.at("provenance");
    }
}

TEST(Hierarchical, PriorContextJoinedWhenItFits) {
    const auto& lib = library();
    WordTokenCounter counter;
    const std::size_t merge_budget = 16;
    const std::string words = std::to_string(prompts::words_for_tokens(merge_budget));
    const std::size_t merge_base = counter.count(lib.fill(prompts::TemplateId::hier_merge, {"", words}));
    const std::size_t ctx_base =
        counter.count(lib.fill(prompts::TemplateId::hier_merge_context, {"", "", words}));
    ASSERT_LE(ctx_base - merge_base, 40u) << "context template overhead grew; revisit fixture";

    // Leaf summaries sized [50, 5, 50, 50]. The threshold admits {0,1}
    // without context, then {2} with leaf 1 as context, then {3} alone after
    // dropping its 50-token context.
    const std::size_t threshold = ctx_base + 65;  // W - G_l
    const std::size_t window = threshold + merge_budget;

    Harness h(window);
    h.backend->add_rule("Chunkmark0", sized_text("Lmark0", 50));
    h.backend->add_rule("Chunkmark1", sized_text("Lmark1", 5));
    h.backend->add_rule("Chunkmark2", sized_text("Lmark2", 50));
    h.backend->add_rule("Chunkmark3", sized_text("Lmark3", 50));
    h.backend->add_rule("Lmark0", sized_text("Mmark1", 10));
    h.backend->add_rule("Lmark2", sized_text("Mmark2", 10));
    h.backend->add_rule("Lmark3", sized_text("Mmark3", 10));
    h.backend->add_rule("Mmark1", sized_text("Rootmark", 10));

    BudgetSchedule budgets;
    budgets.context_window = window;
    budgets.chunk_size = 12;
    budgets.final_budget = merge_budget;
    budgets.level_overrides[0] = 64;

    const auto tree = hierarchical_merge(plan_for(4, 12), budgets, *h.client, lib);
    EXPECT_EQ(tree.level_sizes(), (std::vector<std::size_t>{4, 3, 1}));
    expect_tree_invariants(tree, 4);

    std::vector<const SummaryNode*> level1;
    for (const auto& n : tree.nodes)
        if (n.level == 1) level1.push_back(&n);
    ASSERT_EQ(level1.size(), 3u);
    EXPECT_FALSE(level1[0]->used_prior_context);  // first group has no predecessor
    EXPECT_TRUE(level1[1]->used_prior_context);   // leaf 1 (5 tokens) fits as context
    EXPECT_FALSE(level1[2]->used_prior_context);  // leaf 2 (50 tokens) did not fit

    // The context-bearing merge prompt embeds the preceding summary verbatim.
    bool saw_context_prompt = false;
    for (const auto& entry : h.transcript->entries()) {
        const auto prompt = entry.at("prompt").get<std::string>();
        if (prompt.rfind("Below is a summary of the context preceding", 0) == 0) {
            EXPECT_NE(prompt.find("Lmark1"), std::string::npos);
            EXPECT_NE(prompt.find("Lmark2"), std::string::npos);
            saw_context_prompt = true;
        }
    }
    EXPECT_TRUE(saw_context_prompt);
}

TEST(Hierarchical, BudgetInfeasibleWhenMergeCannotReduce) {
    const auto& lib = library();
    WordTokenCounter counter;
    const std::size_t merge_budget = 16;
    const std::string words = std::to_string(prompts::words_for_tokens(merge_budget));
    const std::size_t merge_base = counter.count(lib.fill(prompts::TemplateId::hier_merge, {"", words}));
    const std::size_t window = merge_base + 15 + merge_budget;  // fits one summary, never two

    Harness h(window);
    h.backend->add_rule("Chunkmark0", sized_text("Lmark0", 10));
    h.backend->add_rule("Chunkmark1", sized_text("Lmark1", 10));

    BudgetSchedule budgets;
    budgets.context_window = window;
    budgets.chunk_size = 8;
    budgets.final_budget = merge_budget;
    budgets.level_overrides[0] = 16;
    const std::size_t leaf_base =
        counter.count(lib.fill(prompts::TemplateId::hier_leaf,
                               {"", std::to_string(prompts::words_for_tokens(16))}));
    ASSERT_LT(leaf_base + 8, window - 16);

    EXPECT_THROW(hierarchical_merge(plan_for(2, 8), budgets, *h.client, lib), BudgetError);
}

TEST(Hierarchical, StructuralInvariantsOverRandomRuns) {
    const auto& lib = library();
    WordTokenCounter counter;
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> chunk_count(1, 64);
    std::uniform_int_distribution<std::size_t> summary_len(5, 40);
    std::uniform_int_distribution<std::size_t> extra(1, 200);

    for (int run = 0; run < 25; ++run) {
        const std::size_t n = chunk_count(rng);
        const std::size_t s = summary_len(rng);
        const std::size_t budget = 64;
        const std::string words = std::to_string(prompts::words_for_tokens(budget));
        const std::size_t ctx_base =
            counter.count(lib.fill(prompts::TemplateId::hier_merge_context, {"", "", words}));
        // Guarantee every group fits at least two summaries plus context.
        const std::size_t window = budget + ctx_base + 3 * s + extra(rng);

        Harness h(window);
        h.backend->add_rule("", sized_text("summ", s));

        BudgetSchedule budgets;
        budgets.context_window = window;
        budgets.chunk_size = 8;
        budgets.final_budget = budget;
        budgets.level_overrides[0] = budget;

        const auto tree = hierarchical_merge(plan_for(n, 8), budgets, *h.client, lib);
        expect_tree_invariants(tree, n);

        for (const auto& entry : h.transcript->entries()) {
            const auto prompt_budget = entry.at("prompt_budget").get<std::size_t>();
            EXPECT_LT(counter.count(entry.at("prompt").get<std::string>()), prompt_budget);
        }
    }
}

TEST(Hierarchical, SimplePromptSetSwapsTemplates) {
    Harness h(4096);
    h.backend->add_rule("Write a coherent and chronological summary",
                        "Simple leaf summary of the chunk.");
    h.backend->add_rule("Merge the given summaries into one coherent",
                        "Simple merged summary of everything.");
    BudgetSchedule budgets;
    budgets.context_window = 4096;
    budgets.chunk_size = 8;
    budgets.final_budget = 64;
    budgets.level_overrides[0] = 64;
    EngineOptions options;
    options.simple_prompts = true;
    options.prior_context_count = 0;
    const auto tree = hierarchical_merge(plan_for(3, 8), budgets, *h.client, library(), options);
    EXPECT_EQ(tree.final_summary, "Simple merged summary of everything.");
    for (const auto& entry : h.transcript->entries()) {
        const auto prompt = entry.at("prompt").get<std::string>();
        EXPECT_EQ(prompt.find("We are creating one comprehensive summary"), std::string::npos)
            << "standard prompt text leaked into the simple prompt set";
    }
}

TEST(Hierarchical, ParallelLeavesMatchSequentialStructure) {
    const auto& lib = library();
    auto run_with = [&](std::size_t parallelism) {
        Harness h(4096);
        h.backend->add_rule("", "A uniform summary of ten tokens exactly right here now.");
        BudgetSchedule budgets;
        budgets.context_window = 4096;
        budgets.chunk_size = 8;
        budgets.final_budget = 64;
        budgets.level_overrides[0] = 64;
        EngineOptions options;
        options.parallelism = parallelism;
        return hierarchical_merge(plan_for(12, 8), budgets, *h.client, lib, options).to_json();
    };
    EXPECT_EQ(run_with(1), run_with(4));
}

// ---------------------------------------------------------------------------
// Incremental updating
// ---------------------------------------------------------------------------

namespace {

BudgetSchedule inc_budgets(std::size_t window = 4096, std::size_t final_budget = 20) {
    BudgetSchedule budgets;
    budgets.context_window = window;
    budgets.chunk_size = 8;
    budgets.final_budget = final_budget;
    return budgets;
}

}  // namespace

TEST(Incremental, SingleChunkHasOnlyInitEvent) {
    Harness h(4096);
    h.backend->push_response("Initial summary only.");
    const auto state = incremental_update(plan_for(1, 8), inc_budgets(), *h.client, library());
    ASSERT_EQ(state.events.size(), 1u);
    EXPECT_EQ(state.events[0].kind, StepKind::init);
    EXPECT_EQ(state.events[0].chunk_index, 0u);
    EXPECT_EQ(state.global_summary, "Initial summary only.");
    EXPECT_EQ(state.cursor, 1u);
    EXPECT_EQ(h.backend->generate_calls(), 1u);
}

TEST(Incremental, OneOvershootTriggersExactlyOneCompress) {
    Harness h(4096);
    h.backend->push_response(sized_text("init", 10));      // within G_n = 20
    h.backend->push_response(sized_text("overrun", 30));   // update exceeds G_n
    h.backend->push_response(sized_text("squeezed", 12));  // compression result
    h.backend->push_response(sized_text("upd3", 10));
    h.backend->push_response(sized_text("upd4", 10));
    const auto state = incremental_update(plan_for(4, 8), inc_budgets(), *h.client, library());

    std::vector<StepKind> kinds;
    for (const auto& e : state.events) kinds.push_back(e.kind);
    EXPECT_EQ(kinds, (std::vector<StepKind>{StepKind::init, StepKind::update, StepKind::compress,
                                            StepKind::update, StepKind::update}));
    EXPECT_FALSE(state.budget_violation);
    EXPECT_EQ(state.global_summary.substr(0, 4), "upd4");

    // Budget enforcement measured from the transcript for every inc call.
    WordTokenCounter counter;
    for (const auto& entry : h.transcript->entries()) {
        const auto budget = entry.at("prompt_budget").get<std::size_t>();
        EXPECT_LT(counter.count(entry.at("prompt").get<std::string>()), budget)
            << entry.at("provenance");
    }
}

TEST(Incremental, AlwaysWithinBudgetNeverCompresses) {
    Harness h(4096);
    for (int i = 0; i < 5; ++i) h.backend->push_response(sized_text("step" + std::to_string(i), 10));
    const auto state = incremental_update(plan_for(5, 8), inc_budgets(), *h.client, library());
    ASSERT_EQ(state.events.size(), 5u);
    EXPECT_EQ(state.events[0].kind, StepKind::init);
    for (std::size_t i = 1; i < state.events.size(); ++i)
        EXPECT_EQ(state.events[i].kind, StepKind::update);
}

TEST(Incremental, CompressionOvershootFallsBackToTruncation) {
    Harness h(4096);
    h.backend->push_response(sized_text("init", 10));
    h.backend->push_response(sized_text("overrun", 30));
    // Compression keeps overshooting: initial try + 2 regenerations, then truncation.
    h.backend->push_response("Still long sentence one goes here. And sentence two follows on.");
    h.backend->push_response("Still long sentence one goes here. And sentence two follows on.");
    h.backend->push_response("Short bit fits here. But this second sentence pushes far past it.");
    auto budgets = inc_budgets(4096, 20);
    budgets.max_regenerations = 2;
    budgets.level_overrides.clear();
    budgets.final_budget = 6;
    const auto state = incremental_update(plan_for(2, 8), budgets, *h.client, library());

    ASSERT_EQ(state.events.size(), 3u);
    EXPECT_EQ(state.events[2].kind, StepKind::compress);
    EXPECT_EQ(state.events[2].regenerations, 2);
    EXPECT_TRUE(state.events[2].truncated);
    EXPECT_TRUE(state.budget_violation);
    EXPECT_EQ(state.global_summary, "Short bit fits here.");
    EXPECT_LE(WordTokenCounter().count(state.global_summary), 6u);
}

TEST(Incremental, CompressPromptCarriesWordCounts) {
    Harness h(4096);
    h.backend->push_response(sized_text("init", 10));
    h.backend->push_response(sized_text("overrun", 30));
    h.backend->push_response(sized_text("squeezed", 12));
    const auto state = incremental_update(plan_for(2, 8), inc_budgets(), *h.client, library());
    ASSERT_EQ(state.events.size(), 3u);

    bool saw_compress_prompt = false;
    for (const auto& entry : h.transcript->entries()) {
        if (entry.at("provenance").get<std::string>().rfind("inc:compress", 0) != 0) continue;
        const auto prompt = entry.at("prompt").get<std::string>();
        // 30 whitespace words in the overrun text; target = words(G_n = 20) = 15.
        EXPECT_NE(prompt.find("contains 30 words"), std::string::npos);
        EXPECT_NE(prompt.find("less than 15 words"), std::string::npos);
        EXPECT_EQ(entry.at("temperature").get<double>(), 1.0);  // compression default
        saw_compress_prompt = true;
    }
    EXPECT_TRUE(saw_compress_prompt);
}

TEST(Incremental, EventGrammarHoldsOnRandomScripts) {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<std::size_t> chunk_count(1, 12);
    std::uniform_int_distribution<int> overshoot(0, 3);

    for (int run = 0; run < 40; ++run) {
        const std::size_t n = chunk_count(rng);
        Harness h(4096);
        std::vector<StepKind> expected;
        h.backend->push_response(sized_text("init", 10));
        expected.push_back(StepKind::init);
        for (std::size_t i = 1; i < n; ++i) {
            const bool over = overshoot(rng) == 0;
            h.backend->push_response(sized_text("upd", over ? 30 : 10));
            expected.push_back(StepKind::update);
            if (over) {
                h.backend->push_response(sized_text("comp", 12));
                expected.push_back(StepKind::compress);
            }
        }
        const auto state = incremental_update(plan_for(n, 8), inc_budgets(), *h.client, library());
        std::vector<StepKind> kinds;
        for (const auto& e : state.events) kinds.push_back(e.kind);
        EXPECT_EQ(kinds, expected) << "run " << run;

        // Grammar check: init (update compress?)* postprocess?
        std::string word;
        for (auto k : kinds) word += std::string(to_string(k)) + " ";
        std::size_t pos = 0;
        ASSERT_EQ(word.rfind("init ", 0), 0u);
        pos = 5;
        while (pos < word.size()) {
            if (word.compare(pos, 7, "update ") == 0) {
                pos += 7;
                if (word.compare(pos, 9, "compress ") == 0) pos += 9;
            } else if (word.compare(pos, 12, "postprocess ") == 0 && pos + 12 == word.size()) {
                pos += 12;
            } else {
                FAIL() << "grammar violation in: " << word;
            }
        }
    }
}

TEST(Incremental, DeterministicAcrossIdenticalRuns) {
    auto run_once = [] {
        Harness h(4096);
        h.backend->push_response(sized_text("init", 10));
        h.backend->push_response(sized_text("up1", 30));
        h.backend->push_response(sized_text("comp", 12));
        h.backend->push_response(sized_text("up2", 10));
        const auto state = incremental_update(plan_for(3, 8), inc_budgets(), *h.client, library());
        return state.to_json().dump();
    };
    EXPECT_EQ(run_once(), run_once());
}

TEST(Incremental, LlmPostprocessAppendsEvent) {
    Harness h(4096);
    h.backend->push_response(sized_text("init", 10));
    h.backend->add_rule("Your task is to edit the book summary", "Cleaned final text.");
    EngineOptions options;
    options.postprocess = PostprocessMode::llm;
    const auto state =
        incremental_update(plan_for(1, 8), inc_budgets(), *h.client, library(), options);
    ASSERT_EQ(state.events.size(), 2u);
    EXPECT_EQ(state.events.back().kind, StepKind::postprocess);
    EXPECT_EQ(state.global_summary, "Cleaned final text.");
}

TEST(Incremental, StringmatchPostprocessIsOffline) {
    Harness h(4096);
    const std::string copied =
        "You must briefly introduce characters, places, and other major elements if they are "
        "being mentioned for the first time in the summary.";
    h.backend->push_response("Kept sentence stays. " + copied);
    EngineOptions options;
    options.postprocess = PostprocessMode::stringmatch;
    auto budgets = inc_budgets(4096, 80);
    const auto state = incremental_update(plan_for(1, 8), budgets, *h.client, library(), options);
    EXPECT_EQ(state.global_summary, "Kept sentence stays.");
    EXPECT_EQ(state.events.back().kind, StepKind::postprocess);
    EXPECT_EQ(h.backend->generate_calls(), 1u);  // no extra call for stringmatch
}

// ---------------------------------------------------------------------------
// Checkpoint / resume
// ---------------------------------------------------------------------------

TEST(Checkpoint, ResumeSkipsCompletedHierarchicalSteps) {
    const auto dir = std::filesystem::path(::testing::TempDir()) / "longsum_ckpt_hier";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto ckpt_path = dir / "checkpoint.json";
    const nlohmann::json fingerprint{{"test", "resume-hier"}};

    BudgetSchedule budgets;
    budgets.context_window = 4096;
    budgets.chunk_size = 8;
    budgets.final_budget = 64;
    budgets.level_overrides[0] = 64;
    const auto plan = plan_for(16, 8);

    auto run = [&](bool resume, std::size_t abort_after) {
        Harness h(4096);
        h.backend->add_rule("", "A uniform summary of ten tokens exactly right here now.");
        if (abort_after > 0) h.backend->abort_after(abort_after);
        EngineOptions options;
        options.checkpoint = Checkpoint::open(ckpt_path, fingerprint, resume);
        std::optional<SummaryTree> tree;
        try {
            tree = hierarchical_merge(plan, budgets, *h.client, library(), options);
        } catch (const BackendError&) {
        }
        return std::make_pair(tree, h.backend->generate_calls());
    };

    auto [aborted_tree, first_calls] = run(false, 10);
    EXPECT_FALSE(aborted_tree.has_value());
    EXPECT_EQ(first_calls, 10u);

    auto [resumed_tree, resumed_calls] = run(true, 0);
    ASSERT_TRUE(resumed_tree.has_value());
    EXPECT_LT(resumed_calls, 16u);  // strictly fewer than a fresh full run needs

    std::filesystem::remove(ckpt_path);
    auto [fresh_tree, fresh_calls] = run(false, 0);
    ASSERT_TRUE(fresh_tree.has_value());
    EXPECT_EQ(resumed_tree->to_json(), fresh_tree->to_json());
    EXPECT_EQ(resumed_calls + first_calls, fresh_calls);
}

TEST(Checkpoint, FingerprintMismatchRefusesResume) {
    const auto dir = std::filesystem::path(::testing::TempDir()) / "longsum_ckpt_fp";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto path = dir / "checkpoint.json";
    (void)Checkpoint::open(path, nlohmann::json{{"window", 100}}, false);
    EXPECT_THROW(Checkpoint::open(path, nlohmann::json{{"window", 200}}, true), ConfigError);
    EXPECT_NO_THROW(Checkpoint::open(path, nlohmann::json{{"window", 100}}, true));
}

TEST(BudgetScheduleTest, ValidatesRelations) {
    BudgetSchedule budgets;
    budgets.context_window = 100;
    budgets.chunk_size = 100;  // C >= W
    EXPECT_THROW(budgets.validate(), ConfigError);
    budgets.chunk_size = 50;
    budgets.final_budget = 200;  // G_n > W
    EXPECT_THROW(budgets.validate(), ConfigError);
    budgets.final_budget = 64;
    EXPECT_NO_THROW(budgets.validate());
    EXPECT_EQ(budgets.level_budget(0), 25u);  // min(C/2, G_n)
    EXPECT_EQ(budgets.level_budget(3), 64u);
    budgets.level_overrides[3] = 32;
    EXPECT_EQ(budgets.level_budget(3), 32u);
}
