#include "longsum/align.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "longsum/llm.hpp"

using namespace longsum;
using namespace longsum::align;
using longsum::llm::ClientOptions;
using longsum::llm::LlmClient;
using longsum::llm::ScriptedBackend;

namespace {

LlmClient scripted_client(std::shared_ptr<ScriptedBackend>& backend_out) {
    backend_out = std::make_shared<ScriptedBackend>();
    ClientOptions options;
    options.sleep_on_retry = false;
    return LlmClient(backend_out, options);
}

AnnotationInstance instance(std::size_t id, const std::string& span, const std::string& question,
                            std::optional<score::ErrorType> type = std::nullopt) {
    AnnotationInstance inst;
    inst.id = id;
    inst.span_text = span;
    inst.question_text = question;
    inst.error_type = type;
    return inst;
}

}  // namespace

TEST(Cosine, HandArithmetic) {
    EXPECT_NEAR(cosine(std::vector<double>{1, 1}, std::vector<double>{1, 0}), 0.7071, 1e-4);
    const std::vector<double> u{0.3, -0.4, 0.5};
    EXPECT_NEAR(cosine(u, u), 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
}

TEST(Cosine, ErrorsOnBadVectors) {
    EXPECT_THROW(cosine(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}), InputError);
    EXPECT_THROW(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0}), InputError);
    EXPECT_THROW(cosine(std::vector<double>{}, std::vector<double>{}), InputError);
}

TEST(Align, IdenticalSetsMatchPerfectly) {
    std::shared_ptr<ScriptedBackend> backend;
    auto client = scripted_client(backend);
    const std::vector<AnnotationInstance> model = {
        instance(0, "span alpha", "Why alpha?"),
        instance(1, "span beta", "Why beta?"),
    };
    const auto result = align::align(model, model, MatchMode::span_question, 0.68, client);
    EXPECT_DOUBLE_EQ(result.precision, 1.0);
    EXPECT_DOUBLE_EQ(result.recall, 1.0);
}

TEST(Align, OrthogonalEmbeddingsMatchNothing) {
    std::shared_ptr<ScriptedBackend> backend;
    auto client = scripted_client(backend);
    backend->set_embedding("a one", {1.0, 0.0, 0.0});
    backend->set_embedding("b two", {0.0, 1.0, 0.0});
    const std::vector<AnnotationInstance> model = {instance(0, "a", "one")};
    const std::vector<AnnotationInstance> human = {instance(0, "b", "two")};
    const auto result = align::align(model, human, MatchMode::span_question, 0.68, client);
    EXPECT_DOUBLE_EQ(result.precision, 0.0);
    EXPECT_DOUBLE_EQ(result.recall, 0.0);
}

// Hand-walked 3x2 fixture: cosines (m1,h1)=0.9, (m2,h1)=0.7, (m3,h2)=0.5 at
// threshold 0.68 give precision 2/3 and recall 1/2.
TEST(Align, HandWalkedThreeByTwoFixture) {
    std::shared_ptr<ScriptedBackend> backend;
    auto client = scripted_client(backend);
    backend->set_embedding("h1", {1.0, 0.0, 0.0});
    backend->set_embedding("h2", {0.0, 1.0, 0.0});
    backend->set_embedding("m1", {0.9, 0.1, std::sqrt(1.0 - 0.81 - 0.01)});
    backend->set_embedding("m2", {0.7, 0.2, std::sqrt(1.0 - 0.49 - 0.04)});
    backend->set_embedding("m3", {0.2, 0.5, std::sqrt(1.0 - 0.04 - 0.25)});

    const std::vector<AnnotationInstance> model = {
        instance(1, "m1", ""), instance(2, "m2", ""), instance(3, "m3", "")};
    const std::vector<AnnotationInstance> human = {instance(1, "h1", ""), instance(2, "h2", "")};

    const auto result = align::align(model, human, MatchMode::span_only, 0.68, client);
    EXPECT_NEAR(result.precision, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(result.recall, 0.5, 1e-12);

    // m1 and m2 both matched h1: many-to-one is permitted.
    ASSERT_EQ(result.model_to_human.size(), 3u);
    EXPECT_EQ(result.model_to_human[0].to_id, 1u);
    EXPECT_TRUE(result.model_to_human[0].matched);
    EXPECT_EQ(result.model_to_human[1].to_id, 1u);
    EXPECT_TRUE(result.model_to_human[1].matched);
    EXPECT_FALSE(result.model_to_human[2].matched);
    EXPECT_NEAR(result.model_to_human[2].score, 0.5, 1e-9);

    ASSERT_EQ(result.human_to_model.size(), 2u);
    EXPECT_TRUE(result.human_to_model[0].matched);   // h1 best 0.9
    EXPECT_FALSE(result.human_to_model[1].matched);  // h2 best 0.5
}

TEST(Align, BestMatchIndependentOfInputOrdering) {
    std::shared_ptr<ScriptedBackend> backend;
    auto client = scripted_client(backend);
    std::vector<AnnotationInstance> model, human;
    for (std::size_t i = 0; i < 6; ++i)
        model.push_back(instance(i, "model span " + std::to_string(i), "question?"));
    for (std::size_t i = 0; i < 4; ++i)
        human.push_back(instance(i, "human span " + std::to_string(i), "question?"));

    const auto baseline = align::align(model, human, MatchMode::span_question, 0.3, client);
    std::mt19937_64 rng(9);
    for (int run = 0; run < 10; ++run) {
        auto shuffled_model = model;
        auto shuffled_human = human;
        std::shuffle(shuffled_model.begin(), shuffled_model.end(), rng);
        std::shuffle(shuffled_human.begin(), shuffled_human.end(), rng);
        const auto result =
            align::align(shuffled_model, shuffled_human, MatchMode::span_question, 0.3, client);
        EXPECT_DOUBLE_EQ(result.precision, baseline.precision);
        EXPECT_DOUBLE_EQ(result.recall, baseline.recall);
    }
}

TEST(Align, PrecisionRecallMonotoneInThreshold) {
    std::shared_ptr<ScriptedBackend> backend;
    auto client = scripted_client(backend);
    std::vector<AnnotationInstance> model, human;
    for (std::size_t i = 0; i < 8; ++i)
        model.push_back(instance(i, "m" + std::to_string(i), "why m?"));
    for (std::size_t i = 0; i < 5; ++i)
        human.push_back(instance(i, "h" + std::to_string(i), "why h?"));

    double prev_precision = 1.1, prev_recall = 1.1;
    for (double threshold = -1.0; threshold <= 1.0; threshold += 0.1) {
        const auto result =
            align::align(model, human, MatchMode::span_question, threshold, client);
        EXPECT_LE(result.precision, prev_precision);
        EXPECT_LE(result.recall, prev_recall);
        prev_precision = result.precision;
        prev_recall = result.recall;
    }
}

TEST(Align, ModeSelectsComparisonText) {
    std::shared_ptr<ScriptedBackend> backend;
    auto client = scripted_client(backend);
    // Same spans, different questions: span_only matches, question_only does not.
    backend->set_embedding("shared span", {1.0, 0.0});
    backend->set_embedding("model question?", {0.0, 1.0});
    backend->set_embedding("human question?", {1.0, 0.0});
    const std::vector<AnnotationInstance> model = {instance(0, "shared span", "model question?")};
    const std::vector<AnnotationInstance> human = {instance(0, "shared span", "human question?")};

    const auto span_result = align::align(model, human, MatchMode::span_only, 0.68, client);
    EXPECT_DOUBLE_EQ(span_result.precision, 1.0);
    const auto question_result =
        align::align(model, human, MatchMode::question_only, 0.68, client);
    EXPECT_DOUBLE_EQ(question_result.precision, 0.0);
}

TEST(Align, SpanOverlapModeUsesIoU) {
    std::shared_ptr<ScriptedBackend> backend;
    auto client = scripted_client(backend);
    auto with_range = [](std::size_t id, std::size_t start, std::size_t end) {
        auto inst = instance(id, "x", "y");
        inst.span_start = start;
        inst.span_end = end;
        return inst;
    };
    // IoU([0,100), [25,100)) = 0.75 > 0.5; IoU([0,100), [90,200)) = 10/200 = 0.05.
    const std::vector<AnnotationInstance> model = {with_range(0, 0, 100)};
    const std::vector<AnnotationInstance> human_hit = {with_range(0, 25, 100)};
    const std::vector<AnnotationInstance> human_miss = {with_range(0, 90, 200)};

    EXPECT_DOUBLE_EQ(
        align::align(model, human_hit, MatchMode::span_overlap, 0.5, client).precision, 1.0);
    EXPECT_DOUBLE_EQ(
        align::align(model, human_miss, MatchMode::span_overlap, 0.5, client).precision, 0.0);
    EXPECT_EQ(backend->generate_calls(), 0u);  // overlap mode never embeds
}

TEST(Align, ErrorsOnEmptySetsAndBadThreshold) {
    std::shared_ptr<ScriptedBackend> backend;
    auto client = scripted_client(backend);
    const std::vector<AnnotationInstance> some = {instance(0, "a", "b")};
    EXPECT_THROW(align::align({}, some, MatchMode::span_question, 0.68, client), InputError);
    EXPECT_THROW(align::align(some, {}, MatchMode::span_question, 0.68, client), InputError);
    EXPECT_THROW(align::align(some, some, MatchMode::span_question, 1.5, client), ConfigError);
}

TEST(AvgSimilarity, MeanOfPairCosines) {
    std::shared_ptr<ScriptedBackend> backend;
    auto client = scripted_client(backend);
    backend->set_embedding("q a", {1.0, 0.0});
    backend->set_embedding("q b", {0.6, 0.8});
    backend->set_embedding("q c", {1.0, 0.0});
    backend->set_embedding("q d", {0.8, 0.6});
    // cos(a, b) = 0.6, cos(c, d) = 0.8 -> mean 0.7.
    const double avg = avg_similarity({{"q a", "q b"}, {"q c", "q d"}}, client);
    EXPECT_NEAR(avg, 0.7, 1e-9);

    const double same = avg_similarity({{"q a", "q a"}, {"q b", "q b"}}, client);
    EXPECT_NEAR(same, 1.0, 1e-9);
    EXPECT_THROW(avg_similarity({}, client), InputError);
}

TEST(AnnotationInstanceJson, ParsesAndValidates) {
    const auto inst = AnnotationInstance::from_json(
        nlohmann::json{{"id", 7},
                       {"span_text", "a span"},
                       {"question_text", "why?"},
                       {"error_type", "entity omission"},
                       {"source", "model"}},
        0);
    EXPECT_EQ(inst.id, 7u);
    EXPECT_EQ(inst.error_type, score::ErrorType::entity_omission);
    EXPECT_EQ(inst.source, "model");

    EXPECT_THROW(AnnotationInstance::from_json(nlohmann::json{{"id", 1}}, 0), InputError);
    EXPECT_THROW(AnnotationInstance::from_json(
                     nlohmann::json{{"span_text", "x"}, {"error_type", "bogus"}}, 0),
                 InputError);
}
