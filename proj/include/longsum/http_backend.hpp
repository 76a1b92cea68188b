#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "longsum/errors.hpp"
#include "longsum/llm.hpp"
#include "longsum/text.hpp"

namespace longsum::llm {

/// OpenAI-compatible chat-completions/embeddings backend. Each prompt goes out
/// as a single user message. Connection failures, 408/429, and 5xx statuses
/// surface as TransportError so the client retries them; other statuses are
/// fatal BackendErrors.
class HttpBackend final : public CompletionBackend {
public:
    struct Config {
        std::string base_url;             // e.g. "http://localhost:8000/v1"
        std::string api_key;
        std::string model;
        std::string embedding_model;      // defaults to `model`
        std::string name;                 // ledger/price-table key; defaults to `model`
        std::size_t context_window = 8192;
        double tokens_per_word = 1.33;    // approximation for budget checks
        int timeout_seconds = 120;
    };

    explicit HttpBackend(Config config)
        : config_(std::move(config)), counter_(config_.tokens_per_word) {
        if (config_.base_url.empty()) throw ConfigError("http backend requires a base URL");
        if (config_.model.empty()) throw ConfigError("http backend requires a model name");
        if (config_.name.empty()) config_.name = config_.model;
        if (config_.embedding_model.empty()) config_.embedding_model = config_.model;
        split_url(config_.base_url, origin_, path_prefix_);
    }

    std::string_view name() const noexcept override { return config_.name; }
    std::size_t context_window() const noexcept override { return config_.context_window; }
    const text::TokenCounter& counter() const noexcept override { return counter_; }

    GenerationResult generate(const GenerationRequest& request) override {
        nlohmann::json payload{
            {"model", config_.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
            {"temperature", request.temperature},
            {"top_p", request.top_p},
        };
        if (request.max_output_tokens > 0) payload["max_tokens"] = request.max_output_tokens;

        const nlohmann::json body = post_json("/chat/completions", payload);
        GenerationResult result;
        try {
            result.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed chat completion response: ") + e.what());
        }
        if (body.contains("usage")) {
            const auto& usage = body.at("usage");
            result.prompt_tokens = usage.value("prompt_tokens", std::size_t{0});
            result.completion_tokens = usage.value("completion_tokens", std::size_t{0});
        }
        if (result.prompt_tokens == 0) result.prompt_tokens = counter_.count(request.prompt);
        if (result.completion_tokens == 0) result.completion_tokens = counter_.count(result.text);
        return result;
    }

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
        for (const auto& t : texts)
            if (t.empty()) throw InputError("cannot embed empty text");
        const nlohmann::json body =
            post_json("/embeddings", {{"model", config_.embedding_model}, {"input", texts}});
        std::vector<std::vector<double>> out(texts.size());
        try {
            for (const auto& item : body.at("data")) {
                const auto index = item.at("index").get<std::size_t>();
                if (index >= out.size()) throw BackendError("embedding index out of range");
                out[index] = item.at("embedding").get<std::vector<double>>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed embeddings response: ") + e.what());
        }
        return out;
    }

private:
    nlohmann::json post_json(const std::string& endpoint, const nlohmann::json& payload) {
        httplib::Client client(origin_);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);

        const auto res =
            client.Post(path_prefix_ + endpoint, headers, payload.dump(), "application/json");
        if (!res)
            throw TransportError("connection to " + origin_ +
                                 " failed: " + httplib::to_string(res.error()));
        if (res->status == 408 || res->status == 429 || res->status >= 500)
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint +
                                 ": " + res->body.substr(0, 200));
        if (res->status < 200 || res->status >= 300)
            throw BackendError("HTTP " + std::to_string(res->status) + " from " + endpoint + ": " +
                               res->body.substr(0, 200));
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("response is not valid JSON: ") + e.what());
        }
    }

    // "http://host:port/v1" -> origin "http://host:port", prefix "/v1"
    static void split_url(const std::string& url, std::string& origin, std::string& prefix) {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw ConfigError("base URL must include a scheme: " + url);
        const auto path_start = url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            origin = url;
            prefix.clear();
        } else {
            origin = url.substr(0, path_start);
            prefix = url.substr(path_start);
            while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        }
    }

    Config config_;
    text::WordTokenCounter counter_;
    std::string origin_;
    std::string path_prefix_;
};

}  // namespace longsum::llm
