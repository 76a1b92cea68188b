#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "longsum/errors.hpp"
#include "longsum/text.hpp"

namespace longsum::llm {

struct GenerationRequest {
    std::string prompt;
    double temperature = 0.5;
    std::size_t max_output_tokens = 0;
    double top_p = 1.0;
};

struct GenerationResult {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

/// Provenance attached to a call; lands in the transcript for auditing.
struct CallMeta {
    std::string provenance;          // e.g. "hier:1:2-3" or "eval:sentence:7"
    std::size_t prompt_budget = 0;   // W - G_l the caller enforced, 0 if n/a
};

/// Raw completion/embedding transport. Implementations do not retry, rate
/// limit, or account usage; LlmClient layers those on.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;

    virtual std::string_view name() const noexcept = 0;
    virtual std::size_t context_window() const noexcept = 0;
    virtual const text::TokenCounter& counter() const noexcept = 0;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

// ---------------------------------------------------------------------------
// Usage accounting
// ---------------------------------------------------------------------------

struct UsageRecord {
    std::string backend;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    std::int64_t timestamp_ms = 0;  // unix epoch milliseconds
};

struct Price {
    double prompt_per_1k = 0.0;
    double completion_per_1k = 0.0;
};

/// Backend name -> USD price per 1K prompt/completion tokens.
class PriceTable {
public:
    PriceTable() = default;

    void set(const std::string& backend, Price price) { prices_[backend] = price; }

    const Price& get(const std::string& backend) const {
        auto it = prices_.find(backend);
        if (it == prices_.end()) throw ConfigError("no price entry for backend: " + backend);
        return it->second;
    }

    bool contains(const std::string& backend) const { return prices_.count(backend) > 0; }

    static PriceTable from_json(const nlohmann::json& j) {
        PriceTable table;
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& entry = it.value();
            table.set(it.key(), Price{entry.at("prompt_per_1k").get<double>(),
                                      entry.at("completion_per_1k").get<double>()});
        }
        return table;
    }

    static PriceTable load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open price table: " + path.string());
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }

private:
    std::map<std::string, Price> prices_;
};

/// Append-only per-call usage records; safe for concurrent append.
class UsageLedger {
public:
    UsageLedger() = default;
    UsageLedger(UsageLedger&& other) noexcept {
        std::lock_guard<std::mutex> lock(other.mutex_);
        records_ = std::move(other.records_);
    }

    void add(UsageRecord record) {
        std::lock_guard<std::mutex> lock(mutex_);
        records_.push_back(std::move(record));
    }

    std::vector<UsageRecord> records() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return records_;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return records_.size();
    }

    std::size_t total_prompt_tokens() const {
        std::lock_guard<std::mutex> lock(mutex_);
        std::size_t total = 0;
        for (const auto& r : records_) total += r.prompt_tokens;
        return total;
    }

    std::size_t total_completion_tokens() const {
        std::lock_guard<std::mutex> lock(mutex_);
        std::size_t total = 0;
        for (const auto& r : records_) total += r.completion_tokens;
        return total;
    }

    nlohmann::json to_json() const {
        nlohmann::json records_json = nlohmann::json::array();
        for (const auto& r : records()) {
            records_json.push_back({{"backend", r.backend},
                                    {"prompt_tokens", r.prompt_tokens},
                                    {"completion_tokens", r.completion_tokens},
                                    {"timestamp_ms", r.timestamp_ms}});
        }
        return nlohmann::json{{"schema_version", 1},
                              {"records", std::move(records_json)},
                              {"total_prompt_tokens", total_prompt_tokens()},
                              {"total_completion_tokens", total_completion_tokens()}};
    }

    static UsageLedger from_json(const nlohmann::json& j) {
        UsageLedger ledger;
        for (const auto& r : j.at("records")) {
            ledger.add(UsageRecord{r.at("backend").get<std::string>(),
                                   r.at("prompt_tokens").get<std::size_t>(),
                                   r.at("completion_tokens").get<std::size_t>(),
                                   r.value("timestamp_ms", std::int64_t{0})});
        }
        return ledger;
    }

private:
    mutable std::mutex mutex_;
    std::vector<UsageRecord> records_;
};

/// Sum of (prompt_tokens * prompt_price + completion_tokens * completion_price) / 1000.
inline double estimate_cost(const UsageLedger& ledger, const PriceTable& prices) {
    double total = 0.0;
    for (const auto& r : ledger.records()) {
        const Price& p = prices.get(r.backend);
        total += (static_cast<double>(r.prompt_tokens) * p.prompt_per_1k +
                  static_cast<double>(r.completion_tokens) * p.completion_per_1k) /
                 1000.0;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Retry and rate limiting
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{200};
    std::chrono::milliseconds max_delay{10000};
    double jitter = 0.5;  // delay is scaled by uniform [1-jitter, 1+jitter]
    std::uint64_t seed = 0x5eedf00dULL;

    std::chrono::milliseconds delay_for_attempt(int attempt, std::mt19937_64& rng) const {
        const double exp = std::pow(2.0, static_cast<double>(attempt));
        double ms = static_cast<double>(base_delay.count()) * exp;
        ms = std::min(ms, static_cast<double>(max_delay.count()));
        if (jitter > 0.0) {
            std::uniform_real_distribution<double> dist(1.0 - jitter, 1.0 + jitter);
            ms *= dist(rng);
        }
        return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
    }
};

/// Token-bucket limiter covering both requests/min and tokens/min.
/// A zero limit disables that bucket. The clock is injectable for tests.
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;
    using NowFn = std::function<Clock::time_point()>;
    using SleepFn = std::function<void(std::chrono::milliseconds)>;

    RateLimiter(double requests_per_min = 0.0, double tokens_per_min = 0.0,
                NowFn now = [] { return Clock::now(); },
                SleepFn sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
        : requests_(requests_per_min, requests_per_min),
          tokens_(tokens_per_min, tokens_per_min),
          now_(std::move(now)),
          sleep_(std::move(sleep)),
          last_refill_(now_()) {}

    /// Blocks until one request plus `tokens` tokens are permitted. Demands
    /// beyond one minute's capacity are clamped to the bucket size so a
    /// single oversized request cannot stall forever.
    void acquire(std::size_t tokens) {
        std::unique_lock<std::mutex> lock(mutex_);
        const double token_demand =
            tokens_.rate_per_min > 0.0
                ? std::min(static_cast<double>(tokens), tokens_.rate_per_min)
                : static_cast<double>(tokens);
        for (;;) {
            refill();
            const auto request_wait = requests_.wait_for(1.0);
            const auto token_wait = tokens_.wait_for(token_demand);
            const auto wait = std::max(request_wait, token_wait);
            if (wait <= std::chrono::milliseconds::zero()) {
                requests_.take(1.0);
                tokens_.take(token_demand);
                return;
            }
            lock.unlock();
            sleep_(wait);
            lock.lock();
        }
    }

private:
    struct Bucket {
        Bucket(double per_min, double capacity) : rate_per_min(per_min), level(capacity) {}

        double rate_per_min = 0.0;  // 0 disables
        double level = 0.0;

        void refill(double minutes) {
            if (rate_per_min <= 0.0) return;
            level = std::min(rate_per_min, level + minutes * rate_per_min);
        }
        std::chrono::milliseconds wait_for(double amount) const {
            if (rate_per_min <= 0.0 || level >= amount) return std::chrono::milliseconds::zero();
            const double deficit = amount - level;
            const double minutes = deficit / rate_per_min;
            return std::chrono::milliseconds(static_cast<std::int64_t>(std::ceil(minutes * 60000.0)));
        }
        void take(double amount) {
            if (rate_per_min <= 0.0) return;
            level -= amount;
        }
    };

    void refill() {
        const auto now = now_();
        const double minutes =
            std::chrono::duration_cast<std::chrono::duration<double, std::ratio<60>>>(now -
                                                                                      last_refill_)
                .count();
        if (minutes > 0) {
            requests_.refill(minutes);
            tokens_.refill(minutes);
            last_refill_ = now;
        }
    }

    std::mutex mutex_;
    Bucket requests_;
    Bucket tokens_;
    NowFn now_;
    SleepFn sleep_;
    Clock::time_point last_refill_;
};

// ---------------------------------------------------------------------------
// Transcript
// ---------------------------------------------------------------------------

/// JSON-lines audit log of every request/response; also kept in memory so
/// tests can assert against it without re-reading the file.
class TranscriptLog {
public:
    TranscriptLog() = default;

    explicit TranscriptLog(std::filesystem::path path) : path_(std::move(path)) {
        if (!path_.empty()) {
            std::filesystem::create_directories(path_.parent_path().empty()
                                                    ? std::filesystem::path(".")
                                                    : path_.parent_path());
            file_.open(path_, std::ios::trunc);
            if (!file_) throw InputError("cannot open transcript log: " + path_.string());
        }
    }

    void record(nlohmann::json entry) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (file_.is_open()) {
            file_ << entry.dump() << '\n';
            file_.flush();
        }
        entries_.push_back(std::move(entry));
    }

    std::vector<nlohmann::json> entries() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return entries_;
    }

    static std::vector<nlohmann::json> read(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open transcript log: " + path.string());
        std::vector<nlohmann::json> entries;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            entries.push_back(nlohmann::json::parse(line));
        }
        return entries;
    }

private:
    mutable std::mutex mutex_;
    std::filesystem::path path_;
    std::ofstream file_;
    std::vector<nlohmann::json> entries_;
};

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

/// Deterministic replay backend for tests and offline runs. Responses come
/// from substring-keyed rules (checked in insertion order) or an ordered
/// queue; an exhausted script is an error. Access is serialized so replay
/// order is stable under concurrency.
class ScriptedBackend final : public CompletionBackend {
public:
    struct Options {
        std::string name = "scripted";
        std::size_t context_window = 8192;
        double tokens_per_word = 1.0;
        std::size_t embedding_dim = 16;
    };

    ScriptedBackend() : ScriptedBackend(Options{}) {}
    explicit ScriptedBackend(Options options)
        : options_(std::move(options)), counter_(options_.tokens_per_word) {}

    std::string_view name() const noexcept override { return options_.name; }
    std::size_t context_window() const noexcept override { return options_.context_window; }
    const text::TokenCounter& counter() const noexcept override { return counter_; }

    /// Respond with `response` whenever the prompt contains `key`.
    /// `times` < 0 means unlimited.
    void add_rule(std::string key, std::string response, int times = -1) {
        std::lock_guard<std::mutex> lock(mutex_);
        rules_.push_back(Rule{std::move(key), std::move(response), times});
    }

    /// Queue a response consumed in order when no rule matches.
    void push_response(std::string response) {
        std::lock_guard<std::mutex> lock(mutex_);
        queue_.push_back(std::move(response));
    }

    /// Next `n` generate calls throw TransportError (retryable).
    void fail_next(int n, std::string message = "injected transient failure") {
        std::lock_guard<std::mutex> lock(mutex_);
        fail_remaining_ = n;
        fail_message_ = std::move(message);
    }

    /// Throw a fatal BackendError once `n` generate calls have succeeded.
    /// Simulates a killed run for resume testing. 0 disables.
    void abort_after(std::size_t n) {
        std::lock_guard<std::mutex> lock(mutex_);
        abort_after_ = n;
    }

    void set_embedding(const std::string& text, std::vector<double> vec) {
        std::lock_guard<std::mutex> lock(mutex_);
        canned_embeddings_[text] = std::move(vec);
    }

    std::size_t generate_calls() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return generate_calls_;
    }

    GenerationResult generate(const GenerationRequest& request) override {
        std::lock_guard<std::mutex> lock(mutex_);
        if (fail_remaining_ > 0) {
            --fail_remaining_;
            throw TransportError(fail_message_);
        }
        if (abort_after_ > 0 && generate_calls_ >= abort_after_)
            throw BackendError("scripted backend aborted after " +
                               std::to_string(abort_after_) + " calls");
        std::string response;
        bool found = false;
        for (auto& rule : rules_) {
            if (rule.times == 0) continue;
            if (request.prompt.find(rule.key) != std::string::npos) {
                response = rule.response;
                if (rule.times > 0) --rule.times;
                found = true;
                break;
            }
        }
        if (!found) {
            if (queue_.empty())
                throw ScriptExhaustedError("scripted backend has no response for prompt: " +
                                           request.prompt.substr(0, 80));
            response = std::move(queue_.front());
            queue_.pop_front();
        }
        ++generate_calls_;
        GenerationResult result;
        result.prompt_tokens = counter_.count(request.prompt);
        result.completion_tokens = counter_.count(response);
        result.text = std::move(response);
        return result;
    }

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
        std::lock_guard<std::mutex> lock(mutex_);
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            if (t.empty()) throw InputError("cannot embed empty text");
            auto it = canned_embeddings_.find(t);
            out.push_back(it != canned_embeddings_.end() ? it->second : pseudo_embedding(t));
        }
        return out;
    }

    /// Hash-seeded unit vector; identical text always maps to the same vector.
    std::vector<double> pseudo_embedding(std::string_view text) const {
        std::uint64_t state = text::fnv1a64(text);
        auto next = [&state]() {  // splitmix64
            state += 0x9E3779B97F4A7C15ULL;
            std::uint64_t z = state;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            return z ^ (z >> 31);
        };
        std::vector<double> vec(options_.embedding_dim);
        double norm_sq = 0.0;
        for (auto& v : vec) {
            v = (static_cast<double>(next() >> 11) / 9007199254740992.0) * 2.0 - 1.0;
            norm_sq += v * v;
        }
        const double norm = std::sqrt(norm_sq);
        for (auto& v : vec) v /= norm;
        return vec;
    }

    /// Script file schema: {"name", "context_window", "tokens_per_word",
    /// "embedding_dim", "rules": [{"contains", "response", "times"}],
    /// "queue": [...], "embeddings": {text: [...]}, "fail_first": n,
    /// "abort_after": n}
    static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& j) {
        Options options;
        options.name = j.value("name", options.name);
        options.context_window = j.value("context_window", options.context_window);
        options.tokens_per_word = j.value("tokens_per_word", options.tokens_per_word);
        options.embedding_dim = j.value("embedding_dim", options.embedding_dim);
        auto backend = std::make_shared<ScriptedBackend>(options);
        if (j.contains("rules"))
            for (const auto& r : j.at("rules"))
                backend->add_rule(r.at("contains").get<std::string>(),
                                  r.at("response").get<std::string>(), r.value("times", -1));
        if (j.contains("queue"))
            for (const auto& q : j.at("queue")) backend->push_response(q.get<std::string>());
        if (j.contains("embeddings"))
            for (auto it = j.at("embeddings").begin(); it != j.at("embeddings").end(); ++it)
                backend->set_embedding(it.key(), it.value().get<std::vector<double>>());
        if (j.contains("fail_first")) backend->fail_next(j.at("fail_first").get<int>());
        if (j.contains("abort_after")) backend->abort_after(j.at("abort_after").get<std::size_t>());
        return backend;
    }

private:
    struct Rule {
        std::string key;
        std::string response;
        int times = -1;
    };

    Options options_;
    text::WordTokenCounter counter_;
    mutable std::mutex mutex_;
    std::vector<Rule> rules_;
    std::deque<std::string> queue_;
    std::map<std::string, std::vector<double>, std::less<>> canned_embeddings_;
    int fail_remaining_ = 0;
    std::string fail_message_;
    std::size_t abort_after_ = 0;
    std::size_t generate_calls_ = 0;
};

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

struct ClientOptions {
    RetryPolicy retry;
    double requests_per_min = 0.0;  // 0 = unlimited
    double tokens_per_min = 0.0;
    bool sleep_on_retry = true;  // tests disable to avoid wall-clock waits
};

/// Backend wrapper adding the context-window check, rate limiting, retry with
/// jittered exponential backoff, usage accounting, and transcript logging.
/// Failed attempts that returned no usage never touch the ledger.
class LlmClient {
public:
    LlmClient(std::shared_ptr<CompletionBackend> backend, ClientOptions options = {},
              std::shared_ptr<UsageLedger> ledger = nullptr,
              std::shared_ptr<TranscriptLog> transcript = nullptr)
        : backend_(std::move(backend)),
          options_(options),
          ledger_(ledger ? std::move(ledger) : std::make_shared<UsageLedger>()),
          transcript_(std::move(transcript)),
          limiter_(options.requests_per_min, options.tokens_per_min),
          rng_(options.retry.seed) {}

    CompletionBackend& backend() noexcept { return *backend_; }
    const CompletionBackend& backend() const noexcept { return *backend_; }
    UsageLedger& ledger() noexcept { return *ledger_; }
    std::shared_ptr<UsageLedger> ledger_ptr() const noexcept { return ledger_; }
    std::shared_ptr<TranscriptLog> transcript() const noexcept { return transcript_; }

    GenerationResult generate(const GenerationRequest& request, const CallMeta& meta = {}) {
        const std::size_t prompt_tokens = backend_->counter().count(request.prompt);
        const std::size_t window = backend_->context_window();
        if (prompt_tokens + request.max_output_tokens > window)
            throw ContextOverflowError(
                "request exceeds context window: " + std::to_string(prompt_tokens) + " prompt + " +
                std::to_string(request.max_output_tokens) + " output > W=" + std::to_string(window) +
                (meta.provenance.empty() ? "" : " at " + meta.provenance));

        limiter_.acquire(prompt_tokens + request.max_output_tokens);
        GenerationResult result = with_retry(
            [&] { return backend_->generate(request); }, meta);

        ledger_->add(UsageRecord{std::string(backend_->name()), result.prompt_tokens,
                                 result.completion_tokens, now_ms()});
        if (transcript_) {
            transcript_->record(nlohmann::json{{"kind", "generate"},
                                               {"backend", std::string(backend_->name())},
                                               {"provenance", meta.provenance},
                                               {"prompt_budget", meta.prompt_budget},
                                               {"prompt", request.prompt},
                                               {"response", result.text},
                                               {"temperature", request.temperature},
                                               {"top_p", request.top_p},
                                               {"max_output_tokens", request.max_output_tokens},
                                               {"prompt_tokens", result.prompt_tokens},
                                               {"completion_tokens", result.completion_tokens},
                                               {"timestamp_ms", now_ms()}});
        }
        return result;
    }

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                           const CallMeta& meta = {}) {
        std::size_t total_tokens = 0;
        for (const auto& t : texts) total_tokens += backend_->counter().count(t);
        limiter_.acquire(total_tokens);
        auto vectors = with_retry([&] { return backend_->embed(texts); }, meta);

        ledger_->add(
            UsageRecord{std::string(backend_->name()) + "/embed", total_tokens, 0, now_ms()});
        if (transcript_) {
            transcript_->record(nlohmann::json{{"kind", "embed"},
                                               {"backend", std::string(backend_->name())},
                                               {"provenance", meta.provenance},
                                               {"texts", texts},
                                               {"dim", vectors.empty() ? 0 : vectors[0].size()},
                                               {"prompt_tokens", total_tokens},
                                               {"timestamp_ms", now_ms()}});
        }
        return vectors;
    }

private:
    template <typename Fn>
    auto with_retry(Fn&& fn, const CallMeta& meta) -> decltype(fn()) {
        std::string last_error;
        for (int attempt = 0; attempt < options_.retry.max_attempts; ++attempt) {
            try {
                return fn();
            } catch (const TransportError& e) {
                last_error = e.what();
                if (attempt + 1 >= options_.retry.max_attempts) break;
                if (options_.sleep_on_retry) {
                    std::chrono::milliseconds delay;
                    {
                        std::lock_guard<std::mutex> lock(rng_mutex_);
                        delay = options_.retry.delay_for_attempt(attempt, rng_);
                    }
                    std::this_thread::sleep_for(delay);
                }
            }
        }
        throw TransportExhaustedError(
            "transport failed after " + std::to_string(options_.retry.max_attempts) +
            " attempts: " + last_error +
            (meta.provenance.empty() ? "" : " at " + meta.provenance));
    }

    static std::int64_t now_ms() {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    }

    std::shared_ptr<CompletionBackend> backend_;
    ClientOptions options_;
    std::shared_ptr<UsageLedger> ledger_;
    std::shared_ptr<TranscriptLog> transcript_;
    RateLimiter limiter_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
};

}  // namespace longsum::llm
