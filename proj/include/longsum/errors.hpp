#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace longsum {

// Error categories map 1:1 onto CLI exit codes (see README).
enum class ErrorCategory {
    config = 2,   // bad configuration or arguments
    input = 3,    // unreadable/empty/ill-formed input files
    backend = 4,  // LLM backend or transport failure
    budget = 5,   // token budget violated or infeasible
};

inline constexpr const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::input: return "input";
        case ErrorCategory::backend: return "backend";
        case ErrorCategory::budget: return "budget";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }
    int exit_code() const noexcept { return static_cast<int>(category_); }

private:
    ErrorCategory category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(ErrorCategory::config, message) {}
};

class InputError : public Error {
public:
    explicit InputError(const std::string& message) : Error(ErrorCategory::input, message) {}
};

class BackendError : public Error {
public:
    explicit BackendError(const std::string& message) : Error(ErrorCategory::backend, message) {}
};

class BudgetError : public Error {
public:
    explicit BudgetError(const std::string& message) : Error(ErrorCategory::budget, message) {}
};

// A transient transport failure; the client retries these with backoff.
class TransportError : public BackendError {
public:
    explicit TransportError(const std::string& message) : BackendError(message) {}
};

// Raised once the retry budget for transient failures is exhausted.
class TransportExhaustedError : public BackendError {
public:
    explicit TransportExhaustedError(const std::string& message) : BackendError(message) {}
};

// Scripted backend ran out of canned responses.
class ScriptExhaustedError : public BackendError {
public:
    explicit ScriptExhaustedError(const std::string& message) : BackendError(message) {}
};

// Request would not fit the backend context window W.
class ContextOverflowError : public BudgetError {
public:
    explicit ContextOverflowError(const std::string& message) : BudgetError(message) {}
};

}  // namespace longsum
