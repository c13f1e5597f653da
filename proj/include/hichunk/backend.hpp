#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace hichunk {

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};  // doubled after each failure
};

// Text-generation backend used by the chunker. generate() must be safe to call from
// several threads at once.
class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    virtual std::string generate(const std::string& prompt) = 0;
    virtual std::string name() const = 0;
    virtual std::chrono::milliseconds timeout() const { return std::chrono::milliseconds{60000}; }
};

// Calls backend.generate with retries and exponential backoff. Rethrows the last
// BackendError once the attempts are exhausted.
std::string generate_with_retry(GenerationBackend& backend, const std::string& prompt, const RetryPolicy& policy);

// Prefix rule for the mock backend: a window line whose text starts with `prefix`
// followed by a space is a chunk point of `level`.
struct MarkerRule {
    std::string prefix;
    int level = 1;
};

struct MockRules {
    // Longest matching prefix wins.
    std::vector<MarkerRule> markers{{"#", 1}, {"##", 2}, {"###", 3}, {"####", 4}};
    int max_levels = 4;
    // Artificial per-call latency, for timing reports.
    std::chrono::microseconds latency{0};
};

// Deterministic stand-in for the chunking model. It reads the numbered window lines out
// of the prompt and marks every line that starts with a marker, as a title. A window
// without markers yields line 1 at level 1, or, when the prompt carries residual
// context, line 1 one level below the deepest residual line.
class MockBackend final : public GenerationBackend {
public:
    explicit MockBackend(MockRules rules = {}) : rules_(std::move(rules)) {}

    std::string generate(const std::string& prompt) override;
    std::string name() const override { return "mock"; }

    std::size_t calls() const;

private:
    MockRules rules_;
    mutable std::mutex mutex_;
    std::size_t calls_ = 0;
};

// Chat-completion endpoint: POST {model, messages: [{role: user, content}], temperature}
// -> {choices: [{message: {content}}]}.
struct HttpBackendConfig {
    std::string url;
    std::string model;
    std::string api_key;
    double temperature = 0.0;
    std::chrono::milliseconds timeout{120000};
};

class HttpBackend final : public GenerationBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    std::string generate(const std::string& prompt) override;
    std::string name() const override { return "http:" + config_.model; }
    std::chrono::milliseconds timeout() const override { return config_.timeout; }

private:
    HttpBackendConfig config_;
};

}  // namespace hichunk
