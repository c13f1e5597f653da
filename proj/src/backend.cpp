#include "hichunk/backend.hpp"

#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hichunk/text.hpp"
#include "http_client.hpp"

namespace hichunk {

std::string generate_with_retry(GenerationBackend& backend, const std::string& prompt, const RetryPolicy& policy) {
    auto backoff = policy.initial_backoff;
    int attempts = std::max(1, policy.attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            return backend.generate(prompt);
        } catch (const BackendError& e) {
            if (attempt >= attempts)
                throw BackendError(backend.name() + " failed after " + std::to_string(attempts) +
                                   " attempts: " + e.what());
        }
        if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
}

std::size_t MockBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::string MockBackend::generate(const std::string& prompt) {
    {
        std::lock_guard lock(mutex_);
        ++calls_;
    }
    if (rules_.latency.count() > 0) std::this_thread::sleep_for(rules_.latency);

    static const std::string kInputHeader = ">>> Input text:";
    auto body_start = prompt.rfind(kInputHeader);
    std::string_view body(prompt);
    if (body_start != std::string::npos) body.remove_prefix(body_start + kInputHeader.size());

    static const std::regex residual_re(R"(^\(L(\d+)\) @ )");
    int deepest_residual = 0;
    {
        std::istringstream in{std::string(body)};
        std::string line;
        while (std::getline(in, line)) {
            std::smatch m;
            if (std::regex_search(line, m, residual_re)) deepest_residual = std::max(deepest_residual, std::stoi(m[1]));
        }
    }

    std::string out;
    for (const auto& [line_no, text] : parse_numbered_lines(body)) {
        const MarkerRule* best = nullptr;
        for (const auto& rule : rules_.markers) {
            if (text.size() > rule.prefix.size() && text.compare(0, rule.prefix.size(), rule.prefix) == 0 &&
                text[rule.prefix.size()] == ' ' && (!best || rule.prefix.size() > best->prefix.size()))
                best = &rule;
        }
        if (!best) continue;
        out += std::to_string(line_no) + ", " + std::to_string(best->level) + ", True\n";
    }
    if (out.empty()) {
        int level = deepest_residual > 0 ? std::min(deepest_residual + 1, rules_.max_levels) : 1;
        out = "1, " + std::to_string(level) + ", False\n";
    }
    return out;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw BackendError("http backend needs a url");
}

std::string HttpBackend::generate(const std::string& prompt) {
    nlohmann::json req{{"model", config_.model},
                       {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                       {"temperature", config_.temperature}};
    std::string body;
    try {
        body = detail::post_json(config_.url, req.dump(), config_.api_key, config_.timeout);
    } catch (const detail::HttpError& e) {
        throw BackendError(e.what());
    }
    try {
        return nlohmann::json::parse(body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("malformed completion response: ") + e.what());
    }
}

}  // namespace hichunk
