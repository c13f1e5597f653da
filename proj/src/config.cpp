#include "hichunk/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hichunk {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long long to_integer(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    }
}

std::size_t to_count(const std::string& key, const std::string& value) {
    auto v = to_integer(key, value);
    if (v <= 0) throw ConfigError(key + ": must be positive");
    return static_cast<std::size_t>(v);
}

double to_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

std::string env_or_empty(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    return v ? std::string(v) : std::string();
}

}  // namespace

std::vector<std::string> RunConfig::keys() {
    return {"backend",          "backend_url",     "backend_model", "backend_key_env",  "temperature",
            "backend_timeout_ms", "retry_attempts", "retry_backoff_ms", "embedder",      "embedder_url",
            "embedder_model",   "embedder_key_env", "tokenizer",    "max_sentence_chars", "window_tokens",
            "chunk_size",       "budget",          "max_levels",    "strategy",         "sc_percentile",
            "jobs"};
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "backend") {
        if (value != "mock" && value != "http") throw ConfigError("backend must be mock or http");
        backend = value;
    } else if (key == "backend_url") {
        backend_url = value;
    } else if (key == "backend_model") {
        backend_model = value;
    } else if (key == "backend_key_env") {
        backend_key_env = value;
    } else if (key == "temperature") {
        temperature = to_real(key, value);
    } else if (key == "backend_timeout_ms") {
        backend_timeout_ms = static_cast<int>(to_count(key, value));
    } else if (key == "retry_attempts") {
        retry_attempts = static_cast<int>(to_count(key, value));
    } else if (key == "retry_backoff_ms") {
        auto v = to_integer(key, value);
        if (v < 0) throw ConfigError("retry_backoff_ms must be >= 0");
        retry_backoff_ms = static_cast<int>(v);
    } else if (key == "embedder") {
        if (value != "bow" && value != "http") throw ConfigError("embedder must be bow or http");
        embedder = value;
    } else if (key == "embedder_url") {
        embedder_url = value;
    } else if (key == "embedder_model") {
        embedder_model = value;
    } else if (key == "embedder_key_env") {
        embedder_key_env = value;
    } else if (key == "tokenizer") {
        tokenizer = value;
    } else if (key == "max_sentence_chars") {
        max_sentence_chars = to_count(key, value);
    } else if (key == "window_tokens") {
        window_tokens = to_count(key, value);
    } else if (key == "chunk_size") {
        chunk_size = to_count(key, value);
    } else if (key == "budget") {
        budget = to_count(key, value);
    } else if (key == "max_levels") {
        max_levels = static_cast<int>(to_count(key, value));
    } else if (key == "strategy") {
        if (value != "flat" && value != "auto_merge") throw ConfigError("strategy must be flat or auto_merge");
        strategy = value;
    } else if (key == "sc_percentile") {
        sc_percentile = to_real(key, value);
    } else if (key == "jobs") {
        jobs = static_cast<int>(to_count(key, value));
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
}

void RunConfig::validate(bool needs_backend, bool needs_embedder) const {
    if (max_sentence_chars < 20) throw ConfigError("max_sentence_chars must be >= 20");
    if (!(sc_percentile > 0.0 && sc_percentile <= 100.0)) throw ConfigError("sc_percentile must be in (0, 100]");
    try {
        get_tokenizer(tokenizer);
    } catch (const UnknownTokenizerError& e) {
        throw ConfigError(e.what());
    }
    if (needs_backend && backend == "http") {
        if (backend_url.empty()) throw ConfigError("backend_url is required for the http backend");
        if (env_or_empty(backend_key_env).empty())
            throw ConfigError("environment variable " + backend_key_env + " is not set");
    }
    if (needs_embedder && embedder == "http") {
        if (embedder_url.empty()) throw ConfigError("embedder_url is required for the http embedder");
        if (env_or_empty(embedder_key_env).empty())
            throw ConfigError("environment variable " + embedder_key_env + " is not set");
    }
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> values;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        auto key = trim(t.substr(0, eq));
        auto value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        values[key] = value;
    }
    return values;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values) {
    RunConfig c;
    for (const auto& [k, v] : file_values) c.set(k, v);
    for (const auto& [k, v] : flag_values) c.set(k, v);
    return c;
}

std::unique_ptr<GenerationBackend> make_backend(const RunConfig& config) {
    if (config.backend == "mock") {
        MockRules rules;
        rules.max_levels = config.max_levels;
        return std::make_unique<MockBackend>(rules);
    }
    HttpBackendConfig http;
    http.url = config.backend_url;
    http.model = config.backend_model;
    http.api_key = env_or_empty(config.backend_key_env);
    http.temperature = config.temperature;
    http.timeout = std::chrono::milliseconds(config.backend_timeout_ms);
    return std::make_unique<HttpBackend>(http);
}

std::unique_ptr<Embedder> make_embedder(const RunConfig& config) {
    HttpEmbedderConfig http;
    http.url = config.embedder_url;
    http.model = config.embedder_model;
    http.api_key = env_or_empty(config.embedder_key_env);
    return make_embedder(config.embedder, http);
}

PipelineEnv make_pipeline_env(const RunConfig& config, GenerationBackend* backend, const Embedder* embedder) {
    PipelineEnv env;
    env.backend = backend;
    env.embedder = embedder;
    env.tokenizer = &get_tokenizer(config.tokenizer);
    env.inference.window_token_limit = config.window_tokens;
    env.inference.max_levels = config.max_levels;
    env.inference.retry.attempts = config.retry_attempts;
    env.inference.retry.initial_backoff = std::chrono::milliseconds(config.retry_backoff_ms);
    env.chunk_size = config.chunk_size;
    env.sc_percentile = config.sc_percentile;
    env.jobs = config.jobs;
    return env;
}

}  // namespace hichunk
