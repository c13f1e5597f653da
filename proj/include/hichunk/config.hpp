#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hichunk/backend.hpp"
#include "hichunk/embedding.hpp"
#include "hichunk/eval.hpp"

namespace hichunk {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string backend = "mock";  // mock | http
    std::string backend_url;
    std::string backend_model = "hichunk";
    std::string backend_key_env = "HICHUNK_API_KEY";
    double temperature = 0.0;
    int backend_timeout_ms = 120000;
    int retry_attempts = 3;
    int retry_backoff_ms = 500;

    std::string embedder = "bow";  // bow | http
    std::string embedder_url;
    std::string embedder_model = "bge-m3";
    std::string embedder_key_env = "HICHUNK_EMBED_API_KEY";

    std::string tokenizer = "whitespace";
    std::size_t max_sentence_chars = 100;
    std::size_t window_tokens = 16384;
    std::size_t chunk_size = 200;
    std::size_t budget = 4096;
    int max_levels = 4;
    std::string strategy = "auto_merge";
    double sc_percentile = 10.0;
    int jobs = 1;

    // Sets one field from its textual value. Unknown keys and bad values throw ConfigError.
    void set(const std::string& key, const std::string& value);
    // Checks ranges and, for http backends, that the credential variables are set.
    void validate(bool needs_backend, bool needs_embedder) const;

    static std::vector<std::string> keys();
};

// "key = value" lines; blank lines and lines starting with '#' are ignored.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::string& path);

// Defaults, then file values, then flag values.
RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values);

std::unique_ptr<GenerationBackend> make_backend(const RunConfig& config);
std::unique_ptr<Embedder> make_embedder(const RunConfig& config);
PipelineEnv make_pipeline_env(const RunConfig& config, GenerationBackend* backend, const Embedder* embedder);

}  // namespace hichunk
