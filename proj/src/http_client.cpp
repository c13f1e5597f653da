#include "http_client.hpp"

#include <httplib.h>

namespace hichunk::detail {

namespace {

struct SplitUrl {
    std::string origin;
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw HttpError("url has no scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string post_json(const std::string& url, const std::string& body, const std::string& bearer_token,
                      std::chrono::milliseconds timeout) {
    auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    if (!client.is_valid()) throw HttpError("unsupported url: " + url);
    auto secs = timeout.count() / 1000;
    auto usecs = (timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) throw HttpError("request to " + url + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw HttpError("request to " + url + " returned HTTP " + std::to_string(res->status));
    return res->body;
}

}  // namespace hichunk::detail
