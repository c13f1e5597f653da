#pragma once

#include <chrono>
#include <stdexcept>
#include <string>

namespace hichunk::detail {

class HttpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// POSTs a JSON body and returns the response body. Throws HttpError on transport
// failure or a non-2xx status.
std::string post_json(const std::string& url, const std::string& body, const std::string& bearer_token,
                      std::chrono::milliseconds timeout);

}  // namespace hichunk::detail
