#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "rfp/transport.hpp"

namespace rfp::detail {

struct HttpResult {
  int status = 0;
  std::string body;
  std::optional<TransportError> error;
};

enum class HttpMethod { get, put, post };

// One blocking request bounded by `timeout`. Non-2xx statuses other than
// 401/403 are returned with error unset so callers can poll on 404.
HttpResult http_request(HttpMethod method, const std::string& url, const std::string& body,
                        const std::optional<std::string>& credentials,
                        std::chrono::microseconds timeout);

}  // namespace rfp::detail
