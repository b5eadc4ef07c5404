#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lexirag/error.hpp"

namespace lexirag {

struct HttpRequest {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
  std::chrono::milliseconds timeout{30000};
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// POST-only client seam. Implementations throw Error(kTimeout) or
// Error(kNetwork) when no HTTP response was obtained; any response, whatever
// its status, is returned.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse Post(const HttpRequest& request) = 0;
};

std::shared_ptr<HttpTransport> MakeDefaultTransport();

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

void DefaultSleep(std::chrono::milliseconds d);

/// Runs `op`, retrying on kTimeout/kNetwork with exponential backoff.
/// Other errors propagate immediately.
template <typename Op>
auto WithRetries(const RetryPolicy& policy, const Sleeper& sleep, Op&& op)
    -> decltype(op()) {
  auto backoff = policy.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return op();
    } catch (const Error& e) {
      const bool retryable = e.code() == ErrorCode::kTimeout ||
                             e.code() == ErrorCode::kNetwork;
      if (!retryable || attempt >= policy.max_retries) throw;
    }
    if (sleep) sleep(backoff);
    backoff = std::chrono::milliseconds(static_cast<long long>(
        static_cast<double>(backoff.count()) * policy.multiplier));
  }
}

}  // namespace lexirag
