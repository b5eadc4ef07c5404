#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "lexirag/config.hpp"
#include "lexirag/http.hpp"

namespace lexirag::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitItemFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Runs one command line (without the program name). `transport` replaces
/// the HTTP client for backend calls when set.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
           const EnvLookup& env = ProcessEnv(), std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace lexirag::cli
