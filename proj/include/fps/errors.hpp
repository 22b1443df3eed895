#pragma once

#include <stdexcept>
#include <string>

namespace fps {

// Invalid or inconsistent configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Missing or malformed run artifacts. The CLI maps this to exit code 3.
class ArtifactError : public std::runtime_error {
 public:
  explicit ArtifactError(const std::string& what) : std::runtime_error(what) {}
};

enum class BackendErrorKind { network, http_status, parse_exhausted };

inline const char* to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::network: return "network";
    case BackendErrorKind::http_status: return "http_status";
    case BackendErrorKind::parse_exhausted: return "parse_exhausted";
  }
  return "unknown";
}

// A backend call failed after exhausting retries. The simulator absorbs this
// per agent-day: the agent keeps its previous opinion and the failure is
// recorded in the transcript.
class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  BackendErrorKind kind() const { return kind_; }

 private:
  BackendErrorKind kind_;
};

}  // namespace fps
