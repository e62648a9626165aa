#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uknow {

enum class ErrorKind {
  io,
  malformed_line,
  invalid_event,
  schema,
  duplicate_id,
  invalid_argument,
  undefined_similarity,
  dangling_owner,
  unknown_code,
  registry_violation,
  dangling_edge,
  corrupt_store,
  missing_manifest,
  divergence,
};

// Every recoverable failure in the library surfaces as an Error. The CLI maps
// these to the data-error exit status; anything else is an internal error.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::malformed_line: return "malformed-line";
    case ErrorKind::invalid_event: return "invalid-event";
    case ErrorKind::schema: return "schema";
    case ErrorKind::duplicate_id: return "duplicate-id";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::undefined_similarity: return "undefined-similarity";
    case ErrorKind::dangling_owner: return "dangling-owner";
    case ErrorKind::unknown_code: return "unknown-code";
    case ErrorKind::registry_violation: return "registry-violation";
    case ErrorKind::dangling_edge: return "dangling-edge";
    case ErrorKind::corrupt_store: return "corrupt-store";
    case ErrorKind::missing_manifest: return "missing-manifest";
    case ErrorKind::divergence: return "divergence";
  }
  return "unknown";
}

}  // namespace uknow
